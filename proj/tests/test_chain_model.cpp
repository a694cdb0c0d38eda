#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "test_support.hpp"
#include "voidp/error.hpp"
#include "voidp/oracles.hpp"

using namespace voidp;
using voidp::testing::random_chain;
using voidp::testing::sym3;

namespace {

void check_close(std::span<const double> got, std::span<const double> want, double tol = 1e-9) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) < tol);
}

bool all_close(std::span<const double> a, std::span<const double> b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > tol) return false;
  }
  return true;
}

// Random consistent evidence: draw a full assignment and keep a random subset.
Evidence random_evidence(const ChainModel& m, Mode mode, std::mt19937_64& rng) {
  const auto x = sample(m, rng);
  std::vector<Observation> obs;
  for (Index j = 1; j <= m.size(); ++j) {
    if (rng() % 3 == 0) obs.push_back({j, x[static_cast<std::size_t>(j - 1)]});
  }
  return Evidence(obs, mode);
}

}  // namespace

TEST_CASE("validate_model reports violations with locations") {
  CHECK(validate_model(sym3()).ok());

  auto bad = sym3();
  bad.transitions[0](0, 0) = 0.7;
  bad.transitions[0](0, 1) = 0.2;
  const auto report = validate_model(bad);
  REQUIRE_FALSE(report.ok());
  CHECK(report.violations[0].find("row sum 0.9 at step 1") != std::string::npos);

  auto mismatch = sym3();
  mismatch.transitions[1] = Matrix{{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}};
  const auto dims = validate_model(mismatch);
  REQUIRE_FALSE(dims.ok());
  CHECK(dims.violations[0].find("dimension") != std::string::npos);
  CHECK_THROWS_AS(require_valid(mismatch), ValidationError);
}

TEST_CASE("posterior_marginal on SYM3") {
  const auto m = sym3();
  check_close(posterior_marginal(m, Evidence{}, 2).p, std::vector{0.5, 0.5});
  for (Mode mode : {Mode::Filtering, Mode::Smoothing}) {
    check_close(posterior_marginal(m, Evidence({{1, 0}}, mode), 2).p, std::vector{0.75, 0.25});
  }
  check_close(posterior_marginal(m, Evidence({{1, 0}, {3, 0}}, Mode::Smoothing), 2).p, std::vector{0.9, 0.1});
  check_close(posterior_marginal(m, Evidence({{3, 0}}, Mode::Filtering), 2).p, std::vector{0.5, 0.5});
  check_close(posterior_marginal(m, Evidence({{2, 1}}), 2).p, std::vector{0.0, 1.0});
}

TEST_CASE("zero-probability evidence is a typed error") {
  ChainModel m = ChainModel::stationary({1.0, 0.0}, Matrix::identity(2), 3);
  CHECK_THROWS_AS(posterior_marginal(m, Evidence({{3, 1}}), 2), ZeroProbabilityEvidence);
  CHECK_THROWS_AS(max_marginal(m, Evidence({{1, 1}}), 2), ZeroProbabilityEvidence);
}

TEST_CASE("pairwise_posterior on SYM3") {
  const auto m = sym3();
  check_close(pairwise_posterior(m, Evidence{}, 1, 2).data(), std::vector{0.375, 0.125, 0.125, 0.375});
  check_close(pairwise_posterior(m, Evidence{}, 1, 3).data(), std::vector{0.3125, 0.1875, 0.1875, 0.3125});
  check_close(pairwise_posterior(m, Evidence({{2, 0}}), 1, 3).data(), std::vector{0.5625, 0.1875, 0.1875, 0.0625});
  CHECK_THROWS_AS(pairwise_posterior(m, Evidence{}, 2, 2), ValidationError);
}

TEST_CASE("max_marginal on SYM3 and deterministic chains") {
  const auto m = sym3();
  check_close(max_marginal(m, Evidence{}, 2).values, std::vector{0.28125, 0.28125});
  check_close(max_marginal(m, Evidence({{1, 0}}), 2).values, std::vector{0.5625, 0.1875});

  ChainModel det = ChainModel::stationary({0.0, 1.0}, Matrix{{0.0, 1.0}, {1.0, 0.0}}, 4);
  check_close(max_marginal(det, Evidence{}, 3).values, std::vector{0.0, 1.0});
}

TEST_CASE("sampling") {
  ChainModel det = ChainModel::stationary({0.0, 1.0}, Matrix{{0.0, 1.0}, {1.0, 0.0}}, 4);
  std::mt19937_64 rng(7);
  CHECK(sample(det, rng) == std::vector<State>{1, 0, 1, 0});

  const auto m = sym3();
  std::mt19937_64 rng1(1);
  int first0 = 0;
  int both0 = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const auto x = sample(m, rng1);
    if (x[0] == 0) {
      ++first0;
      if (x[1] == 0) ++both0;
    }
  }
  CHECK(std::abs(first0 / double(draws) - 0.5) < 0.01);
  CHECK(std::abs(both0 / double(first0) - 0.75) < 0.02);

  std::mt19937_64 a(3);
  std::mt19937_64 b(3);
  CHECK(sample(m, a) == sample(m, b));
}

TEST_CASE("fold_hmm") {
  const auto m = sym3();
  HmmModel identity{m, {Matrix::identity(2), Matrix::identity(2), Matrix::identity(2)}};
  const auto folded = fold_hmm(identity, std::vector<State>{0, 0, 0});
  check_close(folded.prior, std::vector{1.0, 0.0});
  for (const auto& t : folded.transitions) CHECK(t(0, 0) == doctest::Approx(1.0));

  HmmModel flat{m, std::vector<Matrix>(3, Matrix{{0.5, 0.5}, {0.5, 0.5}})};
  const auto same = fold_hmm(flat, std::vector<State>{1, 0, 1});
  check_close(same.prior, m.prior);
  for (int i = 0; i < 2; ++i) check_close(same.transitions[i].data(), m.transitions[i].data());

  CHECK_THROWS_AS(fold_hmm(flat, std::vector<State>{0, 2, 0}), ValidationError);
  ChainModel stuck = ChainModel::stationary({1.0, 0.0}, Matrix::identity(2), 3);
  HmmModel exact{stuck, std::vector<Matrix>(3, Matrix::identity(2))};
  CHECK_THROWS_AS(fold_hmm(exact, std::vector<State>{1, 1, 1}), ZeroProbabilityEvidence);
}

// Posterior of X_j given all emissions, by enumerating the joint over (X, Y).
std::vector<double> hmm_oracle_posterior(const HmmModel& hmm, const std::vector<State>& y, Index j) {
  const auto joint = joint_from_chain(hmm.hidden);
  std::vector<double> post(static_cast<std::size_t>(hmm.hidden.states(j)), 0.0);
  std::vector<int> x(static_cast<std::size_t>(joint.size()), 0);
  for (double p : joint.table) {
    double w = p;
    for (int i = 0; i < joint.size(); ++i) w *= hmm.emissions[static_cast<std::size_t>(i)](x[i], y[i]);
    post[static_cast<std::size_t>(x[static_cast<std::size_t>(j - 1)])] += w;
    for (int i = joint.size() - 1; i >= 0; --i) {
      if (++x[static_cast<std::size_t>(i)] < joint.domains[static_cast<std::size_t>(i)]) break;
      x[static_cast<std::size_t>(i)] = 0;
    }
  }
  const double z = std::accumulate(post.begin(), post.end(), 0.0);
  for (double& v : post) v /= z;
  return post;
}

TEST_CASE("fold_hmm matches enumerated HMM posteriors") {
  HmmModel sym{sym3(), std::vector<Matrix>(3, Matrix{{0.9, 0.1}, {0.1, 0.9}})};
  const std::vector<State> y0{0, 0, 0};
  const auto folded = fold_hmm(sym, y0);
  for (Index j = 1; j <= 3; ++j) {
    check_close(posterior_marginal(folded, Evidence{}, j).p, hmm_oracle_posterior(sym, y0, j));
  }

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    HmmModel hmm{random_chain(n, 3, rng, 0.0), {}};
    std::vector<State> y;
    for (Index j = 1; j <= n; ++j) {
      const int e = 2 + static_cast<int>(rng() % 2);
      Matrix em(static_cast<std::size_t>(hmm.hidden.states(j)), static_cast<std::size_t>(e));
      for (std::size_t r = 0; r < em.rows(); ++r) {
        const auto row = voidp::testing::random_simplex(e, rng);
        for (int c = 0; c < e; ++c) em(r, static_cast<std::size_t>(c)) = row[static_cast<std::size_t>(c)];
      }
      hmm.emissions.push_back(em);
      y.push_back(static_cast<State>(rng() % static_cast<unsigned>(e)));
    }
    const auto f = fold_hmm(hmm, y);
    REQUIRE(validate_model(f).ok());
    for (Index j = 1; j <= n; ++j) {
      CHECK(all_close(posterior_marginal(f, Evidence{}, j).p, hmm_oracle_posterior(hmm, y, j), 1e-9));
    }
  }
}

TEST_CASE("inference agrees with explicit-joint enumeration") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 8);
    const auto m = random_chain(n, 3, rng);
    const auto joint = joint_from_chain(m);
    const double total = std::accumulate(joint.table.begin(), joint.table.end(), 0.0);
    CHECK(std::abs(total - 1.0) < 1e-12);
    for (Mode mode : {Mode::Filtering, Mode::Smoothing}) {
      const auto ev = random_evidence(m, mode, rng);
      for (Index j = 1; j <= n; ++j) {
        const auto p = posterior_marginal(m, ev, j);
        CHECK(all_close(p.p, oracle_marginal(joint, ev, j).p, 1e-9));
        CHECK(std::abs(std::accumulate(p.p.begin(), p.p.end(), 0.0) - 1.0) < 1e-9);
        CHECK(all_close(max_marginal(m, ev, j).values, oracle_max_marginal(joint, ev, j).values, 1e-9));
        CHECK(all_close(posterior_marginal(m, ev, j, {.log_space = true}).p, p.p, 1e-9));
        if (mode == Mode::Filtering) CHECK(posterior_marginal(m, ev.truncated(j), j) == p);
        if (auto s = ev.state_at(j)) CHECK(p.p[static_cast<std::size_t>(*s)] == doctest::Approx(1.0));
      }
    }
  }
}

TEST_CASE("pairwise_posterior agrees with enumeration") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 5);
    const auto m = random_chain(n, 3, rng);
    const auto joint = joint_from_chain(m);
    const auto ev = random_evidence(m, Mode::Smoothing, rng);
    const Index a = 1 + static_cast<Index>(rng() % static_cast<unsigned>(n - 1));
    const Index b = a + 1 + static_cast<Index>(rng() % static_cast<unsigned>(n - a));
    const Matrix pair = pairwise_posterior(m, ev, a, b);
    // Oracle: P(x_a, x_b | ev) = P(x_b | x_a, ev) P(x_a | ev).
    const auto pa = oracle_marginal(joint, ev, a);
    for (State xa = 0; xa < m.states(a); ++xa) {
      if (pa.p[static_cast<std::size_t>(xa)] == 0.0) {
        for (State xb = 0; xb < m.states(b); ++xb) CHECK(pair(xa, xb) == doctest::Approx(0.0));
        continue;
      }
      if (ev.state_at(a) && *ev.state_at(a) != xa) continue;
      const auto pb = oracle_marginal(joint, ev.state_at(a) ? ev : ev.with({a, xa}), b);
      for (State xb = 0; xb < m.states(b); ++xb) {
        CHECK(std::abs(pair(xa, xb) - pa.p[static_cast<std::size_t>(xa)] * pb.p[static_cast<std::size_t>(xb)]) < 1e-9);
      }
    }
  }
}

TEST_CASE("log-space inference survives long chains") {
  const auto m = ChainModel::stationary({0.5, 0.5}, Matrix{{0.99, 0.01}, {0.01, 0.99}}, 20000);
  std::vector<Observation> obs;
  for (Index j = 1; j <= 20000; j += 997) obs.push_back({j, (j / 997) % 2});
  const Evidence ev(obs, Mode::Smoothing);
  const auto lin = posterior_marginal(m, ev, 10000);
  const auto log = posterior_marginal(m, ev, 10000, {.log_space = true});
  CHECK(all_close(lin.p, log.p, 1e-9));
  const auto mm = max_marginal(m, ev, 10000);
  for (double v : mm.values) CHECK(std::isfinite(v));
}
