#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <sstream>

#include "test_support.hpp"
#include "voidp/error.hpp"
#include "voidp/oracles.hpp"
#include "voidp/plan_dp.hpp"

using namespace voidp;
using voidp::testing::sym3;

namespace {
const double kHb075 = 0.8112781244591328;

// Walks every outcome branch of the plan; returns the expected realized reward
// and the largest budget spent on any branch.
struct BranchSummary {
  double expected = 0.0;
  int max_spent = 0;
  int branches = 0;
};

BranchSummary walk_branches(const PlanTables& tables) {
  BranchSummary out;
  const ChainModel& m = tables.model();
  std::function<void(const PlanCursor&, double)> rec = [&](const PlanCursor& cursor, double weight) {
    const auto j = cursor.next_query();
    if (!j) {
      out.expected += weight * realized_reward(tables, cursor.queried());
      out.max_spent = std::max(out.max_spent, cursor.spent());
      ++out.branches;
      return;
    }
    const auto post = posterior_marginal(m, cursor.evidence().entries().empty()
                                                ? Evidence({}, Mode::Smoothing)
                                                : Evidence(cursor.evidence().entries(), Mode::Smoothing),
                                         *j);
    for (State x = 0; x < m.states(*j); ++x) {
      const double p = post.p[static_cast<std::size_t>(x)];
      if (p <= 0.0) continue;
      PlanCursor next = cursor;
      next.answer(*j, x);
      rec(next, weight * p);
    }
  };
  rec(PlanCursor(tables), 1.0);
  return out;
}
}  // namespace

TEST_CASE("SYM3 plans") {
  const auto m = sym3();
  const auto spec = RewardSpec::uniform(ResidualEntropy{}, 3);
  for (Mode mode : {Mode::Filtering, Mode::Smoothing}) {
    const auto t0 = build_plan(m, spec, CostModel::uniform(3, 0), mode);
    CHECK(t0.root_value() == doctest::Approx(-3.0));
    CHECK(plan_value(t0, m) == doctest::Approx(-3.0));
    RecordedSource any(std::vector<State>{0, 1, 0});
    const auto e0 = execute_plan(t0, any);
    CHECK(e0.queried.empty());
    CHECK(e0.spent == 0);
  }
  const auto t1 = build_plan(m, spec, CostModel::uniform(3, 1), Mode::Smoothing);
  CHECK(t1.root_value() == doctest::Approx(-2 * kHb075));
  CHECK(plan_value(t1, m) == doctest::Approx(-2 * kHb075));
  CHECK(PlanCursor(t1).next_query() == 2);

  RecordedSource answers(std::map<Index, State>{{2, 0}});
  const auto e1 = execute_plan(t1, answers);
  REQUIRE(e1.queried.size() == 1);
  CHECK(e1.queried[0] == Observation{2, 0});
  CHECK(e1.spent == 1);
  CHECK(e1.realized_reward == doctest::Approx(-2 * kHb075));
}

TEST_CASE("cursor rejects bad answers") {
  const auto m = sym3();
  const auto t = build_plan(m, RewardSpec::uniform(ResidualEntropy{}, 3), CostModel::uniform(3, 1), Mode::Smoothing);
  PlanCursor c(t);
  CHECK_THROWS_AS(c.answer(1, 0), ValidationError);
  CHECK_THROWS_AS(c.answer(2, 2), ValidationError);
  c.answer(2, 1);
  CHECK(c.done());
  CHECK_THROWS_AS(c.answer(2, 1), ValidationError);

  const auto stuck = ChainModel::stationary({1.0, 0.0}, Matrix{{0.5, 0.5}, {0.0, 1.0}}, 3);
  const auto ts = build_plan(stuck, RewardSpec::uniform(ResidualEntropy{}, 3), CostModel::uniform(3, 1), Mode::Smoothing);
  PlanCursor cs(ts);
  REQUIRE(cs.next_query());
  if (*cs.next_query() == 1) CHECK_THROWS_AS(cs.answer(1, 1), ZeroProbabilityEvidence);
}

TEST_CASE("plan tables match the decision-tree oracle") {
  std::mt19937_64 rng(201);
  int mismatches = 0;
  for (int trial = 0; trial < 80; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 4);
    const auto m = voidp::testing::random_chain(n, 2, rng);
    const auto spec = voidp::testing::random_spec(trial, m, rng);
    const bool state_dep = trial % 2 == 1;
    const auto costs = voidp::testing::random_costs(n, static_cast<int>(rng() % 4), rng, state_dep, &m);
    const auto joint = joint_from_chain(m);
    for (Mode mode : {Mode::Filtering, Mode::Smoothing}) {
      const auto t = build_plan(m, spec, costs, mode);
      const double oracle = oracle_best_plan(joint, spec, costs, mode);
      if (std::abs(t.root_value() - oracle) >= 1e-9) ++mismatches;
      CHECK(std::abs(t.root_value() - oracle) < 1e-9);
      CHECK(std::abs(plan_value(t, m) - t.root_value()) < 1e-9);
      const auto branches = walk_branches(t);
      CHECK(branches.max_spent <= costs.budget);
      CHECK(std::abs(branches.expected - t.root_value()) < 1e-9);
    }
  }
  MESSAGE("oracle mismatches: " << mismatches);
}

TEST_CASE("plans dominate subsets and respect complexity bounds") {
  std::mt19937_64 rng(203);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 7);
    const auto m = voidp::testing::random_chain(n, 3, rng);
    const auto spec = voidp::testing::random_spec(trial, m, rng);
    const int b = static_cast<int>(rng() % 4);
    const auto costs = voidp::testing::random_costs(n, b, rng);
    const auto d = static_cast<std::uint64_t>(m.max_states());
    const auto cube = static_cast<std::uint64_t>(n + 2) * (n + 2) * (n + 2);
    const auto bb = static_cast<std::uint64_t>(std::max(b, 1));
    for (Mode mode : {Mode::Filtering, Mode::Smoothing}) {
      const auto t = build_plan(m, spec, costs, mode);
      const auto s = select_subset(m, spec, costs, mode);
      CHECK(t.root_value() >= s.value - 1e-9);
      const std::uint64_t bound = mode == Mode::Smoothing ? d * d * d * bb * bb * cube : d * d * d * bb * cube;
      CHECK(t.eval_count() <= bound);
      if (b > 0) {
        auto less = costs;
        less.budget = b - 1;
        CHECK(build_plan(m, spec, less, mode).root_value() <= t.root_value() + 1e-9);
      }
    }
  }
}

TEST_CASE("sampled episodes average to the plan value") {
  const auto m = sym3();
  const auto spec = RewardSpec::uniform(ResidualEntropy{}, 3);
  const auto t = build_plan(m, spec, CostModel::uniform(3, 2), Mode::Smoothing);
  std::mt19937_64 rng(5);
  double total = 0.0;
  const int episodes = 100000;
  for (int i = 0; i < episodes; ++i) {
    SamplerSource src(m, rng);
    total += execute_plan(t, src).realized_reward;
  }
  CHECK(std::abs(total / episodes - plan_value(t, m)) < 0.01);
}

TEST_CASE("interactive source") {
  const auto m = sym3();
  const auto t = build_plan(m, RewardSpec::uniform(ResidualEntropy{}, 3), CostModel::uniform(3, 1), Mode::Smoothing);
  std::istringstream in("x\n5\n1\n");
  std::ostringstream out;
  InteractiveSource src(m, in, out);
  const auto e = execute_plan(t, src);
  CHECK(e.queried == std::vector<Observation>{{2, 1}});
  CHECK(out.str().find("X_2") != std::string::npos);
  std::istringstream closed("");
  InteractiveSource none(m, closed, out);
  CHECK_THROWS_AS(execute_plan(t, none), IoError);
}

TEST_CASE("plan_value rejects mismatched models") {
  const auto t = build_plan(sym3(), RewardSpec::uniform(ResidualEntropy{}, 3), CostModel::uniform(3, 1), Mode::Smoothing);
  CHECK_THROWS_AS(plan_value(t, ChainModel::stationary({0.5, 0.5}, Matrix::identity(2), 4)), ValidationError);
}

TEST_CASE("fixed budget splits can trail the unrestricted sequential optimum") {
  // Blocks {X_1, X_2} and {X_3, X_4} are independent. The best sequential
  // policy lets the outcome on one block decide how much budget the other
  // block gets; the split tables fix that allocation once X_j is observed.
  ChainModel m;
  m.prior = {0.83, 0.17};
  m.transitions = {Matrix{{0.83, 0.17}, {0.59, 0.41}}, Matrix{{0.5, 0.5}, {0.5, 0.5}},
                   Matrix{{0.37, 0.63}, {0.16, 0.84}}};
  const auto spec = RewardSpec::uniform(ResidualEntropy{}, 4);
  const auto costs = CostModel::uniform(4, 3);
  const auto t = build_plan(m, spec, costs, Mode::Smoothing);
  const double oracle = oracle_best_plan(joint_from_chain(m), spec, costs, Mode::Smoothing);
  CHECK(t.root_value() == doctest::Approx(-0.600647616269).epsilon(1e-10));
  CHECK(oracle == doctest::Approx(-0.596949349572).epsilon(1e-10));
  CHECK(t.root_value() < oracle - 1e-3);
  CHECK(t.root_value() >= select_subset(m, spec, costs, Mode::Smoothing).value);
  CHECK(build_plan(m, spec, costs, Mode::Filtering).root_value() ==
        doctest::Approx(oracle_best_plan(joint_from_chain(m), spec, costs, Mode::Filtering)).epsilon(1e-12));
}

TEST_CASE("plan tables never beat the oracle") {
  std::mt19937_64 rng(207);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 4);
    const auto m = voidp::testing::random_chain(n, 2, rng);
    const auto spec = voidp::testing::random_spec(trial, m, rng);
    const auto costs = voidp::testing::random_costs(n, static_cast<int>(rng() % 4), rng, trial % 2 == 1, &m);
    const auto joint = joint_from_chain(m);
    for (Mode mode : {Mode::Filtering, Mode::Smoothing}) {
      const double dp = build_plan(m, spec, costs, mode).root_value();
      const double oracle = oracle_best_plan(joint, spec, costs, mode);
      CHECK(dp <= oracle + 1e-9);
      if (mode == Mode::Filtering) CHECK(std::abs(dp - oracle) < 1e-9);
    }
  }
}
