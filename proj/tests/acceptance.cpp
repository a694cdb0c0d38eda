// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <thread>

#include "test_support.hpp"
#include "voidp/experiment.hpp"
#include "voidp/learn.hpp"
#include "voidp/multi_sensor.hpp"
#include "voidp/oracles.hpp"
#include "voidp/server.hpp"

using namespace voidp;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome star_fixture() {
  Stopwatch clock;
  const auto joint = noisy_label_star();
  const auto spec = noisy_label_rewards();
  const auto costs = CostModel::uniform(3, 2);
  const std::vector<std::vector<Index>> sets{{}, {2}, {3}, {2, 3}};
  const double want[] = {0.0, 0.0, 0.0, 0.375};
  Outcome o;
  std::string values;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const double v = oracle_total_reward(joint, spec, costs, sets[i], Mode::Smoothing);
    values += fmt("%.15g ", v);
    if (std::abs(v - want[i]) > 1e-12) o.pass = false;
  }
  const double t = clock.seconds();
  if (t >= 1.0) o.pass = false;
  o.detail = "values " + values + fmt("(%.3fs)", t);
  return o;
}

Outcome subset_certification() {
  Stopwatch clock;
  std::mt19937_64 rng(2001);
  int instances = 0, mismatches = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 140; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 7);
    const auto m = voidp::testing::random_chain(n, 3, rng);
    const auto spec = voidp::testing::random_spec(trial, m, rng);
    const auto costs = voidp::testing::random_costs(n, static_cast<int>(rng() % 5), rng);
    const auto joint = joint_from_chain(m);
    for (Mode mode : {Mode::Filtering, Mode::Smoothing}) {
      const double dp = select_subset(m, spec, costs, mode).value;
      const double oracle = oracle_best_subset(joint, spec, costs, mode).value;
      worst = std::max(worst, std::abs(dp - oracle));
      if (std::abs(dp - oracle) > 1e-9) ++mismatches;
      ++instances;
    }
  }
  const double t = clock.seconds();
  return {mismatches == 0 && t < 60.0,
          fmt("%d instances (140 chains x 2 modes, 7 reward variants), %d mismatches, max |diff| %.2e (%.1fs)", instances,
              mismatches, worst, t)};
}

// Largest budget spent on any positive-probability branch of the plan.
int max_branch_spend(const PlanTables& tables) {
  const ChainModel& m = tables.model();
  int worst = 0;
  std::function<void(const PlanCursor&)> rec = [&](const PlanCursor& cursor) {
    const auto j = cursor.next_query();
    if (!j) {
      worst = std::max(worst, cursor.spent());
      return;
    }
    const auto post = posterior_marginal(m, Evidence(cursor.evidence().entries(), Mode::Smoothing), *j);
    for (State x = 0; x < m.states(*j); ++x) {
      if (post.p[static_cast<std::size_t>(x)] <= 0.0) continue;
      PlanCursor next = cursor;
      next.answer(*j, x);
      rec(next);
    }
  };
  rec(PlanCursor(tables));
  return worst;
}

Outcome plan_certification() {
  Stopwatch clock;
  struct Instance {
    ChainModel model;
    RewardSpec spec;
    CostModel costs;
  };
  std::vector<Instance> instances;
  // Fixed case where a sequential policy reallocates budget across
  // independent blocks after seeing an outcome.
  {
    ChainModel m;
    m.prior = {0.83, 0.17};
    m.transitions = {Matrix{{0.83, 0.17}, {0.59, 0.41}}, Matrix{{0.5, 0.5}, {0.5, 0.5}},
                     Matrix{{0.37, 0.63}, {0.16, 0.84}}};
    instances.push_back({m, RewardSpec::uniform(ResidualEntropy{}, 4), CostModel::uniform(4, 3)});
  }
  std::mt19937_64 rng(3001);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 4);
    auto m = voidp::testing::random_chain(n, 2, rng);
    auto spec = voidp::testing::random_spec(trial, m, rng);
    auto costs = voidp::testing::random_costs(n, static_cast<int>(rng() % 4), rng, trial % 2 == 1, &m);
    instances.push_back({std::move(m), std::move(spec), std::move(costs)});
  }
  int checked = 0, mismatches[2] = {0, 0}, over_budget = 0;
  double worst = 0.0;
  for (const auto& inst : instances) {
    const auto joint = joint_from_chain(inst.model);
    for (Mode mode : {Mode::Filtering, Mode::Smoothing}) {
      const auto tables = build_plan(inst.model, inst.spec, inst.costs, mode);
      const double oracle = oracle_best_plan(joint, inst.spec, inst.costs, mode);
      const double diff = std::abs(tables.root_value() - oracle);
      worst = std::max(worst, diff);
      if (diff > 1e-9) ++mismatches[mode == Mode::Smoothing];
      if (max_branch_spend(tables) > inst.costs.budget) ++over_budget;
      ++checked;
    }
  }
  const double t = clock.seconds();
  Outcome o;
  o.pass = mismatches[0] == 0 && mismatches[1] == 0 && over_budget == 0 && t < 120.0;
  o.detail = fmt("%d instances, root != oracle on %d filtering / %d smoothing, max |diff| %.2e, %d over budget (%.1fs)",
                 checked, mismatches[0], mismatches[1], worst, over_budget, t);
  if (mismatches[1] > 0) {
    o.detail += "; smoothing fixed budget splits trail the unrestricted sequential optimum";
  }
  return o;
}

Outcome dominance() {
  Stopwatch clock;
  std::mt19937_64 rng(4001);
  int instances = 0, violations = 0;
  for (int trial = 0; trial < 80; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 7);
    const auto m = voidp::testing::random_chain(n, 3, rng);
    const int variants[] = {0, 2, 3, 4, 5, 6};
    const auto spec = voidp::testing::random_spec(variants[trial % 6], m, rng);
    const int budget = static_cast<int>(rng() % static_cast<unsigned>(n + 1));
    auto costs = voidp::testing::random_costs(n, budget, rng);
    costs.costs.assign(static_cast<std::size_t>(n), std::vector<int>{1});
    for (Mode mode : {Mode::Filtering, Mode::Smoothing}) {
      const double plan = build_plan(m, spec, costs, mode).root_value();
      const double subset = select_subset(m, spec, costs, mode).value;
      const double greedy = greedy_subset(m, spec, costs, mode).value;
      const double uniform = total_objective(m, spec, costs, uniform_spacing(n, budget), mode);
      if (plan < subset - 1e-9 || subset < greedy - 1e-9 || subset < uniform - 1e-9) ++violations;
      ++instances;
    }
  }
  return {violations == 0,
          fmt("%d instances, %d violations of plan >= subset >= greedy, subset >= uniform (%.1fs)", instances, violations,
              clock.seconds())};
}

Outcome decomposition() {
  Stopwatch clock;
  std::mt19937_64 rng(5001);
  int compared = 0, bad = 0, entropy_compared = 0, entropy_bad = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 70; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    const auto m = voidp::testing::random_chain(n, 3, rng);
    const int variants[] = {0, 2, 4, 5, 6};
    const auto spec = voidp::testing::random_spec(variants[trial % 5], m, rng);
    const auto costs = voidp::testing::random_costs(n, n, rng);
    const auto jspec = RewardSpec::uniform(JointEntropy{}, n);
    const auto zero = CostModel::uniform(n, n);
    const auto joint = joint_from_chain(m);
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      std::vector<Index> a;
      for (int j = 1; j <= n; ++j) {
        if (mask & (1u << (j - 1))) a.push_back(j);
      }
      for (Mode mode : {Mode::Filtering, Mode::Smoothing}) {
        const double diff = std::abs(total_objective(m, spec, costs, a, mode) - oracle_total_reward(joint, spec, costs, a, mode));
        worst = std::max(worst, diff);
        bad += diff > 1e-9;
        ++compared;
      }
      const double h = oracle_conditional_entropy(joint, a);
      entropy_bad += std::abs(total_objective(m, jspec, zero, a, Mode::Smoothing) + h) > 1e-9;
      ++entropy_compared;
    }
  }
  return {bad == 0 && entropy_bad == 0,
          fmt("%d subset/mode pairs, %d mismatches (max %.2e); joint entropy = -H(X_V|X_A) on %d subsets (smoothing), %d "
              "mismatches (%.1fs)",
              compared, bad, worst, entropy_compared, entropy_bad, clock.seconds())};
}

Outcome voi_monotonicity() {
  Stopwatch clock;
  std::mt19937_64 rng(6001);
  int instances = 0, pairs = 0, violations = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 4);
    const auto m = voidp::testing::random_chain(n, 3, rng);
    const auto spec = voidp::testing::random_spec(2, m, rng);
    const auto zero = CostModel::uniform(n, n);
    const auto joint = joint_from_chain(m);
    for (Mode mode : {Mode::Filtering, Mode::Smoothing}) {
      for (unsigned sub = 0; sub < (1u << n); ++sub) {
        for (unsigned sup = sub; sup < (1u << n); ++sup) {
          if ((sub & sup) != sub) continue;
          std::vector<Index> a, b;
          for (int j = 1; j <= n; ++j) {
            if (sub & (1u << (j - 1))) a.push_back(j);
            if (sup & (1u << (j - 1))) b.push_back(j);
          }
          violations += oracle_total_reward(joint, spec, zero, b, mode) < oracle_total_reward(joint, spec, zero, a, mode) - 1e-9;
          ++pairs;
        }
      }
    }
    ++instances;
  }
  return {violations == 0 && instances >= 50,
          fmt("%d instances, %d subset/superset pairs, %d decreases (%.1fs)", instances, pairs, violations, clock.seconds())};
}

Outcome complexity() {
  Stopwatch clock;
  std::mt19937_64 rng(7001);
  struct Size {
    int n, d, b;
  };
  const Size sizes[] = {{5, 2, 1}, {12, 3, 4}, {25, 4, 6}, {60, 5, 10}};
  int checks = 0, violations = 0;
  double subset_big = 0.0;
  std::string worst;
  for (const auto& s : sizes) {
    ChainModel m;
    m.prior = voidp::testing::random_simplex(s.d, rng);
    for (int t = 1; t < s.n; ++t) {
      Matrix tr(static_cast<std::size_t>(s.d), static_cast<std::size_t>(s.d));
      for (std::size_t z = 0; z < tr.rows(); ++z) {
        const auto row = voidp::testing::random_simplex(s.d, rng);
        for (std::size_t w = 0; w < tr.cols(); ++w) tr(z, w) = row[w];
      }
      m.transitions.push_back(tr);
    }
    const auto spec = voidp::testing::random_spec(0, m, rng);
    const auto costs = CostModel::uniform(s.n, s.b, 0.05);
    const auto cube = static_cast<std::uint64_t>(s.n + 2) * (s.n + 2) * (s.n + 2);
    const auto d3 = static_cast<std::uint64_t>(s.d) * s.d * s.d;
    const auto bb = static_cast<std::uint64_t>(std::max(s.b, 1));
    for (Mode mode : {Mode::Filtering, Mode::Smoothing}) {
      Stopwatch sub;
      const auto r = select_subset(m, spec, costs, mode);
      if (s.n == 60) subset_big = std::max(subset_big, sub.seconds());
      violations += r.eval_count > bb * cube;
      const auto p = build_plan(m, spec, costs, mode);
      const auto bound = mode == Mode::Smoothing ? d3 * bb * bb * cube : d3 * bb * cube;
      violations += p.eval_count() > bound;
      checks += 2;
      if (s.n == 60) {
        worst += fmt(" %s: subset %llu/%llu plan %llu/%llu;", to_string(mode), static_cast<unsigned long long>(r.eval_count),
                     static_cast<unsigned long long>(bb * cube), static_cast<unsigned long long>(p.eval_count()),
                     static_cast<unsigned long long>(bound));
      }
    }
  }
  return {violations == 0 && subset_big < 30.0,
          fmt("%d counter checks, %d over bound; n=60 d=5 B=10", checks, violations) + worst +
              fmt(" subset at n=60 %.2fs (%.1fs)", subset_big, clock.seconds())};
}

Outcome multi_sensor() {
  Stopwatch clock;
  std::mt19937_64 rng(8001);
  int failures = 0;
  // l = 1 reduces to the subset recursion.
  for (int trial = 0; trial < 10; ++trial) {
    MultiChainModel m;
    m.sensors = {voidp::testing::random_chain(6, 3, rng)};
    m.rewards = {voidp::testing::random_spec(trial % 2 ? 0 : 2, m.sensors[0], rng)};
    const std::vector<CostModel> costs{voidp::testing::random_costs(6, 1 + trial % 4, rng)};
    const auto single = select_subset(m.sensors[0], m.rewards[0], costs[0], Mode::Filtering);
    const auto multi = schedule_multi(m, costs);
    failures += multi.selected[0] != single.selected || std::abs(multi.objective - single.value) > 1e-9;
  }
  // Independent sensors decompose.
  for (int trial = 0; trial < 10; ++trial) {
    MultiChainModel m;
    m.sensors = {voidp::testing::random_chain(5, 2, rng), voidp::testing::random_chain(5, 3, rng)};
    m.rewards = {voidp::testing::random_spec(0, m.sensors[0], rng), voidp::testing::random_spec(2, m.sensors[1], rng)};
    const std::vector<CostModel> costs{CostModel::uniform(5, 1), CostModel::uniform(5, 2)};
    double sum = 0.0;
    for (int s = 0; s < 2; ++s) sum += select_subset(m.sensors[s], m.rewards[s], costs[s], Mode::Filtering).value;
    failures += std::abs(schedule_multi(m, costs).objective - sum) > 1e-9;
  }
  // Coupled pairs: exact-mode trace is monotone and ends at or above the independent start.
  int coupled = 0, non_monotone = 0, below_init = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const int steps = 5;
    ChainModel c;
    c.prior = voidp::testing::random_simplex(4, rng);
    for (int t = 1; t < steps; ++t) {
      Matrix tr(4, 4);
      for (std::size_t z = 0; z < 4; ++z) {
        const auto row = voidp::testing::random_simplex(4, rng);
        for (std::size_t w = 0; w < 4; ++w) tr(z, w) = row[w];
      }
      c.transitions.push_back(tr);
    }
    // Sensor chains implied by the coupling.
    const ChainTables tables(c);
    MultiChainModel m;
    for (int s = 0; s < 2; ++s) {
      auto digit = [s](std::size_t z) { return s == 0 ? z / 2 : z % 2; };
      ChainModel own;
      own.prior.assign(2, 0.0);
      for (std::size_t z = 0; z < 4; ++z) own.prior[digit(z)] += c.prior[z];
      for (int t = 1; t < steps; ++t) {
        Matrix pair(2, 2);
        std::vector<double> mass(2, 0.0);
        for (std::size_t z = 0; z < 4; ++z) {
          mass[digit(z)] += tables.marginal(t)[z];
          for (std::size_t w = 0; w < 4; ++w) pair(digit(z), digit(w)) += tables.marginal(t)[z] * c.transition(t)(z, w);
        }
        for (std::size_t x = 0; x < 2; ++x) {
          for (std::size_t y = 0; y < 2; ++y) pair(x, y) /= mass[x];
        }
        own.transitions.push_back(pair);
      }
      m.sensors.push_back(own);
      m.rewards.push_back(voidp::testing::random_spec(trial % 2 ? 0 : 2, own, rng));
    }
    m.coupling = c;
    const std::vector<CostModel> costs{CostModel::uniform(steps, 2, 0.05), CostModel::uniform(steps, 2, 0.05)};
    const auto r = schedule_multi(m, costs);
    for (std::size_t i = 1; i < r.trace.size(); ++i) non_monotone += r.trace[i] < r.trace[i - 1] - 1e-9;
    below_init += r.objective < r.trace.front() - 1e-9;
    ++coupled;
  }
  return {failures == 0 && non_monotone == 0 && below_init == 0,
          fmt("10 single-sensor + 10 independent pairs, %d mismatches; %d coupled pairs, %d trace decreases, %d below "
              "independent init (%.1fs)",
              failures, coupled, non_monotone, below_init, clock.seconds())};
}

Outcome serialization() {
  Stopwatch clock;
  std::mt19937_64 rng(9001);
  int round_trips = 0, broken = 0;
  auto text = [](const Json& j) { return Json::parse(j.dump()); };
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = voidp::testing::random_chain(4, 3, rng);
    const auto spec = voidp::testing::random_spec(trial, m, rng);
    const auto costs = voidp::testing::random_costs(4, 3, rng, trial % 2 == 1, &m);
    const Mode mode = trial % 2 ? Mode::Filtering : Mode::Smoothing;
    broken += !(model_from_json(text(to_json(m))) == m);
    broken += !(reward_spec_from_json(text(to_json(spec))) == spec);
    broken += !(costs_from_json(text(to_json(costs))) == costs);
    const auto plan = build_plan(m, spec, costs, mode);
    broken += !(plan_from_json(text(to_json(plan))) == plan);
    const auto unit = CostModel::uniform(4, 2, 0.1);
    const auto subset = select_subset(m, spec, unit, mode);
    broken += !(subset_from_json(text(to_json(subset))) == subset);
    MultiChainModel multi;
    multi.sensors = {m, voidp::testing::random_chain(4, 2, rng)};
    multi.rewards = {RewardSpec::uniform(ResidualEntropy{}, 4), RewardSpec::uniform(Expectation{}, 4)};
    broken += !(multi_from_json(text(to_json(multi))) == multi);
    round_trips += 6;
  }

  SessionService service(1);
  httplib::Server server;
  mount_session_routes(server, service);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);
  int episodes = 0, diverged = 0;
  for (int trial = 0; trial < 5; ++trial) {
    const auto m = voidp::testing::random_chain(5, 3, rng);
    const auto spec = voidp::testing::random_spec(trial, m, rng);
    const auto costs = voidp::testing::random_costs(5, 3, rng, trial % 2 == 0, &m);
    const auto plan = build_plan(m, spec, costs, trial % 2 ? Mode::Filtering : Mode::Smoothing);
    const std::string doc = Json{{"plan", to_json(plan)}}.dump();
    for (int e = 0; e < 5; ++e) {
      const auto truth = sample(m, rng);
      RecordedSource source(truth);
      const auto local = execute_plan(plan, source);
      auto r = client.Post("/sessions", doc, "application/json");
      if (!r || r->status != 201) {
        ++diverged;
        continue;
      }
      Json state = Json::parse(r->body);
      const std::string id = state["id"];
      while (!state["done"].get<bool>()) {
        const int j = state["next_query"];
        r = client.Post("/sessions/" + id + "/answer",
                        Json{{"index", j}, {"state", truth[static_cast<std::size_t>(j - 1)]}}.dump(), "application/json");
        if (!r || r->status != 200) break;
        state = Json::parse(r->body);
      }
      std::vector<Observation> wire;
      for (const auto& o : state["evidence"]) wire.push_back({o["index"], o["state"]});
      diverged += !(state["done"].get<bool>() && wire == local.queried && state["spent"] == local.spent &&
                    state["realized_reward"].get<double>() == local.realized_reward);
      client.Delete("/sessions/" + id);
      ++episodes;
    }
  }
  server.stop();
  thread.join();
  return {broken == 0 && diverged == 0 && episodes >= 20,
          fmt("%d round trips over model/multi/reward/costs/plan/subset, %d unequal; %d wire episodes, %d diverged (%.1fs)",
              round_trips, broken, episodes, diverged, clock.seconds())};
}

Outcome diurnal_experiment() {
  Stopwatch clock;
  SeriesDataset data;
  data.sequences = synthetic_diurnal(60, 24, 2024);
  data.bins.count = 10;
  data.tying = block_tying(24, 4);
  const auto learned = learn_chain(data, 0.5);
  const auto spec = RewardSpec::uniform(ResidualEntropy{}, 24);
  const auto table = run_experiment(learned.model, spec, CostModel::uniform(24, 0), Mode::Filtering,
                                    {Method::Uniform, Method::Greedy, Method::OptimalSubset, Method::OptimalPlan}, 0, 24);
  bool nonnegative = table.rows.size() == 25;
  bool positive = false;
  double best = 0.0;
  int best_k = 0;
  for (const auto& row : table.rows) {
    for (std::size_t i : {std::size_t{2}, std::size_t{3}}) {
      nonnegative = nonnegative && row.improvement[i] >= 0.0;
      if (row.k >= 1 && row.k <= 12 && row.improvement[i] > 0.0) positive = true;
      if (row.improvement[i] > best) {
        best = row.improvement[i];
        best_k = row.k;
      }
    }
  }
  return {nonnegative && positive,
          fmt("k=0..24 table, optimal improvements %s, largest %.2f%% at k=%d, some k in 1..12 positive: %s (%.1fs)",
              nonnegative ? ">= 0 everywhere" : "NEGATIVE somewhere", 100.0 * best, best_k, positive ? "yes" : "no",
              clock.seconds())};
}

}  // namespace

int main() {
  const std::pair<const char*, Outcome (*)()> criteria[] = {
      {"star fixture values", star_fixture},
      {"subset recursion = exhaustive best subset", subset_certification},
      {"plan tables = exhaustive best plan", plan_certification},
      {"dominance chain", dominance},
      {"decomposition identity", decomposition},
      {"decision VOI monotone in evidence", voi_monotonicity},
      {"complexity counters", complexity},
      {"multi-sensor scheduling", multi_sensor},
      {"serialization and wire execution", serialization},
      {"diurnal experiment", diurnal_experiment},
  };
  int failed = 0;
  int id = 0;
  for (const auto& [name, run] : criteria) {
    ++id;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2d %s  %s: %s\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", id - failed, id);
  return failed;
}
