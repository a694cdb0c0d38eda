#include "voidp/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "voidp/error.hpp"

namespace voidp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t checked_cells(std::span<const int> domains) {
  std::size_t cells = 1;
  for (int d : domains) {
    if (d < 1) throw ValidationError("domain size < 1");
    cells *= static_cast<std::size_t>(d);
    if (cells > kMaxJointCells) {
      throw CapacityExceeded("explicit joint exceeds " + std::to_string(kMaxJointCells) + " cells");
    }
  }
  return cells;
}

// Sums (or maximizes) the table onto `vars` (0-based positions, in the given
// order, last varying fastest), keeping only cells that agree with `fixed`
// wherever fixed[i] >= 0.
std::vector<double> project(const ExplicitJoint& joint, std::span<const int> vars,
                            std::span<const int> fixed, bool use_max) {
  const int n = joint.size();
  std::size_t out_size = 1;
  std::vector<std::size_t> weight(static_cast<std::size_t>(n), 0);
  for (auto it = vars.rbegin(); it != vars.rend(); ++it) {
    weight[static_cast<std::size_t>(*it)] = out_size;
    out_size *= static_cast<std::size_t>(joint.domains[static_cast<std::size_t>(*it)]);
  }
  std::vector<double> out(out_size, 0.0);
  std::vector<int> state(static_cast<std::size_t>(n), 0);
  for (std::size_t cell = 0; cell < joint.table.size(); ++cell) {
    bool keep = true;
    if (!fixed.empty()) {
      for (int i = 0; i < n; ++i) {
        const int f = fixed[static_cast<std::size_t>(i)];
        if (f >= 0 && f != state[static_cast<std::size_t>(i)]) {
          keep = false;
          break;
        }
      }
    }
    if (keep) {
      std::size_t key = 0;
      for (int v : vars) key += weight[static_cast<std::size_t>(v)] * static_cast<std::size_t>(state[static_cast<std::size_t>(v)]);
      const double p = joint.table[cell];
      out[key] = use_max ? std::max(out[key], p) : out[key] + p;
    }
    for (int i = n - 1; i >= 0; --i) {
      auto& s = state[static_cast<std::size_t>(i)];
      if (++s < joint.domains[static_cast<std::size_t>(i)]) break;
      s = 0;
    }
  }
  return out;
}

double entropy_of(const ExplicitJoint& joint, std::span<const int> vars) {
  std::vector<double> p = project(joint, vars, {}, false);
  return entropy_bits(p);
}

std::vector<int> sorted_union(std::vector<int> a, std::span<const int> b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

std::vector<int> prefix(int count) {
  std::vector<int> v(static_cast<std::size_t>(count));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

// Nearest visible variables on each side of j (0-based), per the Margin convention.
std::vector<int> separators_of(int j, std::span<const int> visible) {
  std::vector<int> s;
  int before = -1;
  int after = -1;
  for (int v : visible) {
    if (v < j) before = v;
    if (v > j && after < 0) after = v;
  }
  if (before >= 0) s.push_back(before);
  if (after >= 0) s.push_back(after);
  return s;
}

double margin_of(const std::vector<double>& mm) { return local_reward(Margin{}, MaxMarg{mm}); }

// Expected R_j(X_j | X_C) with C the visible observed set (0-based, sorted).
double expected_reward(const ExplicitJoint& joint, const LocalReward& reward, int j,
                       std::span<const int> visible) {
  const bool observed = std::binary_search(visible.begin(), visible.end(), j);
  const int dj = joint.domains[static_cast<std::size_t>(j)];
  const auto values = joint.values(j + 1);

  if (std::holds_alternative<JointEntropy>(reward)) {
    if (observed) return 0.0;
    return -(entropy_of(joint, sorted_union(prefix(j + 1), visible)) -
             entropy_of(joint, sorted_union(prefix(j), visible)));
  }

  if (std::holds_alternative<Margin>(reward)) {
    const std::vector<int> seps = observed ? std::vector<int>{j} : separators_of(j, visible);
    const std::vector<double> psum = project(joint, seps, {}, false);
    std::vector<int> vars = seps;
    if (!observed) vars.push_back(j);
    const std::vector<double> pmax = project(joint, vars, {}, true);
    double total = 0.0;
    for (std::size_t key = 0; key < psum.size(); ++key) {
      if (psum[key] <= 0.0) continue;
      std::vector<double> mm(static_cast<std::size_t>(dj), 0.0);
      if (observed) {
        // seps == {j}: the key is x_j itself.
        mm[key] = pmax[key] / psum[key];
      } else {
        for (int x = 0; x < dj; ++x) {
          mm[static_cast<std::size_t>(x)] = pmax[key * static_cast<std::size_t>(dj) + static_cast<std::size_t>(x)] / psum[key];
        }
      }
      total += psum[key] * margin_of(mm);
    }
    return total;
  }

  std::vector<int> cond(visible.begin(), visible.end());
  if (observed) {
    const std::vector<double> p = project(joint, std::vector<int>{j}, {}, false);
    double total = 0.0;
    for (int x = 0; x < dj; ++x) {
      if (p[static_cast<std::size_t>(x)] <= 0.0) continue;
      Dist point{std::vector<double>(static_cast<std::size_t>(dj), 0.0)};
      point.p[static_cast<std::size_t>(x)] = 1.0;
      total += p[static_cast<std::size_t>(x)] * local_reward(reward, point, values);
    }
    return total;
  }
  std::vector<int> vars = cond;
  vars.push_back(j);
  const std::vector<double> table = project(joint, vars, {}, false);
  double total = 0.0;
  for (std::size_t key = 0; key * static_cast<std::size_t>(dj) < table.size(); ++key) {
    Dist dist{std::vector<double>(table.begin() + static_cast<std::ptrdiff_t>(key * static_cast<std::size_t>(dj)),
                                  table.begin() + static_cast<std::ptrdiff_t>((key + 1) * static_cast<std::size_t>(dj)))};
    const double mass = std::accumulate(dist.p.begin(), dist.p.end(), 0.0);
    if (mass <= 0.0) continue;
    for (double& v : dist.p) v /= mass;
    total += mass * local_reward(reward, dist, values);
  }
  return total;
}

std::vector<int> visible_for(const ExplicitJoint& joint, int j, std::span<const int> observed, Mode mode) {
  std::vector<int> out;
  for (int i : observed) {
    if (mode == Mode::Smoothing ||
        joint.times[static_cast<std::size_t>(i)] <= joint.times[static_cast<std::size_t>(j)]) {
      out.push_back(i);
    }
  }
  return out;
}

std::vector<int> to_positions(const ExplicitJoint& joint, std::span<const Index> observed) {
  std::vector<int> pos;
  for (Index i : observed) {
    if (i < 1 || i > joint.size()) throw ValidationError("observed index out of range");
    pos.push_back(i - 1);
  }
  std::sort(pos.begin(), pos.end());
  pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
  return pos;
}

void check_inputs(const ExplicitJoint& joint, const RewardSpec& spec, const CostModel& costs) {
  const std::size_t n = joint.domains.size();
  if (spec.rewards.size() != n) throw ValidationError("reward spec size does not match joint");
  if (costs.penalties.size() != n || costs.costs.size() != n) {
    throw ValidationError("cost model size does not match joint");
  }
  if (joint.times.size() != n) throw ValidationError("joint times size mismatch");
}

int worst_cost(const CostModel& costs, const ExplicitJoint& joint, Index j) {
  int worst = 0;
  for (State x = 0; x < joint.domains[static_cast<std::size_t>(j - 1)]; ++x) {
    worst = std::max(worst, costs.cost(j, x));
  }
  return worst;
}

// Realized R_j(X_j | e) for a concrete evidence vector (state or -1 per variable).
double realized_reward(const ExplicitJoint& joint, const LocalReward& reward, int j,
                       const std::vector<int>& evidence, Mode mode) {
  const int n = joint.size();
  std::vector<int> visible(static_cast<std::size_t>(n), -1);
  std::vector<int> visible_set;
  for (int i = 0; i < n; ++i) {
    const int e = evidence[static_cast<std::size_t>(i)];
    if (e < 0) continue;
    if (mode == Mode::Smoothing ||
        joint.times[static_cast<std::size_t>(i)] <= joint.times[static_cast<std::size_t>(j)]) {
      visible[static_cast<std::size_t>(i)] = e;
      visible_set.push_back(i);
    }
  }
  const int dj = joint.domains[static_cast<std::size_t>(j)];
  const bool observed = visible[static_cast<std::size_t>(j)] >= 0;

  if (std::holds_alternative<JointEntropy>(reward)) {
    if (observed) return 0.0;
    auto cond_entropy = [&](int count) {
      std::vector<double> p = project(joint, prefix(count), visible, false);
      const double mass = std::accumulate(p.begin(), p.end(), 0.0);
      for (double& v : p) v /= mass;
      return entropy_bits(p);
    };
    return -(cond_entropy(j + 1) - cond_entropy(j));
  }

  if (std::holds_alternative<Margin>(reward)) {
    const std::vector<int> seps = observed ? std::vector<int>{j} : separators_of(j, visible_set);
    std::vector<int> fixed(static_cast<std::size_t>(n), -1);
    for (int s : seps) fixed[static_cast<std::size_t>(s)] = visible[static_cast<std::size_t>(s)];
    const std::vector<int> jv{j};
    const std::vector<double> psum = project(joint, jv, fixed, false);
    const std::vector<double> pmax = project(joint, jv, fixed, true);
    const double mass = std::accumulate(psum.begin(), psum.end(), 0.0);
    std::vector<double> mm(static_cast<std::size_t>(dj));
    for (int x = 0; x < dj; ++x) mm[static_cast<std::size_t>(x)] = pmax[static_cast<std::size_t>(x)] / mass;
    return margin_of(mm);
  }

  Dist dist{project(joint, std::vector<int>{j}, visible, false)};
  const double mass = std::accumulate(dist.p.begin(), dist.p.end(), 0.0);
  for (double& v : dist.p) v /= mass;
  return local_reward(reward, dist, joint.values(j + 1));
}

double stop_value(const ExplicitJoint& joint, const RewardSpec& spec, const CostModel& costs,
                  const std::vector<int>& evidence, Mode mode) {
  double total = 0.0;
  for (int j = 0; j < joint.size(); ++j) {
    total += realized_reward(joint, spec.rewards[static_cast<std::size_t>(j)], j, evidence, mode);
    const int e = evidence[static_cast<std::size_t>(j)];
    if (e >= 0) total -= costs.penalty(j + 1, e);
  }
  return total;
}

}  // namespace

std::span<const double> ExplicitJoint::values(Index j) const {
  if (state_values.empty()) return {};
  return state_values[static_cast<std::size_t>(j - 1)];
}

ExplicitJoint joint_from_chain(const ChainModel& model) {
  require_valid(model);
  ExplicitJoint joint;
  const int n = model.size();
  for (Index j = 1; j <= n; ++j) joint.domains.push_back(model.states(j));
  joint.times.resize(static_cast<std::size_t>(n));
  std::iota(joint.times.begin(), joint.times.end(), 1);
  joint.state_values = model.state_values;
  const std::size_t cells = checked_cells(joint.domains);
  joint.table.assign(cells, 0.0);
  std::vector<int> state(static_cast<std::size_t>(n), 0);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    double p = model.prior[static_cast<std::size_t>(state[0])];
    for (Index i = 1; i < n && p > 0.0; ++i) {
      p *= model.transition(i)(static_cast<std::size_t>(state[static_cast<std::size_t>(i - 1)]),
                               static_cast<std::size_t>(state[static_cast<std::size_t>(i)]));
    }
    joint.table[cell] = p;
    for (int i = n - 1; i >= 0; --i) {
      auto& s = state[static_cast<std::size_t>(i)];
      if (++s < joint.domains[static_cast<std::size_t>(i)]) break;
      s = 0;
    }
  }
  return joint;
}

ExplicitJoint noisy_label_star(double agreement) {
  ExplicitJoint joint;
  joint.domains = {2, 2, 2};
  joint.times = {1, 2, 3};
  joint.table.resize(8);
  // Cell (y, x1, x2) with y most significant.
  for (int y = 0; y < 2; ++y) {
    for (int x1 = 0; x1 < 2; ++x1) {
      for (int x2 = 0; x2 < 2; ++x2) {
        const double p1 = x1 == y ? agreement : 1.0 - agreement;
        const double p2 = x2 == y ? agreement : 1.0 - agreement;
        joint.table[static_cast<std::size_t>(y * 4 + x1 * 2 + x2)] = 0.5 * p1 * p2;
      }
    }
  }
  return joint;
}

RewardSpec noisy_label_rewards() {
  // State 0 is class +1, state 1 is class -1.
  DecisionVoi label{{"a_1", "a_-1", "a_0"}, Matrix{{1.0, -3.0}, {-3.0, 1.0}, {0.0, 0.0}}};
  DecisionVoi none{{"none"}, Matrix{{0.0, 0.0}}};
  return RewardSpec{{label, none, none}};
}

Dist oracle_marginal(const ExplicitJoint& joint, const Evidence& evidence, Index j) {
  std::vector<int> fixed(joint.domains.size(), -1);
  for (const auto& o : evidence.entries()) {
    if (evidence.mode() == Mode::Smoothing ||
        joint.times[static_cast<std::size_t>(o.index - 1)] <= joint.times[static_cast<std::size_t>(j - 1)]) {
      fixed[static_cast<std::size_t>(o.index - 1)] = o.state;
    }
  }
  Dist d{project(joint, std::vector<int>{j - 1}, fixed, false)};
  const double mass = std::accumulate(d.p.begin(), d.p.end(), 0.0);
  if (mass <= 0.0) throw ZeroProbabilityEvidence("evidence has probability 0 in explicit joint");
  for (double& v : d.p) v /= mass;
  return d;
}

MaxMarg oracle_max_marginal(const ExplicitJoint& joint, const Evidence& evidence, Index j) {
  std::vector<int> fixed(joint.domains.size(), -1);
  for (const auto& o : evidence.entries()) {
    if (evidence.mode() == Mode::Smoothing ||
        joint.times[static_cast<std::size_t>(o.index - 1)] <= joint.times[static_cast<std::size_t>(j - 1)]) {
      fixed[static_cast<std::size_t>(o.index - 1)] = o.state;
    }
  }
  const std::vector<int> jv{j - 1};
  const std::vector<double> psum = project(joint, jv, fixed, false);
  const double mass = std::accumulate(psum.begin(), psum.end(), 0.0);
  if (mass <= 0.0) throw ZeroProbabilityEvidence("evidence has probability 0 in explicit joint");
  MaxMarg mm{project(joint, jv, fixed, true)};
  for (double& v : mm.values) v /= mass;
  return mm;
}

double oracle_conditional_entropy(const ExplicitJoint& joint, std::span<const Index> observed) {
  const std::vector<int> obs = to_positions(joint, observed);
  return entropy_of(joint, prefix(joint.size())) - entropy_of(joint, obs);
}

double oracle_total_reward(const ExplicitJoint& joint, const RewardSpec& spec,
                           const CostModel& costs, std::span<const Index> observed, Mode mode) {
  check_inputs(joint, spec, costs);
  const std::vector<int> obs = to_positions(joint, observed);
  double total = 0.0;
  for (int j = 0; j < joint.size(); ++j) {
    total += expected_reward(joint, spec.rewards[static_cast<std::size_t>(j)], j,
                             visible_for(joint, j, obs, mode));
  }
  for (int i : obs) {
    const std::vector<double> p = project(joint, std::vector<int>{i}, {}, false);
    for (std::size_t x = 0; x < p.size(); ++x) total -= p[x] * costs.penalty(i + 1, static_cast<State>(x));
  }
  return total;
}

SubsetChoice oracle_best_subset(const ExplicitJoint& joint, const RewardSpec& spec,
                                const CostModel& costs, Mode mode) {
  check_inputs(joint, spec, costs);
  const int n = joint.size();
  if (n > 12) throw CapacityExceeded("oracle_best_subset supports at most 12 variables");
  SubsetChoice best;
  bool have = false;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<Index> sel;
    int spent = 0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        sel.push_back(i + 1);
        spent += worst_cost(costs, joint, i + 1);
      }
    }
    if (spent > costs.budget) continue;
    const double value = oracle_total_reward(joint, spec, costs, sel, mode);
    if (!have || value > best.value || (value == best.value && sel < best.selected)) {
      best = SubsetChoice{sel, value};
      have = true;
    }
  }
  return best;
}

double oracle_best_plan(const ExplicitJoint& joint, const RewardSpec& spec, const CostModel& costs,
                        Mode mode) {
  check_inputs(joint, spec, costs);
  const int n = joint.size();
  if (n > 4) throw CapacityExceeded("oracle_best_plan supports at most 4 variables");

  std::map<std::pair<std::vector<int>, int>, double> memo;
  auto solve = [&](auto&& self, const std::vector<int>& evidence, int budget) -> double {
    auto key = std::make_pair(evidence, budget);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    double best = stop_value(joint, spec, costs, evidence, mode);
    int latest_time = std::numeric_limits<int>::min();
    for (int i = 0; i < n; ++i) {
      if (evidence[static_cast<std::size_t>(i)] >= 0) {
        latest_time = std::max(latest_time, joint.times[static_cast<std::size_t>(i)]);
      }
    }
    for (int j = 0; j < n; ++j) {
      if (evidence[static_cast<std::size_t>(j)] >= 0) continue;
      if (mode == Mode::Filtering && joint.times[static_cast<std::size_t>(j)] <= latest_time) continue;
      const std::vector<double> p = project(joint, std::vector<int>{j}, evidence, false);
      const double mass = std::accumulate(p.begin(), p.end(), 0.0);
      double value = 0.0;
      bool feasible = true;
      for (std::size_t x = 0; x < p.size() && feasible; ++x) {
        if (p[x] <= 0.0) continue;
        const int remaining = budget - costs.cost(j + 1, static_cast<State>(x));
        if (remaining < 0) {
          feasible = false;
          break;
        }
        std::vector<int> next = evidence;
        next[static_cast<std::size_t>(j)] = static_cast<int>(x);
        value += p[x] / mass * self(self, next, remaining);
      }
      if (feasible && value > best) best = value;
    }
    memo.emplace(std::move(key), best);
    return best;
  };
  return solve(solve, std::vector<int>(static_cast<std::size_t>(n), -1), costs.budget);
}

SubsetChoice greedy_subset(const ChainModel& model, const RewardSpec& spec, const CostModel& costs,
                           Mode mode) {
  RewardEvaluator evaluator(model, spec);
  require_valid(costs, model);
  const int n = model.size();
  std::vector<Index> selected;
  double value = total_objective(evaluator, costs, selected, mode);
  int spent = 0;
  std::vector<bool> taken(static_cast<std::size_t>(n + 1), false);
  while (true) {
    Index best_j = -1;
    double best_value = value;
    for (Index j = 1; j <= n; ++j) {
      if (taken[static_cast<std::size_t>(j)] || spent + costs.cost(j) > costs.budget) continue;
      std::vector<Index> trial = selected;
      trial.push_back(j);
      const double v = total_objective(evaluator, costs, trial, mode);
      if (v > best_value) {
        best_value = v;
        best_j = j;
      }
    }
    if (best_j < 0) break;
    selected.push_back(best_j);
    taken[static_cast<std::size_t>(best_j)] = true;
    spent += costs.cost(best_j);
    value = best_value;
  }
  std::sort(selected.begin(), selected.end());
  return SubsetChoice{selected, value};
}

std::vector<Index> uniform_spacing(int n, int k) {
  if (k < 0 || k > n) throw ValidationError("uniform_spacing requires 0 <= k <= n");
  std::vector<Index> out;
  Index prev = 0;
  for (int i = 1; i <= k; ++i) {
    Index v = static_cast<Index>(std::lround(static_cast<double>(i) * (n + 1) / (k + 1)));
    v = std::clamp(v, 1, n);
    if (v <= prev) v = prev + 1;
    out.push_back(v);
    prev = v;
  }
  // Shifting right can only overflow when every later slot is taken; pull back from the end.
  for (int i = k - 1; i >= 0 && out[static_cast<std::size_t>(i)] > n - (k - 1 - i); --i) {
    out[static_cast<std::size_t>(i)] = n - (k - 1 - i);
  }
  return out;
}

}  // namespace voidp
