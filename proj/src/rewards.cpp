#include "voidp/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "voidp/error.hpp"

namespace voidp {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double mean(std::span<const double> p, std::span<const double> values) {
  double m = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) m += p[x] * values[x];
  return m;
}

void require_values(std::span<const double> p, std::span<const double> values, const char* name) {
  if (values.size() != p.size()) {
    throw ValidationError(std::string(name) + " requires one state value per state");
  }
}

}  // namespace

std::string reward_name(const LocalReward& reward) {
  return std::visit(Overloaded{
                        [](const ResidualEntropy&) { return std::string("residual_entropy"); },
                        [](const JointEntropy&) { return std::string("joint_entropy"); },
                        [](const DecisionVoi&) { return std::string("decision_voi"); },
                        [](const Margin&) { return std::string("margin"); },
                        [](const WeightedVariance&) { return std::string("weighted_variance"); },
                        [](const Hotspot&) { return std::string("hotspot"); },
                        [](const Expectation&) { return std::string("expectation"); },
                    },
                    reward);
}

RewardSpec RewardSpec::uniform(const LocalReward& reward, int n) {
  RewardSpec spec;
  spec.rewards.assign(static_cast<std::size_t>(n), reward);
  return spec;
}

bool RewardSpec::uses_max_marginals() const {
  return std::any_of(rewards.begin(), rewards.end(),
                     [](const LocalReward& r) { return std::holds_alternative<Margin>(r); });
}

ValidationReport validate_reward_spec(const RewardSpec& spec, const ChainModel& model) {
  ValidationReport report;
  auto& out = report.violations;
  if (static_cast<int>(spec.rewards.size()) != model.size()) {
    out.push_back("reward spec has " + std::to_string(spec.rewards.size()) + " entries for " +
                  std::to_string(model.size()) + " variables");
    return report;
  }
  for (Index j = 1; j <= model.size(); ++j) {
    const std::string where = " for X_" + std::to_string(j);
    const int d = model.states(j);
    std::visit(Overloaded{
                   [](const ResidualEntropy&) {},
                   [](const JointEntropy&) {},
                   [](const Margin&) {},
                   [&](const DecisionVoi& r) {
                     if (r.utility.rows() == 0) out.push_back("decision_voi has no actions" + where);
                     if (static_cast<int>(r.utility.cols()) != d) {
                       out.push_back("utility table has wrong width" + where);
                     }
                     if (!r.actions.empty() && r.actions.size() != r.utility.rows()) {
                       out.push_back("action labels do not match utility rows" + where);
                     }
                   },
                   [&](const WeightedVariance& r) {
                     if (!(r.weight >= 0.0)) out.push_back("negative variance weight" + where);
                     if (!model.has_state_values()) {
                       out.push_back("weighted_variance requires state values" + where);
                     }
                   },
                   [&](const Hotspot& r) {
                     if (r.critical.empty()) out.push_back("empty critical set" + where);
                     for (State s : r.critical) {
                       if (s < 0 || s >= d) out.push_back("critical state out of range" + where);
                     }
                   },
                   [&](const Expectation&) {
                     if (!model.has_state_values()) {
                       out.push_back("expectation requires state values" + where);
                     }
                   },
               },
               spec.at(j));
  }
  return report;
}

void require_valid(const RewardSpec& spec, const ChainModel& model) {
  ValidationReport report = validate_reward_spec(spec, model);
  if (report.ok()) return;
  std::string msg = "invalid reward spec:";
  for (const auto& v : report.violations) msg += "\n  " + v;
  throw ValidationError(msg);
}

double entropy_bits(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log2(v);
  }
  return h;
}

double local_reward(const LocalReward& reward, const Dist& dist, std::span<const double> values) {
  const std::span<const double> p = dist.p;
  return std::visit(
      Overloaded{
          [&](const ResidualEntropy&) { return -entropy_bits(p); },
          [&](const JointEntropy&) { return -entropy_bits(p); },
          [&](const DecisionVoi& r) {
            if (r.utility.cols() != p.size()) throw ValidationError("utility shape mismatch");
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < r.utility.rows(); ++a) {
              double eu = 0.0;
              for (std::size_t x = 0; x < p.size(); ++x) eu += p[x] * r.utility(a, x);
              best = std::max(best, eu);
            }
            return best;
          },
          [&](const Margin&) -> double {
            throw ValidationError("margin reward requires max-marginals, got a distribution");
          },
          [&](const WeightedVariance& r) {
            require_values(p, values, "weighted_variance");
            const double m = mean(p, values);
            double var = 0.0;
            for (std::size_t x = 0; x < p.size(); ++x) var += p[x] * (values[x] - m) * (values[x] - m);
            return -r.weight * var;
          },
          [&](const Hotspot& r) {
            double mass = 0.0;
            for (State s : r.critical) {
              if (s < 0 || static_cast<std::size_t>(s) >= p.size()) {
                throw ValidationError("critical state out of range");
              }
              mass += p[static_cast<std::size_t>(s)];
            }
            return mass;
          },
          [&](const Expectation&) {
            require_values(p, values, "expectation");
            return mean(p, values);
          },
      },
      reward);
}

double local_reward(const LocalReward& reward, const MaxMarg& max_marg) {
  if (!std::holds_alternative<Margin>(reward)) {
    throw ValidationError(reward_name(reward) + " reward requires a distribution, got max-marginals");
  }
  const auto& v = max_marg.values;
  if (v.empty()) throw ValidationError("empty max-marginal");
  std::size_t best = 0;
  for (std::size_t x = 1; x < v.size(); ++x) {
    if (v[x] > v[best]) best = x;
  }
  double runner_up = 0.0;
  for (std::size_t x = 0; x < v.size(); ++x) {
    if (x != best) runner_up = std::max(runner_up, v[x]);
  }
  return v[best] - runner_up;
}

double joint_entropy_reward(const Matrix& pair) {
  std::vector<double> prev(pair.rows(), 0.0);
  for (std::size_t r = 0; r < pair.rows(); ++r) {
    for (double v : pair.row(r)) prev[r] += v;
  }
  return -(entropy_bits(pair.data()) - entropy_bits(prev));
}

// ---------------------------------------------------------------------------

RewardEvaluator::RewardEvaluator(const ChainModel& model, const RewardSpec& spec)
    : model_(&model), spec_(&spec), tables_(model, spec.uses_max_marginals()) {
  require_valid(spec, model);
}

double RewardEvaluator::conditional_reward(Index j, Index a, State xa, Index b, State xb) const {
  const LocalReward& reward = spec_->at(j);
  const std::size_t d = static_cast<std::size_t>(model_->states(j));
  if (std::holds_alternative<Margin>(reward)) {
    MaxMarg mm;
    mm.values.resize(d);
    tables_.max_conditional(j, a, xa, b, xb, mm.values);
    return local_reward(reward, mm);
  }
  if (std::holds_alternative<JointEntropy>(reward) && j >= 2) {
    Matrix pair;
    tables_.pair_conditional(j, a, xa, b, xb, pair);
    return joint_entropy_reward(pair);
  }
  Dist dist;
  dist.p.resize(d);
  tables_.conditional(j, a, xa, b, xb, dist.p);
  return local_reward(reward, dist, model_->values(j));
}

double RewardEvaluator::node_reward(Index j, State xj) const {
  const LocalReward& reward = spec_->at(j);
  const std::size_t d = static_cast<std::size_t>(model_->states(j));
  if (std::holds_alternative<JointEntropy>(reward)) return 0.0;
  if (std::holds_alternative<Margin>(reward)) {
    MaxMarg mm;
    mm.values.resize(d);
    tables_.max_conditional(j, j, xj, j, xj, mm.values);
    return local_reward(reward, mm);
  }
  Dist dist;
  dist.p.assign(d, 0.0);
  dist.p[static_cast<std::size_t>(xj)] = 1.0;
  return local_reward(reward, dist, model_->values(j));
}

double RewardEvaluator::expected_reward(Index j, Index a, Index b) const {
  const int da = model_->states(a);
  const int db = model_->states(b);
  double total = 0.0;
  for (State xa = 0; xa < da; ++xa) {
    for (State xb = 0; xb < db; ++xb) {
      const double w = tables_.joint(a, xa, b, xb);
      if (w <= 0.0) continue;
      total += w * conditional_reward(j, a, xa, b, xb);
    }
  }
  return total;
}

double RewardEvaluator::expected_node_reward(Index j) const {
  const auto& marg = tables_.marginal(j);
  double total = 0.0;
  for (std::size_t x = 0; x < marg.size(); ++x) {
    if (marg[x] > 0.0) total += marg[x] * node_reward(j, static_cast<State>(x));
  }
  return total;
}

double RewardEvaluator::expected_penalty(const CostModel& costs, Index j) const {
  const auto& marg = tables_.marginal(j);
  double total = 0.0;
  for (std::size_t x = 0; x < marg.size(); ++x) total += marg[x] * costs.penalty(j, static_cast<State>(x));
  return total;
}

double expected_local_reward(const ChainModel& model, const RewardSpec& spec, Index j,
                             const Separators& separators, Mode mode) {
  const int n = model.size();
  if (j < 1 || j > n) throw ValidationError("variable index out of range");
  const Index a = separators.before.value_or(0);
  const Index b = mode == Mode::Filtering ? n + 1 : separators.after.value_or(n + 1);
  if (a < 0 || a > j || b < j || b > n + 1) {
    throw ValidationError("separators out of order: need before <= j <= after");
  }
  RewardEvaluator evaluator(model, spec);
  if (a == j || b == j) return evaluator.expected_node_reward(j);
  return evaluator.expected_reward(j, a, b);
}

double total_objective(const RewardEvaluator& evaluator, const CostModel& costs,
                       std::span<const Index> selected, Mode mode) {
  const int n = evaluator.size();
  std::vector<Index> sel(selected.begin(), selected.end());
  std::sort(sel.begin(), sel.end());
  sel.erase(std::unique(sel.begin(), sel.end()), sel.end());
  for (Index j : sel) {
    if (j < 1 || j > n) throw ValidationError("selected index " + std::to_string(j) + " out of range");
  }
  // Boundaries 0 and n+1 are the dummy endpoints.
  std::vector<Index> bounds;
  bounds.reserve(sel.size() + 2);
  bounds.push_back(0);
  bounds.insert(bounds.end(), sel.begin(), sel.end());
  bounds.push_back(n + 1);
  double total = 0.0;
  for (std::size_t v = 0; v + 1 < bounds.size(); ++v) {
    const Index a = bounds[v];
    const Index b = bounds[v + 1];
    if (a >= 1) total += evaluator.expected_node_reward(a) - evaluator.expected_penalty(costs, a);
    const Index right = mode == Mode::Filtering ? n + 1 : b;
    for (Index j = a + 1; j < b; ++j) total += evaluator.expected_reward(j, a, right);
  }
  return total;
}

double total_objective(const ChainModel& model, const RewardSpec& spec, const CostModel& costs,
                       std::span<const Index> selected, Mode mode) {
  RewardEvaluator evaluator(model, spec);
  require_valid(costs, model);
  return total_objective(evaluator, costs, selected, mode);
}

double realized_objective(const RewardEvaluator& evaluator, const CostModel& costs,
                          const Evidence& evidence) {
  const ChainModel& model = evaluator.model();
  const int n = model.size();
  check_evidence_domain(model, evidence);
  const ChainTables& tables = evaluator.tables();
  double total = 0.0;
  for (Index j = 1; j <= n; ++j) {
    if (auto s = evidence.state_at(j)) {
      if (tables.marginal(j)[static_cast<std::size_t>(*s)] <= 0.0) {
        throw ZeroProbabilityEvidence("X_" + std::to_string(j) + "=" + std::to_string(*s));
      }
      total += evaluator.node_reward(j, *s) - costs.penalty(j, *s);
      continue;
    }
    const auto before = evidence.at_or_before(j);
    const auto after = evidence.mode() == Mode::Smoothing ? evidence.at_or_after(j) : std::nullopt;
    const Index a = before ? before->index : 0;
    const State xa = before ? before->state : 0;
    const Index b = after ? after->index : n + 1;
    const State xb = after ? after->state : 0;
    if (tables.joint(a, xa, b, xb) <= 0.0) {
      throw ZeroProbabilityEvidence("separators of X_" + std::to_string(j) + " are incompatible");
    }
    total += evaluator.conditional_reward(j, a, xa, b, xb);
  }
  return total;
}

}  // namespace voidp
