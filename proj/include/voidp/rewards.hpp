#pragma once

// Local reward functionals, their expectations over separator outcomes, and the
// decomposed total objective L(A) = sum_j R_j(X_j | X_A) - C(A).

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "voidp/chain_model.hpp"
#include "voidp/cost_model.hpp"

namespace voidp {

/// Negative Shannon entropy (bits) of the conditional marginal.
struct ResidualEntropy {
  friend bool operator==(const ResidualEntropy&, const ResidualEntropy&) = default;
};

/// -H(X_j | X_{j-1}, evidence); summing over j yields the negative joint entropy.
struct JointEntropy {
  friend bool operator==(const JointEntropy&, const JointEntropy&) = default;
};

/// Maximum expected utility over a finite action set.
struct DecisionVoi {
  std::vector<std::string> actions;
  /// |actions| x d_j utility table.
  Matrix utility;
  friend bool operator==(const DecisionVoi&, const DecisionVoi&) = default;
};

/// Max-marginal of the best state minus that of the runner-up.
struct Margin {
  friend bool operator==(const Margin&, const Margin&) = default;
};

/// -w * Var(X_j) over the state values.
struct WeightedVariance {
  double weight = 1.0;
  friend bool operator==(const WeightedVariance&, const WeightedVariance&) = default;
};

/// Probability that X_j lies in the critical set.
struct Hotspot {
  std::vector<State> critical;
  friend bool operator==(const Hotspot&, const Hotspot&) = default;
};

/// E[X_j] over the state values.
struct Expectation {
  friend bool operator==(const Expectation&, const Expectation&) = default;
};

using LocalReward = std::variant<ResidualEntropy, JointEntropy, DecisionVoi, Margin,
                                 WeightedVariance, Hotspot, Expectation>;

std::string reward_name(const LocalReward& reward);

/// One local reward per variable.
struct RewardSpec {
  std::vector<LocalReward> rewards;

  static RewardSpec uniform(const LocalReward& reward, int n);
  const LocalReward& at(Index j) const { return rewards[static_cast<std::size_t>(j - 1)]; }
  bool uses_max_marginals() const;

  friend bool operator==(const RewardSpec&, const RewardSpec&) = default;
};

ValidationReport validate_reward_spec(const RewardSpec& spec, const ChainModel& model);
void require_valid(const RewardSpec& spec, const ChainModel& model);

/// Shannon entropy in bits with 0 log 0 = 0.
double entropy_bits(std::span<const double> p);

/// Applies a distribution-based reward. `values` are the state values of the
/// variable and are required by WeightedVariance and Expectation. Throws
/// ValidationError for Margin (which needs max-marginals) or shape mismatches.
double local_reward(const LocalReward& reward, const Dist& dist, std::span<const double> values = {});

/// Applies Margin to a max-marginal vector. Throws for every other variant.
double local_reward(const LocalReward& reward, const MaxMarg& max_marg);

/// JointEntropy reward from the pairwise conditional P(X_{j-1}, X_j | evidence).
double joint_entropy_reward(const Matrix& pair);

/// Evaluates rewards for separator-conditioned marginals on top of ChainTables.
/// Separators are variable indices; 0 stands for "no ancestor" and n+1 for
/// "no descendant". The model and spec must outlive the evaluator.
class RewardEvaluator {
 public:
  RewardEvaluator(const ChainModel& model, const RewardSpec& spec);

  const ChainTables& tables() const noexcept { return tables_; }
  const ChainModel& model() const noexcept { return *model_; }
  const RewardSpec& spec() const noexcept { return *spec_; }
  int size() const noexcept { return model_->size(); }

  /// R_j(X_j | X_a = x_a, X_b = x_b) for a < j < b. Requires joint(a,x_a,b,x_b) > 0.
  double conditional_reward(Index j, Index a, State xa, Index b, State xb) const;
  /// R_j(X_j | X_j = x_j).
  double node_reward(Index j, State xj) const;
  /// sum over (x_a, x_b) of P(x_a, x_b) R_j(X_j | x_a, x_b).
  double expected_reward(Index j, Index a, Index b) const;
  /// sum over x_j of P(x_j) R_j(X_j | x_j).
  double expected_node_reward(Index j) const;
  /// sum over x_j of P(x_j) C_j(x_j).
  double expected_penalty(const CostModel& costs, Index j) const;

 private:
  const ChainModel* model_;
  const RewardSpec* spec_;
  ChainTables tables_;
};

/// Separators of a variable: nearest selected ancestor and (smoothing) descendant.
struct Separators {
  std::optional<Index> before;
  std::optional<Index> after;
};

/// Expected local reward of X_j given its separators. If j coincides with a
/// separator the variable counts as observed.
double expected_local_reward(const ChainModel& model, const RewardSpec& spec, Index j,
                             const Separators& separators, Mode mode);

/// L(A): expected rewards minus expected penalties, evaluated segment by segment.
double total_objective(const ChainModel& model, const RewardSpec& spec, const CostModel& costs,
                       std::span<const Index> selected, Mode mode);

/// Same as total_objective with a prepared evaluator (no revalidation).
double total_objective(const RewardEvaluator& evaluator, const CostModel& costs,
                       std::span<const Index> selected, Mode mode);

/// Reward realized after observing `evidence`: sum_j R_j(X_j | x_A) - C(x_A),
/// with each R_j conditioned on its separators under the evidence's mode.
double realized_objective(const RewardEvaluator& evaluator, const CostModel& costs,
                          const Evidence& evidence);

}  // namespace voidp
