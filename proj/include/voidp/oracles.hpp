#pragma once

// Exhaustive ground truth on explicit joint tables, plus the greedy and
// uniform-spacing baselines. Everything here enumerates; nothing exploits the
// chain structure, so the dynamic programs can be certified against it.

#include <cstddef>
#include <span>
#include <vector>

#include "voidp/chain_model.hpp"
#include "voidp/cost_model.hpp"
#include "voidp/rewards.hpp"

namespace voidp {

inline constexpr std::size_t kMaxJointCells = std::size_t{1} << 20;

/// Dense joint distribution over variables 1..n. Variable 1 is the most
/// significant digit of the cell index.
struct ExplicitJoint {
  std::vector<int> domains;
  /// Filtering order: a variable sees evidence at variables with time <= its own.
  std::vector<int> times;
  std::vector<std::vector<double>> state_values;
  std::vector<double> table;

  int size() const noexcept { return static_cast<int>(domains.size()); }
  std::size_t cells() const noexcept { return table.size(); }
  std::span<const double> values(Index j) const;
};

/// Throws CapacityExceeded if the product of domain sizes exceeds kMaxJointCells.
ExplicitJoint joint_from_chain(const ChainModel& model);

/// Label Y (uniform over two classes) observed through two conditionally
/// independent noisy copies that agree with it with probability `agreement`.
/// Variables: 1 = Y, 2 = X_1, 3 = X_2.
ExplicitJoint noisy_label_star(double agreement = 0.75);

/// Decision reward on the label of `noisy_label_star`: classify as either class
/// (+1 if right, -3 if wrong) or abstain (0). The noisy copies carry zero reward.
RewardSpec noisy_label_rewards();

/// P(X_j | evidence) by summing the table; evidence mode is honoured via `times`.
Dist oracle_marginal(const ExplicitJoint& joint, const Evidence& evidence, Index j);

/// Max-marginal of X_j by table maximization under the given evidence.
MaxMarg oracle_max_marginal(const ExplicitJoint& joint, const Evidence& evidence, Index j);

/// H(X_V | X_A) in bits, as an expectation over x_A.
double oracle_conditional_entropy(const ExplicitJoint& joint, std::span<const Index> observed);

/// L(A) evaluated literally as sum over x_A of P(x_A) [sum_j R_j(X_j | x_A) - C(x_A)].
double oracle_total_reward(const ExplicitJoint& joint, const RewardSpec& spec,
                           const CostModel& costs, std::span<const Index> observed, Mode mode);

struct SubsetChoice {
  std::vector<Index> selected;
  double value = 0.0;
};

/// Exhaustive max of L(A) over all A with beta(A) <= B (n <= 12).
SubsetChoice oracle_best_subset(const ExplicitJoint& joint, const RewardSpec& spec,
                                const CostModel& costs, Mode mode);

/// Optimal value over sequential policies with worst-case cost <= B, by
/// recursing over every reachable evidence state (n <= 4, d <= 2, B <= 3).
double oracle_best_plan(const ExplicitJoint& joint, const RewardSpec& spec, const CostModel& costs,
                        Mode mode);

/// Adds the affordable variable with the largest gain in L(A) until no gain is positive.
SubsetChoice greedy_subset(const ChainModel& model, const RewardSpec& spec, const CostModel& costs,
                           Mode mode);

/// k observation times spread evenly over 1..n.
std::vector<Index> uniform_spacing(int n, int k);

}  // namespace voidp
