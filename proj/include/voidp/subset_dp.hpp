#pragma once

// Optimal open-loop observation subsets under a budget (VOIDP subset recursion).

#include <cstdint>
#include <vector>

#include "voidp/chain_model.hpp"
#include "voidp/cost_model.hpp"
#include "voidp/rewards.hpp"

namespace voidp {

/// Choice value meaning "observe nothing more in this sub-chain".
inline constexpr Index kStop = -1;

/// Value and traceback tables over sub-chains a:b (0 <= a < b <= n+1) and budgets 0..B.
class SubsetTables {
 public:
  SubsetTables() = default;
  SubsetTables(int n, int budget);

  int size() const noexcept { return n_; }
  int budget() const noexcept { return budget_; }

  double& value(Index a, Index b, int k) { return values_[slot(a, b, k)]; }
  double value(Index a, Index b, int k) const { return values_[slot(a, b, k)]; }
  Index& choice(Index a, Index b, int k) { return choices_[slot(a, b, k)]; }
  Index choice(Index a, Index b, int k) const { return choices_[slot(a, b, k)]; }

  const std::vector<double>& raw_values() const noexcept { return values_; }
  const std::vector<Index>& raw_choices() const noexcept { return choices_; }
  std::vector<double>& raw_values() noexcept { return values_; }
  std::vector<Index>& raw_choices() noexcept { return choices_; }

  friend bool operator==(const SubsetTables&, const SubsetTables&) = default;

 private:
  std::size_t slot(Index a, Index b, int k) const;

  int n_ = 0;
  int budget_ = 0;
  std::vector<double> values_;
  std::vector<Index> choices_;
};

struct SubsetResult {
  Mode mode = Mode::Smoothing;
  std::vector<Index> selected;
  double value = 0.0;
  SubsetTables tables;
  std::uint64_t eval_count = 0;

  friend bool operator==(const SubsetResult&, const SubsetResult&) = default;
};

/// Segment quantities the subset recursion consumes.
class SubsetObjective {
 public:
  virtual ~SubsetObjective() = default;
  virtual int size() const = 0;
  /// Expected reward of X_j given separators a < j < b (b = n+1: none).
  virtual double segment_reward(Index j, Index a, Index b) const = 0;
  /// Expected reward of observed X_j minus its expected penalty.
  virtual double node_value(Index j) const = 0;
};

/// Runs the subset recursion over an arbitrary decomposed objective. Costs
/// must be state-independent and >= 1.
SubsetResult select_subset(const SubsetObjective& objective, const CostModel& costs, Mode mode);

/// Runs the subset recursion. Throws ValidationError for state-dependent
/// penalties or costs, or for costs below 1.
SubsetResult select_subset(const ChainModel& model, const RewardSpec& spec, const CostModel& costs,
                           Mode mode);

/// Replays the traceback from (0, n+1, B) and returns the selected indices in order.
std::vector<Index> replay_traceback(const SubsetTables& tables, const CostModel& costs);

}  // namespace voidp
