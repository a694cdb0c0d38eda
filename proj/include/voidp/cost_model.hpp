#pragma once

#include <vector>

#include "voidp/chain_model.hpp"

namespace voidp {

/// Penalties C_j(x_j) (subtracted from reward), integer costs beta_j(x_j)
/// (consumed from the budget) and the budget B. Each per-variable vector holds
/// either one entry (state-independent) or one entry per state.
struct CostModel {
  std::vector<std::vector<double>> penalties;
  std::vector<std::vector<int>> costs;
  int budget = 0;

  /// Constant penalty and cost for every variable of an n-variable chain.
  static CostModel uniform(int n, int budget, double penalty = 0.0, int cost = 1);

  double penalty(Index j, State x) const;
  int cost(Index j, State x) const;
  /// Penalty/cost of a state-independent variable (first entry).
  double penalty(Index j) const { return penalty(j, 0); }
  int cost(Index j) const { return cost(j, 0); }
  bool state_dependent() const;

  friend bool operator==(const CostModel&, const CostModel&) = default;
};

ValidationReport validate_costs(const CostModel& costs, const ChainModel& model);
void require_valid(const CostModel& costs, const ChainModel& model);

}  // namespace voidp
