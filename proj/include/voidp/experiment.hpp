#pragma once

// Method comparison over a range of observation counts.

#include <ostream>
#include <string>
#include <vector>

#include "voidp/chain_model.hpp"
#include "voidp/cost_model.hpp"
#include "voidp/rewards.hpp"

namespace voidp {

enum class Method { Uniform, Greedy, OptimalSubset, OptimalPlan };

const char* to_string(Method method);
Method method_from_string(const std::string& text);

struct ExperimentRow {
  int k = 0;
  /// Objective per requested method, in request order.
  std::vector<double> values;
  /// (reduction_m - reduction_uniform) / reduction_uniform, where a reduction
  /// is the objective minus L(empty set); 0 when the uniform reduction is <= 0.
  std::vector<double> improvement;
};

struct ExperimentTable {
  std::vector<Method> methods;
  double baseline = 0.0;
  std::vector<ExperimentRow> rows;
};

/// Budgets k = k_min..k_max with unit costs and the penalties of `costs`
/// (its costs and budget are ignored). Uniform is always evaluated as the
/// reference even if it is not listed.
ExperimentTable run_experiment(const ChainModel& model, const RewardSpec& spec, const CostModel& costs,
                               Mode mode, const std::vector<Method>& methods, int k_min, int k_max);

/// CSV with a header row: k, one objective column per method, then one
/// improvement column per method.
void write_csv(std::ostream& out, const ExperimentTable& table);

}  // namespace voidp
