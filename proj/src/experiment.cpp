#include "voidp/experiment.hpp"

#include <algorithm>
#include <optional>

#include "voidp/error.hpp"
#include "voidp/oracles.hpp"
#include "voidp/plan_dp.hpp"
#include "voidp/subset_dp.hpp"

namespace voidp {

const char* to_string(Method method) {
  switch (method) {
    case Method::Uniform: return "uniform";
    case Method::Greedy: return "greedy";
    case Method::OptimalSubset: return "optimal_subset";
    case Method::OptimalPlan: return "optimal_plan";
  }
  return "?";
}

Method method_from_string(const std::string& text) {
  for (Method m : {Method::Uniform, Method::Greedy, Method::OptimalSubset, Method::OptimalPlan}) {
    if (text == to_string(m)) return m;
  }
  if (text == "optimal-subset") return Method::OptimalSubset;
  if (text == "optimal-plan") return Method::OptimalPlan;
  throw ValidationError("unknown method '" + text + "' (expected uniform|greedy|optimal_subset|optimal_plan)");
}

ExperimentTable run_experiment(const ChainModel& model, const RewardSpec& spec, const CostModel& costs,
                               Mode mode, const std::vector<Method>& methods, int k_min, int k_max) {
  require_valid(model);
  require_valid(spec, model);
  const int n = model.size();
  if (k_min < 0 || k_max < k_min || k_max > n) throw ValidationError("k range must satisfy 0 <= k_min <= k_max <= n");
  if (methods.empty()) throw ValidationError("no methods requested");

  CostModel unit = costs;
  unit.budget = k_max;
  unit.costs.assign(static_cast<std::size_t>(n), std::vector<int>{1});
  require_valid(unit, model);

  auto wants = [&](Method m) { return std::find(methods.begin(), methods.end(), m) != methods.end(); };
  std::optional<SubsetResult> subset;
  if (wants(Method::OptimalSubset)) subset = select_subset(model, spec, unit, mode);
  std::optional<PlanTables> plan;
  if (wants(Method::OptimalPlan)) plan = build_plan(model, spec, unit, mode);

  const RewardEvaluator evaluator(model, spec);
  ExperimentTable table;
  table.methods = methods;
  table.baseline = total_objective(evaluator, unit, std::vector<Index>{}, mode);
  for (int k = k_min; k <= k_max; ++k) {
    CostModel at_k = unit;
    at_k.budget = k;
    const double uniform = total_objective(evaluator, at_k, uniform_spacing(n, k), mode);
    ExperimentRow row;
    row.k = k;
    for (Method m : methods) {
      double v = 0.0;
      switch (m) {
        case Method::Uniform: v = uniform; break;
        case Method::Greedy: v = greedy_subset(model, spec, at_k, mode).value; break;
        case Method::OptimalSubset: v = subset->tables.value(0, n + 1, k); break;
        case Method::OptimalPlan: v = plan->value(0, n + 1, 0, 0, k); break;
      }
      row.values.push_back(v);
      const double red_u = uniform - table.baseline;
      row.improvement.push_back(red_u > 0.0 ? ((v - table.baseline) - red_u) / red_u : 0.0);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_csv(std::ostream& out, const ExperimentTable& table) {
  out << "k";
  for (Method m : table.methods) out << ',' << to_string(m);
  for (Method m : table.methods) out << ",improvement_" << to_string(m);
  out << '\n';
  const auto precision = out.precision(17);
  for (const auto& row : table.rows) {
    out << row.k;
    for (double v : row.values) out << ',' << v;
    for (double v : row.improvement) out << ',' << v;
    out << '\n';
  }
  out.precision(precision);
}

}  // namespace voidp
