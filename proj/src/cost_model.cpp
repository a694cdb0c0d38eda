#include "voidp/cost_model.hpp"

#include <cmath>

#include "voidp/error.hpp"

namespace voidp {

CostModel CostModel::uniform(int n, int budget, double penalty, int cost) {
  CostModel c;
  c.penalties.assign(static_cast<std::size_t>(n), {penalty});
  c.costs.assign(static_cast<std::size_t>(n), {cost});
  c.budget = budget;
  return c;
}

double CostModel::penalty(Index j, State x) const {
  const auto& row = penalties[static_cast<std::size_t>(j - 1)];
  return row.size() == 1 ? row[0] : row[static_cast<std::size_t>(x)];
}

int CostModel::cost(Index j, State x) const {
  const auto& row = costs[static_cast<std::size_t>(j - 1)];
  return row.size() == 1 ? row[0] : row[static_cast<std::size_t>(x)];
}

bool CostModel::state_dependent() const {
  for (const auto& row : penalties) {
    for (double v : row) {
      if (v != row.front()) return true;
    }
  }
  for (const auto& row : costs) {
    for (int v : row) {
      if (v != row.front()) return true;
    }
  }
  return false;
}

ValidationReport validate_costs(const CostModel& costs, const ChainModel& model) {
  ValidationReport report;
  auto& out = report.violations;
  const int n = model.size();
  if (costs.budget < 0) out.push_back("budget " + std::to_string(costs.budget) + " < 0");
  if (static_cast<int>(costs.penalties.size()) != n) {
    out.push_back("penalties has " + std::to_string(costs.penalties.size()) + " entries, expected " +
                  std::to_string(n));
  }
  if (static_cast<int>(costs.costs.size()) != n) {
    out.push_back("costs has " + std::to_string(costs.costs.size()) + " entries, expected " +
                  std::to_string(n));
  }
  if (!out.empty()) return report;
  for (Index j = 1; j <= n; ++j) {
    const auto& pen = costs.penalties[static_cast<std::size_t>(j - 1)];
    const auto& cst = costs.costs[static_cast<std::size_t>(j - 1)];
    const std::size_t d = static_cast<std::size_t>(model.states(j));
    const std::string where = " for X_" + std::to_string(j);
    if (pen.size() != 1 && pen.size() != d) out.push_back("penalty shape mismatch" + where);
    if (cst.size() != 1 && cst.size() != d) out.push_back("cost shape mismatch" + where);
    for (double v : pen) {
      if (!(v >= 0.0) || !std::isfinite(v)) out.push_back("negative or non-finite penalty" + where);
    }
    for (int v : cst) {
      if (v < 1) out.push_back("cost " + std::to_string(v) + " < 1" + where);
    }
  }
  return report;
}

void require_valid(const CostModel& costs, const ChainModel& model) {
  ValidationReport report = validate_costs(costs, model);
  if (report.ok()) return;
  std::string msg = "invalid cost model:";
  for (const auto& v : report.violations) msg += "\n  " + v;
  throw ValidationError(msg);
}

}  // namespace voidp
