#include "voidp/subset_dp.hpp"

#include "voidp/error.hpp"

namespace voidp {

SubsetTables::SubsetTables(int n, int budget)
    : n_(n),
      budget_(budget),
      values_(static_cast<std::size_t>(n + 2) * static_cast<std::size_t>(n + 2) * static_cast<std::size_t>(budget + 1), 0.0),
      choices_(values_.size(), kStop) {}

std::size_t SubsetTables::slot(Index a, Index b, int k) const {
  const auto w = static_cast<std::size_t>(n_ + 2);
  return (static_cast<std::size_t>(a) * w + static_cast<std::size_t>(b)) * static_cast<std::size_t>(budget_ + 1) +
         static_cast<std::size_t>(k);
}

namespace {

class ChainObjective : public SubsetObjective {
 public:
  ChainObjective(const ChainModel& model, const RewardSpec& spec, const CostModel& costs)
      : evaluator_(model, spec), costs_(&costs) {}
  int size() const override { return evaluator_.size(); }
  double segment_reward(Index j, Index a, Index b) const override { return evaluator_.expected_reward(j, a, b); }
  double node_value(Index j) const override {
    return evaluator_.expected_node_reward(j) - evaluator_.expected_penalty(*costs_, j);
  }

 private:
  RewardEvaluator evaluator_;
  const CostModel* costs_;
};

}  // namespace

SubsetResult select_subset(const ChainModel& model, const RewardSpec& spec, const CostModel& costs,
                           Mode mode) {
  require_valid(model);
  require_valid(costs, model);
  ChainObjective objective(model, spec, costs);
  return select_subset(objective, costs, mode);
}

SubsetResult select_subset(const SubsetObjective& objective, const CostModel& costs, Mode mode) {
  const int n = objective.size();
  if (costs.state_dependent()) {
    throw ValidationError("subset selection requires state-independent penalties and costs");
  }
  if (static_cast<int>(costs.costs.size()) != n) throw ValidationError("cost model size does not match model");
  for (Index j = 1; j <= n; ++j) {
    if (costs.cost(j) < 1) throw ValidationError("cost of X_" + std::to_string(j) + " must be >= 1");
  }
  const int budget = costs.budget;
  if (budget < 0) throw ValidationError("budget must be >= 0");

  SubsetResult result;
  result.mode = mode;
  result.tables = SubsetTables(n, budget);
  SubsetTables& t = result.tables;
  std::uint64_t evals = 0;

  // Base cases L_{a:b}(0).
  if (mode == Mode::Smoothing) {
    for (Index a = 0; a <= n; ++a) {
      for (Index b = a + 1; b <= n + 1; ++b) {
        double sum = 0.0;
        for (Index j = a + 1; j < b; ++j) {
          sum += objective.segment_reward(j, a, b);
          ++evals;
        }
        t.value(a, b, 0) = sum;
      }
    }
  } else {
    // Without a right separator the reward of X_j depends only on a, so
    // L_{a:b}(0) is a prefix sum over j.
    for (Index a = 0; a <= n; ++a) {
      double sum = 0.0;
      t.value(a, a + 1, 0) = 0.0;
      for (Index j = a + 1; j <= n; ++j) {
        sum += objective.segment_reward(j, a, n + 1);
        ++evals;
        t.value(a, j + 1, 0) = sum;
      }
    }
  }

  std::vector<double> node(static_cast<std::size_t>(n + 2), 0.0);
  for (Index j = 1; j <= n; ++j) {
    node[static_cast<std::size_t>(j)] = objective.node_value(j);
    ++evals;
  }

  for (int k = 1; k <= budget; ++k) {
    for (Index a = 0; a <= n; ++a) {
      for (Index b = a + 1; b <= n + 1; ++b) {
        double best = t.value(a, b, 0);
        Index choice = kStop;
        for (Index j = a + 1; j < b; ++j) {
          const int beta = costs.cost(j);
          if (beta > k) continue;
          const double v = node[static_cast<std::size_t>(j)] + t.value(a, j, 0) + t.value(j, b, k - beta);
          if (v > best) {
            best = v;
            choice = j;
          }
        }
        t.value(a, b, k) = best;
        t.choice(a, b, k) = choice;
      }
    }
  }

  result.eval_count = evals;
  result.value = t.value(0, n + 1, budget);
  result.selected = replay_traceback(t, costs);
  return result;
}

std::vector<Index> replay_traceback(const SubsetTables& tables, const CostModel& costs) {
  std::vector<Index> selected;
  Index a = 0;
  const Index b = tables.size() + 1;
  int k = tables.budget();
  while (true) {
    const Index j = tables.choice(a, b, k);
    if (j == kStop) break;
    if (j <= a || j >= b) throw ValidationError("traceback choice out of range");
    selected.push_back(j);
    k -= costs.cost(j);
    if (k < 0) throw ValidationError("traceback exceeds budget");
    a = j;
  }
  return selected;
}

}  // namespace voidp
