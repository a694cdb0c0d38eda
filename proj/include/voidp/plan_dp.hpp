#pragma once

// Optimal conditional observation plans: table construction, exact plan
// evaluation and step-by-step execution against an observation source.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "voidp/chain_model.hpp"
#include "voidp/cost_model.hpp"
#include "voidp/rewards.hpp"
#include "voidp/subset_dp.hpp"

namespace voidp {

/// Hard cap on the number of cells in the split table.
inline constexpr std::size_t kMaxPlanCells = std::size_t{1} << 28;

/// Compact encoding of an optimal conditional plan. Tables are dense over
/// (a, b, x_a, x_b, k); in filtering mode only b = n+1 (with its single state)
/// is stored and the split table is empty.
class PlanTables {
 public:
  PlanTables() = default;
  PlanTables(ChainModel model, RewardSpec spec, CostModel costs, Mode mode);

  const ChainModel& model() const noexcept { return model_; }
  const RewardSpec& spec() const noexcept { return spec_; }
  const CostModel& costs() const noexcept { return costs_; }
  Mode mode() const noexcept { return mode_; }
  int size() const noexcept { return n_; }
  int budget() const noexcept { return costs_.budget; }
  int width() const noexcept { return width_; }

  /// Expected value J_{a:b}(x_a, x_b; k).
  double value(Index a, Index b, State xa, State xb, int k) const { return values_[slot(a, b, xa, xb, k)]; }
  /// Next query pi_{a:b}(x_a, x_b; k), or kStop.
  Index choice(Index a, Index b, State xa, State xb, int k) const { return choices_[slot(a, b, xa, xb, k)]; }
  /// Left budget sigma_{a:b}(x_a, x_b, x_j; k); always 0 in filtering mode.
  int split(Index a, Index b, State xa, State xb, State xj, int k) const;

  /// J_{0:n+1}(B) with the dummy endpoint states.
  double root_value() const { return value(0, size() + 1, 0, 0, budget()); }

  std::uint64_t eval_count() const noexcept { return eval_count_; }

  /// Raw storage for serialization.
  std::vector<double>& raw_values() noexcept { return values_; }
  std::vector<Index>& raw_choices() noexcept { return choices_; }
  std::vector<int>& raw_splits() noexcept { return splits_; }
  const std::vector<double>& raw_values() const noexcept { return values_; }
  const std::vector<Index>& raw_choices() const noexcept { return choices_; }
  const std::vector<int>& raw_splits() const noexcept { return splits_; }
  void set_eval_count(std::uint64_t count) noexcept { eval_count_ = count; }

  friend bool operator==(const PlanTables&, const PlanTables&) = default;

 private:
  friend PlanTables build_plan(const ChainModel&, const RewardSpec&, const CostModel&, Mode);

  std::size_t slot(Index a, Index b, State xa, State xb, int k) const;

  ChainModel model_;
  RewardSpec spec_;
  CostModel costs_;
  Mode mode_ = Mode::Smoothing;
  int n_ = 0;
  int width_ = 1;
  std::uint64_t eval_count_ = 0;
  std::vector<double> values_;
  std::vector<Index> choices_;
  std::vector<int> splits_;
};

/// Builds the plan tables. Costs may be state-dependent; every cost must be >= 1.
PlanTables build_plan(const ChainModel& model, const RewardSpec& spec, const CostModel& costs, Mode mode);

/// Expected value of the encoded plan, recomputed by walking the choice and
/// split tables over outcome distributions. Throws ValidationError if `model`
/// does not match the model the tables were built for.
double plan_value(const PlanTables& tables, const ChainModel& model);

/// Position of an execution inside the plan: a stack of pending sub-chains.
/// The left sub-chain after a query is finished before the right one.
class PlanCursor {
 public:
  explicit PlanCursor(const PlanTables& tables);

  /// Index the plan asks for next, or nullopt once the plan has stopped.
  std::optional<Index> next_query() const { return pending_; }
  bool done() const noexcept { return !pending_.has_value(); }

  /// Records X_j = state. Throws ValidationError if j is not the pending query
  /// or the state is out of range, and ZeroProbabilityEvidence if the answer
  /// is impossible given the observations so far.
  void answer(Index j, State state);

  const std::vector<Observation>& queried() const noexcept { return queried_; }
  Evidence evidence() const;
  int spent() const noexcept { return spent_; }
  int remaining() const noexcept { return tables_->budget() - spent_; }
  const PlanTables& tables() const noexcept { return *tables_; }

 private:
  struct Segment {
    Index a;
    Index b;
    State xa;
    State xb;
    int k;
  };

  void advance();

  const PlanTables* tables_;
  std::vector<Segment> stack_;
  std::optional<Segment> active_;
  std::optional<Index> pending_;
  std::vector<Observation> queried_;
  int spent_ = 0;
};

/// Supplies observed states during plan execution.
class ObservationSource {
 public:
  virtual ~ObservationSource() = default;
  virtual State observe(Index j) = 0;
};

/// Answers from a recorded assignment (either full, or a map of index to state).
class RecordedSource : public ObservationSource {
 public:
  explicit RecordedSource(std::map<Index, State> answers) : answers_(std::move(answers)) {}
  explicit RecordedSource(const std::vector<State>& full_assignment);
  State observe(Index j) override;

 private:
  std::map<Index, State> answers_;
};

/// Draws a full hidden assignment from the model up front and reveals it on demand.
class SamplerSource : public ObservationSource {
 public:
  SamplerSource(const ChainModel& model, std::mt19937_64& rng);
  State observe(Index j) override;
  const std::vector<State>& assignment() const noexcept { return assignment_; }

 private:
  std::vector<State> assignment_;
};

/// Prompts on a text stream for each queried value.
class InteractiveSource : public ObservationSource {
 public:
  InteractiveSource(const ChainModel& model, std::istream& in, std::ostream& out)
      : model_(&model), in_(&in), out_(&out) {}
  State observe(Index j) override;

 private:
  const ChainModel* model_;
  std::istream* in_;
  std::ostream* out_;
};

struct EpisodeRecord {
  /// Queries in the order they were made.
  std::vector<Observation> queried;
  /// sum_j R_j(X_j | observed values) minus realized penalties.
  double realized_reward = 0.0;
  int spent = 0;
};

/// Runs the plan to completion. Throws ValidationError if the source answers
/// out of range or the same index would be queried twice.
EpisodeRecord execute_plan(const PlanTables& tables, ObservationSource& source);

/// Realized reward of a finished cursor.
double realized_reward(const PlanTables& tables, const std::vector<Observation>& queried);

}  // namespace voidp
