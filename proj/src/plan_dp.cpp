#include "voidp/plan_dp.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <tuple>

#include "voidp/error.hpp"

namespace voidp {

namespace {

void require_positive_costs(const CostModel& costs) {
  for (std::size_t j = 0; j < costs.costs.size(); ++j) {
    for (int c : costs.costs[j]) {
      if (c < 1) throw ValidationError("cost of X_" + std::to_string(j + 1) + " must be >= 1");
    }
  }
}

// Reward terms shared by the builder and the evaluator.
class SegmentRewards {
 public:
  SegmentRewards(const ChainModel& model, const RewardSpec& spec, const CostModel& costs)
      : evaluator_(model, spec) {
    node_.resize(static_cast<std::size_t>(model.size() + 1));
    for (Index j = 1; j <= model.size(); ++j) {
      for (State x = 0; x < model.states(j); ++x) {
        node_[static_cast<std::size_t>(j)].push_back(evaluator_.node_reward(j, x) - costs.penalty(j, x));
      }
    }
  }

  const ChainTables& tables() const noexcept { return evaluator_.tables(); }
  const RewardEvaluator& evaluator() const noexcept { return evaluator_; }

  /// R_j(X_j | X_j = x) - C_j(x).
  double node(Index j, State x) const { return node_[static_cast<std::size_t>(j)][static_cast<std::size_t>(x)]; }

  /// sum_{a<i<b} R_i(X_i | x_a, x_b); b = n+1 means no right separator.
  double stop(Index a, State xa, Index b, State xb, std::uint64_t& evals) const {
    return partial(a, xa, b, b, xb, evals);
  }

  /// sum_{a<i<end} R_i(X_i | x_a, x_b).
  double partial(Index a, State xa, Index end, Index b, State xb, std::uint64_t& evals) const {
    double sum = 0.0;
    for (Index i = a + 1; i < end; ++i) {
      sum += evaluator_.conditional_reward(i, a, xa, b, xb);
      ++evals;
    }
    return sum;
  }

 private:
  RewardEvaluator evaluator_;
  std::vector<std::vector<double>> node_;
};

}  // namespace

PlanTables::PlanTables(ChainModel model, RewardSpec spec, CostModel costs, Mode mode)
    : model_(std::move(model)), spec_(std::move(spec)), costs_(std::move(costs)), mode_(mode) {
  n_ = model_.size();
  width_ = model_.max_states();
  const auto w = static_cast<std::size_t>(width_);
  const auto kk = static_cast<std::size_t>(costs_.budget + 1);
  const auto ends = static_cast<std::size_t>(n_ + 2);
  std::size_t cells = 0;
  std::size_t split_cells = 0;
  if (mode_ == Mode::Smoothing) {
    cells = ends * ends * w * w * kk;
    split_cells = cells * w;
  } else {
    cells = ends * w * kk;
  }
  if (split_cells > kMaxPlanCells || cells > kMaxPlanCells) {
    throw CapacityExceeded("plan tables would need " + std::to_string(std::max(cells, split_cells)) + " cells");
  }
  values_.assign(cells, 0.0);
  choices_.assign(cells, kStop);
  splits_.assign(split_cells, 0);
}

std::size_t PlanTables::slot(Index a, Index b, State xa, State xb, int k) const {
  const auto w = static_cast<std::size_t>(width_);
  const auto kk = static_cast<std::size_t>(costs_.budget + 1);
  if (mode_ == Mode::Filtering) {
    return (static_cast<std::size_t>(a) * w + static_cast<std::size_t>(xa)) * kk + static_cast<std::size_t>(k);
  }
  const auto ends = static_cast<std::size_t>(n_ + 2);
  const std::size_t seg = static_cast<std::size_t>(a) * ends + static_cast<std::size_t>(b);
  return ((seg * w + static_cast<std::size_t>(xa)) * w + static_cast<std::size_t>(xb)) * kk + static_cast<std::size_t>(k);
}

int PlanTables::split(Index a, Index b, State xa, State xb, State xj, int k) const {
  if (mode_ == Mode::Filtering) return 0;
  const auto w = static_cast<std::size_t>(width_);
  const auto kk = static_cast<std::size_t>(costs_.budget + 1);
  const std::size_t base = slot(a, b, xa, xb, 0) / kk;
  return splits_[(base * w + static_cast<std::size_t>(xj)) * kk + static_cast<std::size_t>(k)];
}

PlanTables build_plan(const ChainModel& model, const RewardSpec& spec, const CostModel& costs, Mode mode) {
  require_valid(model);
  require_valid(costs, model);
  require_positive_costs(costs);
  PlanTables t(model, spec, costs, mode);
  SegmentRewards rewards(t.model_, t.spec_, t.costs_);
  const ChainTables& ct = rewards.tables();
  const int n = model.size();
  const int budget = costs.budget;
  const auto w = static_cast<std::size_t>(t.width_);
  const auto kk = static_cast<std::size_t>(budget + 1);
  std::uint64_t evals = 0;
  std::vector<double> cond(w);

  if (mode == Mode::Filtering) {
    // prefix[a][xa][j - a] = sum_{a<i<j} R_i(X_i | x_a)
    std::vector<std::vector<std::vector<double>>> prefix(static_cast<std::size_t>(n + 1));
    for (Index a = 0; a <= n; ++a) {
      auto& pa = prefix[static_cast<std::size_t>(a)];
      pa.resize(static_cast<std::size_t>(model.states(a)));
      for (State xa = 0; xa < model.states(a); ++xa) {
        auto& row = pa[static_cast<std::size_t>(xa)];
        row.assign(static_cast<std::size_t>(n + 2 - a), 0.0);
        if (ct.joint(a, xa, n + 1, 0) <= 0.0) continue;
        for (Index j = a + 1; j <= n + 1; ++j) {
          double prev = row[static_cast<std::size_t>(j - 1 - a)];
          if (j - 1 > a) {
            prev += rewards.evaluator().conditional_reward(j - 1, a, xa, n + 1, 0);
            ++evals;
          }
          row[static_cast<std::size_t>(j - a)] = prev;
        }
      }
    }
    for (int k = 0; k <= budget; ++k) {
      for (Index a = n; a >= 0; --a) {
        for (State xa = 0; xa < model.states(a); ++xa) {
          if (ct.joint(a, xa, n + 1, 0) <= 0.0) continue;
          const auto& row = prefix[static_cast<std::size_t>(a)][static_cast<std::size_t>(xa)];
          double best = row[static_cast<std::size_t>(n + 1 - a)];
          Index choice = kStop;
          for (Index j = a + 1; j <= n && k > 0; ++j) {
            const int dj = model.states(j);
            ct.conditional(j, a, xa, n + 1, 0, cond);
            bool feasible = true;
            double total = row[static_cast<std::size_t>(j - a)];
            for (State xj = 0; xj < dj && feasible; ++xj) {
              const double p = cond[static_cast<std::size_t>(xj)];
              if (p <= 0.0) continue;
              const int rem = k - costs.cost(j, xj);
              if (rem < 0) {
                feasible = false;
                break;
              }
              total += p * (rewards.node(j, xj) + t.values_[t.slot(j, n + 1, xj, 0, rem)]);
              ++evals;
            }
            if (feasible && total > best) {
              best = total;
              choice = j;
            }
          }
          const std::size_t s = t.slot(a, n + 1, xa, 0, k);
          t.values_[s] = best;
          t.choices_[s] = choice;
        }
      }
    }
    t.eval_count_ = evals;
    return t;
  }

  // Smoothing. Stop values depend only on the segment and its endpoint states.
  const auto ends = static_cast<std::size_t>(n + 2);
  std::vector<double> stop(ends * ends * w * w, 0.0);
  auto stop_at = [&](Index a, Index b, State xa, State xb) -> double& {
    return stop[((static_cast<std::size_t>(a) * ends + static_cast<std::size_t>(b)) * w + static_cast<std::size_t>(xa)) * w +
                static_cast<std::size_t>(xb)];
  };
  for (Index a = 0; a <= n; ++a) {
    for (Index b = a + 1; b <= n + 1; ++b) {
      for (State xa = 0; xa < model.states(a); ++xa) {
        for (State xb = 0; xb < model.states(b); ++xb) {
          if (ct.joint(a, xa, b, xb) <= 0.0) continue;
          stop_at(a, b, xa, xb) = rewards.stop(a, xa, b, xb, evals);
        }
      }
    }
  }

  std::vector<int> best_split(w, 0);
  std::vector<int> trial_split(w, 0);
  for (int k = 0; k <= budget; ++k) {
    for (Index a = 0; a <= n; ++a) {
      for (Index b = a + 1; b <= n + 1; ++b) {
        for (State xa = 0; xa < model.states(a); ++xa) {
          for (State xb = 0; xb < model.states(b); ++xb) {
            if (ct.joint(a, xa, b, xb) <= 0.0) continue;
            double best = stop_at(a, b, xa, xb);
            Index choice = kStop;
            for (Index j = a + 1; j < b && k > 0; ++j) {
              const int dj = model.states(j);
              ct.conditional(j, a, xa, b, xb, cond);
              bool feasible = true;
              double total = 0.0;
              for (State xj = 0; xj < dj; ++xj) {
                trial_split[static_cast<std::size_t>(xj)] = 0;
                const double p = cond[static_cast<std::size_t>(xj)];
                if (p <= 0.0) continue;
                const int rem = k - costs.cost(j, xj);
                if (rem < 0) {
                  feasible = false;
                  break;
                }
                const std::size_t left = t.slot(a, j, xa, xj, 0);
                const std::size_t right = t.slot(j, b, xj, xb, 0);
                double inner = t.values_[left] + t.values_[right + static_cast<std::size_t>(rem)];
                int inner_l = 0;
                for (int l = 1; l <= rem; ++l) {
                  const double v = t.values_[left + static_cast<std::size_t>(l)] +
                                   t.values_[right + static_cast<std::size_t>(rem - l)];
                  if (v > inner) {
                    inner = v;
                    inner_l = l;
                  }
                }
                evals += static_cast<std::uint64_t>(rem + 1);
                trial_split[static_cast<std::size_t>(xj)] = inner_l;
                total += p * (rewards.node(j, xj) + inner);
              }
              if (feasible && total > best) {
                best = total;
                choice = j;
                std::copy(trial_split.begin(), trial_split.begin() + dj, best_split.begin());
              }
            }
            const std::size_t s = t.slot(a, b, xa, xb, k);
            t.values_[s] = best;
            t.choices_[s] = choice;
            if (choice != kStop) {
              const std::size_t base = s / kk;
              for (State xj = 0; xj < model.states(choice); ++xj) {
                t.splits_[(base * w + static_cast<std::size_t>(xj)) * kk + static_cast<std::size_t>(k)] =
                    best_split[static_cast<std::size_t>(xj)];
              }
            }
          }
        }
      }
    }
  }
  t.eval_count_ = evals;
  return t;
}

double plan_value(const PlanTables& tables, const ChainModel& model) {
  const ChainModel& built = tables.model();
  bool same_shape = model.size() == built.size();
  for (Index j = 1; same_shape && j <= model.size(); ++j) same_shape = model.states(j) == built.states(j);
  if (!same_shape) throw ValidationError("plan tables were built for a model with different dimensions");

  const CostModel& costs = tables.costs();
  SegmentRewards rewards(model, tables.spec(), costs);
  const ChainTables& ct = rewards.tables();
  const int n = model.size();
  const Mode mode = tables.mode();
  std::uint64_t evals = 0;
  std::map<std::tuple<Index, Index, State, State, int>, double> memo;

  auto walk = [&](auto&& self, Index a, Index b, State xa, State xb, int k) -> double {
    const auto key = std::make_tuple(a, b, xa, xb, k);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const Index j = tables.choice(a, b, xa, xb, k);
    double v = 0.0;
    if (j == kStop) {
      v = rewards.stop(a, xa, b, xb, evals);
    } else {
      if (j <= a || j >= b) throw ValidationError("plan choice out of range");
      std::vector<double> cond(static_cast<std::size_t>(model.states(j)));
      ct.conditional(j, a, xa, b, xb, cond);
      if (mode == Mode::Filtering) v = rewards.partial(a, xa, j, n + 1, 0, evals);
      for (State xj = 0; xj < model.states(j); ++xj) {
        const double p = cond[static_cast<std::size_t>(xj)];
        if (p <= 0.0) continue;
        const int rem = k - costs.cost(j, xj);
        if (rem < 0) throw ValidationError("plan exceeds its budget");
        double branch = rewards.node(j, xj);
        if (mode == Mode::Filtering) {
          branch += self(self, j, n + 1, xj, 0, rem);
        } else {
          const int l = tables.split(a, b, xa, xb, xj, k);
          if (l < 0 || l > rem) throw ValidationError("plan split out of range");
          branch += self(self, a, j, xa, xj, l) + self(self, j, b, xj, xb, rem - l);
        }
        v += p * branch;
      }
    }
    memo.emplace(key, v);
    return v;
  };
  return walk(walk, 0, n + 1, 0, 0, tables.budget());
}

PlanCursor::PlanCursor(const PlanTables& tables) : tables_(&tables) {
  stack_.push_back({0, tables.size() + 1, 0, 0, tables.budget()});
  advance();
}

void PlanCursor::advance() {
  pending_.reset();
  active_.reset();
  while (!stack_.empty()) {
    const Segment seg = stack_.back();
    stack_.pop_back();
    const Index j = tables_->choice(seg.a, seg.b, seg.xa, seg.xb, seg.k);
    if (j != kStop) {
      active_ = seg;
      pending_ = j;
      return;
    }
  }
}

namespace {

// Weight of X_to = x_to given X_from = x_from (from = 0 means unconditioned).
double reach(const ChainModel& model, Index from, State x_from, Index to, State x_to) {
  std::vector<double> v;
  if (from == 0) {
    v = model.prior;
    from = 1;
  } else {
    v.assign(static_cast<std::size_t>(model.states(from)), 0.0);
    v[static_cast<std::size_t>(x_from)] = 1.0;
  }
  for (Index t = from; t < to; ++t) {
    const Matrix& tr = model.transition(t);
    std::vector<double> next(tr.cols(), 0.0);
    for (std::size_t x = 0; x < tr.rows(); ++x) {
      if (v[x] == 0.0) continue;
      for (std::size_t y = 0; y < tr.cols(); ++y) next[y] += v[x] * tr(x, y);
    }
    v = std::move(next);
  }
  return v[static_cast<std::size_t>(x_to)];
}

}  // namespace

void PlanCursor::answer(Index j, State state) {
  if (!pending_) throw ValidationError("plan has finished; no query is pending");
  if (j != *pending_) {
    throw ValidationError("answer for X_" + std::to_string(j) + " but the plan asked for X_" +
                          std::to_string(*pending_));
  }
  const ChainModel& model = tables_->model();
  if (state < 0 || state >= model.states(j)) {
    throw ValidationError("state " + std::to_string(state) + " out of range for X_" + std::to_string(j));
  }
  const Segment seg = *active_;
  const int n = tables_->size();
  double p = reach(model, seg.a, seg.xa, j, state);
  if (p > 0.0 && seg.b <= n) p *= reach(model, j, state, seg.b, seg.xb);
  if (p <= 0.0) {
    throw ZeroProbabilityEvidence("X_" + std::to_string(j) + "=" + std::to_string(state) +
                                  " is impossible given the observations so far");
  }
  const int cost = tables_->costs().cost(j, state);
  const int rem = seg.k - cost;
  if (rem < 0) throw ValidationError("plan exceeds its budget");
  queried_.push_back({j, state});
  spent_ += cost;
  if (tables_->mode() == Mode::Filtering) {
    stack_.push_back({j, n + 1, state, 0, rem});
  } else {
    const int l = tables_->split(seg.a, seg.b, seg.xa, seg.xb, state, seg.k);
    stack_.push_back({j, seg.b, state, seg.xb, rem - l});
    stack_.push_back({seg.a, j, seg.xa, state, l});
  }
  advance();
}

Evidence PlanCursor::evidence() const {
  std::vector<Observation> obs = queried_;
  std::sort(obs.begin(), obs.end(), [](const Observation& x, const Observation& y) { return x.index < y.index; });
  return Evidence(std::move(obs), tables_->mode());
}

RecordedSource::RecordedSource(const std::vector<State>& full_assignment) {
  for (std::size_t i = 0; i < full_assignment.size(); ++i) {
    answers_[static_cast<Index>(i + 1)] = full_assignment[i];
  }
}

State RecordedSource::observe(Index j) {
  auto it = answers_.find(j);
  if (it == answers_.end()) throw ValidationError("recorded observations have no value for X_" + std::to_string(j));
  return it->second;
}

SamplerSource::SamplerSource(const ChainModel& model, std::mt19937_64& rng) : assignment_(sample(model, rng)) {}

State SamplerSource::observe(Index j) {
  if (j < 1 || j > static_cast<Index>(assignment_.size())) {
    throw ValidationError("index " + std::to_string(j) + " out of range");
  }
  return assignment_[static_cast<std::size_t>(j - 1)];
}

State InteractiveSource::observe(Index j) {
  const int d = model_->states(j);
  while (true) {
    *out_ << "X_" << j << " [0-" << d - 1 << "]? " << std::flush;
    std::string line;
    if (!std::getline(*in_, line)) throw IoError("input closed before X_" + std::to_string(j) + " was answered");
    try {
      std::size_t used = 0;
      const int v = std::stoi(line, &used);
      if (v >= 0 && v < d) return v;
    } catch (const std::exception&) {
    }
    *out_ << "expected an integer in 0.." << d - 1 << "\n";
  }
}

double realized_reward(const PlanTables& tables, const std::vector<Observation>& queried) {
  std::vector<Observation> obs = queried;
  std::sort(obs.begin(), obs.end(), [](const Observation& x, const Observation& y) { return x.index < y.index; });
  RewardEvaluator evaluator(tables.model(), tables.spec());
  return realized_objective(evaluator, tables.costs(), Evidence(std::move(obs), tables.mode()));
}

EpisodeRecord execute_plan(const PlanTables& tables, ObservationSource& source) {
  PlanCursor cursor(tables);
  std::set<Index> seen;
  while (auto j = cursor.next_query()) {
    if (!seen.insert(*j).second) throw ValidationError("X_" + std::to_string(*j) + " queried twice");
    cursor.answer(*j, source.observe(*j));
  }
  EpisodeRecord record;
  record.queried = cursor.queried();
  record.spent = cursor.spent();
  record.realized_reward = realized_reward(tables, record.queried);
  return record;
}

}  // namespace voidp
