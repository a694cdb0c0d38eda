#include "voidp/multi_sensor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>

#include "voidp/error.hpp"

namespace voidp {

namespace {

// Mixed-radix layout of the product state at each time (sensor 1 most significant).
struct Layout {
  std::vector<std::vector<int>> dims;     // [t-1][s-1]
  std::vector<std::vector<int>> strides;  // [t-1][s-1]
  std::vector<int> sizes;                 // [t-1]

  explicit Layout(const std::vector<ChainModel>& sensors) {
    const int steps = sensors.front().size();
    const int l = static_cast<int>(sensors.size());
    for (Index t = 1; t <= steps; ++t) {
      std::vector<int> d(static_cast<std::size_t>(l));
      std::vector<int> st(static_cast<std::size_t>(l));
      long long size = 1;
      for (int s = l - 1; s >= 0; --s) {
        d[static_cast<std::size_t>(s)] = sensors[static_cast<std::size_t>(s)].states(t);
        st[static_cast<std::size_t>(s)] = static_cast<int>(size);
        size *= d[static_cast<std::size_t>(s)];
        if (size > kMaxProductStates) {
          throw CapacityExceeded("joint sensor state at time " + std::to_string(t) + " exceeds " +
                                 std::to_string(kMaxProductStates) + " states");
        }
      }
      dims.push_back(std::move(d));
      strides.push_back(std::move(st));
      sizes.push_back(static_cast<int>(size));
    }
  }

  State digit(Index t, int sensor, int z) const {
    const auto ti = static_cast<std::size_t>(t - 1);
    const auto si = static_cast<std::size_t>(sensor - 1);
    return (z / strides[ti][si]) % dims[ti][si];
  }
};

bool marginal_functional(const LocalReward& r) {
  return !std::holds_alternative<Margin>(r) && !std::holds_alternative<JointEntropy>(r);
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      for (std::size_t k = 0; k < b.rows(); ++k) {
        for (std::size_t m = 0; m < b.cols(); ++m) out(i * b.rows() + k, j * b.cols() + m) = a(i, j) * b(k, m);
      }
    }
  }
  return out;
}

std::vector<double> propagate(const std::vector<double>& alpha, const Matrix& t) {
  std::vector<double> next(t.cols(), 0.0);
  for (std::size_t x = 0; x < t.rows(); ++x) {
    if (alpha[x] == 0.0) continue;
    for (std::size_t y = 0; y < t.cols(); ++y) next[y] += alpha[x] * t(x, y);
  }
  return next;
}

// Evaluates E[R_{s,t} | X_cond] for every sensor s at once on the joint chain.
class CrossEvaluator {
 public:
  CrossEvaluator(const MultiChainModel& model, CrossOptions options)
      : model_(&model), chain_(joint_chain(model)), layout_(model.sensors), options_(options) {
    if (options_.samples < 0) throw ValidationError("sample count must be >= 0");
    if (options_.samples > 0 && !options_.seed) throw ValidationError("sampled inference requires a seed");
  }

  int sensors() const { return model_->sensor_count(); }

  // cond: observed (sensor, time) pairs with time <= t, sorted by (time, sensor).
  const std::vector<double>& rewards_at(Index t, const std::vector<SensorTime>& cond) {
    auto key = std::make_pair(t, cond);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    std::vector<double> out = options_.samples > 0 && !cond.empty() ? sampled(t, cond) : exact(t, cond);
    return cache_.emplace(std::move(key), std::move(out)).first->second;
  }

 private:
  // Per-sensor rewards of the normalized posterior held in `alpha` at time t.
  void accumulate(Index t, const std::vector<double>& alpha, double weight, std::vector<double>& out) const {
    const int l = sensors();
    for (int s = 1; s <= l; ++s) {
      std::vector<double> m(static_cast<std::size_t>(model_->sensors[static_cast<std::size_t>(s - 1)].states(t)), 0.0);
      for (std::size_t z = 0; z < alpha.size(); ++z) {
        m[static_cast<std::size_t>(layout_.digit(t, s, static_cast<int>(z)))] += alpha[z];
      }
      const double mass = std::accumulate(m.begin(), m.end(), 0.0);
      for (double& v : m) v /= mass;
      const auto& sensor = model_->sensors[static_cast<std::size_t>(s - 1)];
      out[static_cast<std::size_t>(s - 1)] +=
          weight * local_reward(model_->rewards[static_cast<std::size_t>(s - 1)].at(t), Dist{std::move(m)}, sensor.values(t));
    }
  }

  void mask(Index t, std::vector<double>& alpha, int sensor, State x) const {
    for (std::size_t z = 0; z < alpha.size(); ++z) {
      if (layout_.digit(t, sensor, static_cast<int>(z)) != x) alpha[z] = 0.0;
    }
  }

  std::vector<double> exact(Index t, const std::vector<SensorTime>& cond) const {
    std::vector<std::vector<double>> branches{chain_.prior};
    std::size_t next = 0;
    for (Index tau = 1; tau <= t; ++tau) {
      if (tau > 1) {
        for (auto& b : branches) b = propagate(b, chain_.transition(tau - 1));
      }
      for (; next < cond.size() && cond[next].time == tau; ++next) {
        std::vector<std::vector<double>> split;
        const int d = layout_.dims[static_cast<std::size_t>(tau - 1)][static_cast<std::size_t>(cond[next].sensor - 1)];
        for (const auto& b : branches) {
          for (State x = 0; x < d; ++x) {
            std::vector<double> part = b;
            mask(tau, part, cond[next].sensor, x);
            if (std::accumulate(part.begin(), part.end(), 0.0) > 0.0) split.push_back(std::move(part));
          }
        }
        branches = std::move(split);
      }
    }
    std::vector<double> out(static_cast<std::size_t>(sensors()), 0.0);
    for (const auto& b : branches) {
      const double mass = std::accumulate(b.begin(), b.end(), 0.0);
      accumulate(t, b, mass, out);
    }
    return out;
  }

  std::vector<double> sampled(Index t, const std::vector<SensorTime>& cond) const {
    std::vector<std::uint32_t> words{static_cast<std::uint32_t>(*options_.seed),
                                     static_cast<std::uint32_t>(*options_.seed >> 32),
                                     static_cast<std::uint32_t>(t)};
    for (const auto& c : cond) {
      words.push_back(static_cast<std::uint32_t>(c.sensor));
      words.push_back(static_cast<std::uint32_t>(c.time));
    }
    std::seed_seq seq(words.begin(), words.end());
    std::mt19937_64 rng(seq);
    const Index horizon = cond.back().time;
    std::map<std::vector<State>, std::vector<double>> posterior_rewards;
    std::vector<double> out(static_cast<std::size_t>(sensors()), 0.0);
    for (int i = 0; i < options_.samples; ++i) {
      // Ancestral draw of the product chain up to the last conditioning time.
      std::vector<int> z(static_cast<std::size_t>(horizon));
      z[0] = draw(chain_.prior, rng);
      for (Index tau = 2; tau <= horizon; ++tau) {
        z[static_cast<std::size_t>(tau - 1)] = draw(chain_.transition(tau - 1).row(static_cast<std::size_t>(z[static_cast<std::size_t>(tau - 2)])), rng);
      }
      std::vector<State> outcome;
      for (const auto& c : cond) outcome.push_back(layout_.digit(c.time, c.sensor, z[static_cast<std::size_t>(c.time - 1)]));
      auto it = posterior_rewards.find(outcome);
      if (it == posterior_rewards.end()) {
        std::vector<double> alpha = chain_.prior;
        std::size_t next = 0;
        for (Index tau = 1; tau <= t; ++tau) {
          if (tau > 1) alpha = propagate(alpha, chain_.transition(tau - 1));
          for (; next < cond.size() && cond[next].time == tau; ++next) mask(tau, alpha, cond[next].sensor, outcome[next]);
        }
        std::vector<double> r(static_cast<std::size_t>(sensors()), 0.0);
        accumulate(t, alpha, 1.0, r);
        it = posterior_rewards.emplace(outcome, std::move(r)).first;
      }
      for (std::size_t s = 0; s < out.size(); ++s) out[s] += it->second[s];
    }
    for (double& v : out) v /= options_.samples;
    return out;
  }

  const MultiChainModel* model_;
  ChainModel chain_;
  Layout layout_;
  CrossOptions options_;
  std::map<std::pair<Index, std::vector<SensorTime>>, std::vector<double>> cache_;
};

// Latest scheduled time <= t of every sensor other than `skip`, plus (skip, own) if own > 0.
std::vector<SensorTime> conditioning(const Schedules& schedules, int skip, Index own, Index t) {
  std::vector<SensorTime> cond;
  for (int s = 1; s <= static_cast<int>(schedules.size()); ++s) {
    if (s == skip) {
      if (own > 0) cond.push_back({s, own});
      continue;
    }
    Index latest = 0;
    for (Index time : schedules[static_cast<std::size_t>(s - 1)]) {
      if (time <= t) latest = std::max(latest, time);
    }
    if (latest > 0) cond.push_back({s, latest});
  }
  std::sort(cond.begin(), cond.end(), [](const SensorTime& x, const SensorTime& y) {
    return x.time != y.time ? x.time < y.time : x.sensor < y.sensor;
  });
  return cond;
}

double total_rewards(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

double penalties(const std::vector<CostModel>& costs, const Schedules& schedules) {
  double total = 0.0;
  for (std::size_t s = 0; s < schedules.size(); ++s) {
    for (Index t : schedules[s]) total += costs[s].penalty(t);
  }
  return total;
}

double objective_with(CrossEvaluator& eval, const MultiChainModel& model, const std::vector<CostModel>& costs,
                      const Schedules& schedules) {
  double total = 0.0;
  for (Index t = 1; t <= model.steps(); ++t) total += total_rewards(eval.rewards_at(t, conditioning(schedules, 0, 0, t)));
  return total - penalties(costs, schedules);
}

// Global objective as a function of one sensor's schedule, in subset-recursion form.
class SensorObjective : public SubsetObjective {
 public:
  SensorObjective(CrossEvaluator& eval, const MultiChainModel& model, const CostModel& costs,
                  const Schedules& schedules, int sensor)
      : eval_(&eval), model_(&model), costs_(&costs), schedules_(&schedules), sensor_(sensor) {}

  int size() const override { return model_->steps(); }
  double segment_reward(Index j, Index a, Index) const override {
    return total_rewards(eval_->rewards_at(j, conditioning(*schedules_, sensor_, a, j)));
  }
  double node_value(Index j) const override {
    return total_rewards(eval_->rewards_at(j, conditioning(*schedules_, sensor_, j, j))) - costs_->penalty(j);
  }

 private:
  CrossEvaluator* eval_;
  const MultiChainModel* model_;
  const CostModel* costs_;
  const Schedules* schedules_;
  int sensor_;
};

void check_schedules(const MultiChainModel& model, const Schedules& schedules) {
  if (static_cast<int>(schedules.size()) != model.sensor_count()) {
    throw ValidationError("expected one schedule per sensor");
  }
  for (const auto& sched : schedules) {
    for (Index t : sched) {
      if (t < 1 || t > model.steps()) throw ValidationError("scheduled time " + std::to_string(t) + " out of range");
    }
  }
}

void check_costs(const MultiChainModel& model, const std::vector<CostModel>& costs) {
  if (static_cast<int>(costs.size()) != model.sensor_count()) throw ValidationError("expected one cost model per sensor");
  for (std::size_t s = 0; s < costs.size(); ++s) {
    require_valid(costs[s], model.sensors[s]);
    if (costs[s].state_dependent()) throw ValidationError("sensor scheduling requires state-independent costs");
  }
}

}  // namespace

ValidationReport validate_multi(const MultiChainModel& model) {
  ValidationReport report;
  auto fail = [&](std::string msg) { report.violations.push_back(std::move(msg)); };
  if (model.sensors.empty()) {
    fail("no sensors");
    return report;
  }
  const int steps = model.steps();
  for (std::size_t s = 0; s < model.sensors.size(); ++s) {
    for (const auto& v : validate_model(model.sensors[s]).violations) fail("sensor " + std::to_string(s + 1) + ": " + v);
    if (model.sensors[s].size() != steps) fail("sensor " + std::to_string(s + 1) + " has a different number of steps");
  }
  if (!report.ok()) return report;
  if (model.rewards.size() != model.sensors.size()) {
    fail("expected one reward spec per sensor");
  } else {
    for (std::size_t s = 0; s < model.sensors.size(); ++s) {
      for (const auto& v : validate_reward_spec(model.rewards[s], model.sensors[s]).violations) {
        fail("sensor " + std::to_string(s + 1) + ": " + v);
      }
      for (const auto& r : model.rewards[s].rewards) {
        if (!marginal_functional(r)) {
          fail("sensor " + std::to_string(s + 1) + ": reward " + reward_name(r) +
               " is not supported for multi-sensor scheduling");
          break;
        }
      }
    }
  }
  std::optional<Layout> layout;
  try {
    layout.emplace(model.sensors);
  } catch (const CapacityExceeded& e) {
    fail(e.what());
    return report;
  }
  if (!model.coupling) return report;

  const ChainModel& c = *model.coupling;
  for (const auto& v : validate_model(c).violations) fail("coupling: " + v);
  if (!report.ok()) return report;
  if (c.size() != steps) {
    fail("coupling has " + std::to_string(c.size()) + " steps, sensors have " + std::to_string(steps));
    return report;
  }
  for (Index t = 1; t <= steps; ++t) {
    if (c.states(t) != layout->sizes[static_cast<std::size_t>(t - 1)]) {
      fail("coupling state count at time " + std::to_string(t) + " does not match the sensor product");
      return report;
    }
  }
  // Coupling marginals and implied per-sensor transitions must match the sensor chains.
  const ChainTables joint(c);
  const int l = model.sensor_count();
  for (int s = 1; s <= l; ++s) {
    const ChainTables own(model.sensors[static_cast<std::size_t>(s - 1)]);
    for (Index t = 1; t <= steps; ++t) {
      const int d = model.sensors[static_cast<std::size_t>(s - 1)].states(t);
      std::vector<double> m(static_cast<std::size_t>(d), 0.0);
      const auto& jm = joint.marginal(t);
      for (std::size_t z = 0; z < jm.size(); ++z) m[static_cast<std::size_t>(layout->digit(t, s, static_cast<int>(z)))] += jm[z];
      for (State x = 0; x < d; ++x) {
        if (std::abs(m[static_cast<std::size_t>(x)] - own.marginal(t)[static_cast<std::size_t>(x)]) > 1e-6) {
          fail("coupling marginal of sensor " + std::to_string(s) + " at time " + std::to_string(t) +
               " disagrees with its chain");
          break;
        }
      }
      if (t == steps) continue;
      const int dn = model.sensors[static_cast<std::size_t>(s - 1)].states(t + 1);
      Matrix pair(static_cast<std::size_t>(d), static_cast<std::size_t>(dn));
      const Matrix& tr = c.transition(t);
      for (std::size_t z = 0; z < tr.rows(); ++z) {
        for (std::size_t w = 0; w < tr.cols(); ++w) {
          pair(static_cast<std::size_t>(layout->digit(t, s, static_cast<int>(z))),
               static_cast<std::size_t>(layout->digit(t + 1, s, static_cast<int>(w)))) += jm[z] * tr(z, w);
        }
      }
      const Matrix& st = model.sensors[static_cast<std::size_t>(s - 1)].transition(t);
      bool ok = true;
      for (State x = 0; x < d && ok; ++x) {
        const double mx = m[static_cast<std::size_t>(x)];
        if (mx <= 1e-12) continue;
        for (State y = 0; y < dn; ++y) {
          if (std::abs(pair(x, y) / mx - st(x, y)) > 1e-6) {
            ok = false;
            break;
          }
        }
      }
      if (!ok) {
        fail("coupling transition of sensor " + std::to_string(s) + " at step " + std::to_string(t) +
             " disagrees with its chain");
      }
    }
  }
  return report;
}

void require_valid(const MultiChainModel& model) {
  const auto report = validate_multi(model);
  if (!report.ok()) {
    std::string msg = "invalid multi-chain model:";
    for (const auto& v : report.violations) msg += "\n  " + v;
    throw ValidationError(msg);
  }
}

ChainModel product_chain(const std::vector<ChainModel>& sensors) {
  if (sensors.empty()) throw ValidationError("no sensors");
  Layout layout(sensors);
  ChainModel out;
  Matrix prior = Matrix(1, sensors[0].prior.size());
  for (std::size_t x = 0; x < sensors[0].prior.size(); ++x) prior(0, x) = sensors[0].prior[x];
  for (std::size_t s = 1; s < sensors.size(); ++s) {
    Matrix p(1, sensors[s].prior.size());
    for (std::size_t x = 0; x < sensors[s].prior.size(); ++x) p(0, x) = sensors[s].prior[x];
    prior = kron(prior, p);
  }
  out.prior = prior.data();
  for (Index t = 1; t < sensors[0].size(); ++t) {
    Matrix tr = sensors[0].transition(t);
    for (std::size_t s = 1; s < sensors.size(); ++s) tr = kron(tr, sensors[s].transition(t));
    out.transitions.push_back(std::move(tr));
  }
  return out;
}

ChainModel joint_chain(const MultiChainModel& model) {
  return model.coupling ? *model.coupling : product_chain(model.sensors);
}

std::vector<SensorTime> recent_observation_filter(const std::vector<SensorTime>& observations, int t) {
  std::map<int, int> latest;
  for (const auto& o : observations) {
    if (o.time <= t) latest[o.sensor] = std::max(latest[o.sensor], o.time);
  }
  std::vector<SensorTime> out;
  for (const auto& [s, time] : latest) out.push_back({s, time});
  std::sort(out.begin(), out.end(), [](const SensorTime& x, const SensorTime& y) {
    return x.time != y.time ? x.time < y.time : x.sensor < y.sensor;
  });
  return out;
}

double cross_chain_expected_reward(const MultiChainModel& model, int sensor, Index j, Index a,
                                   const Schedules& schedules, const CrossOptions& options) {
  require_valid(model);
  check_schedules(model, schedules);
  if (sensor < 1 || sensor > model.sensor_count()) throw ValidationError("sensor out of range");
  if (j < 1 || j > model.steps()) throw ValidationError("time out of range");
  if (a < 0 || a > j) throw ValidationError("own separator must satisfy 0 <= a <= j");
  CrossEvaluator eval(model, options);
  return eval.rewards_at(j, conditioning(schedules, sensor, a, j))[static_cast<std::size_t>(sensor - 1)];
}

double recent_observation_objective(const MultiChainModel& model, const std::vector<CostModel>& costs,
                                    const Schedules& schedules, const CrossOptions& options) {
  require_valid(model);
  check_schedules(model, schedules);
  check_costs(model, costs);
  CrossEvaluator eval(model, options);
  return objective_with(eval, model, costs, schedules);
}

ExplicitJoint joint_from_multi(const MultiChainModel& model) {
  require_valid(model);
  // The product-state chain enumerates cells in exactly the flattened variable order.
  ExplicitJoint joint = joint_from_chain(joint_chain(model));
  const int l = model.sensor_count();
  joint.domains.clear();
  joint.times.clear();
  joint.state_values.clear();
  const bool values = std::all_of(model.sensors.begin(), model.sensors.end(),
                                  [](const ChainModel& m) { return m.has_state_values(); });
  for (Index t = 1; t <= model.steps(); ++t) {
    for (int s = 1; s <= l; ++s) {
      const auto& sensor = model.sensors[static_cast<std::size_t>(s - 1)];
      joint.domains.push_back(sensor.states(t));
      joint.times.push_back(t);
      if (values) {
        const auto v = sensor.values(t);
        joint.state_values.emplace_back(v.begin(), v.end());
      }
    }
  }
  return joint;
}

RewardSpec flatten_rewards(const MultiChainModel& model) {
  RewardSpec spec;
  for (Index t = 1; t <= model.steps(); ++t) {
    for (int s = 1; s <= model.sensor_count(); ++s) spec.rewards.push_back(model.rewards[static_cast<std::size_t>(s - 1)].at(t));
  }
  return spec;
}

CostModel flatten_costs(const MultiChainModel& model, const std::vector<CostModel>& costs) {
  check_costs(model, costs);
  CostModel out;
  for (Index t = 1; t <= model.steps(); ++t) {
    for (int s = 1; s <= model.sensor_count(); ++s) {
      const auto& c = costs[static_cast<std::size_t>(s - 1)];
      out.penalties.push_back(c.penalties[static_cast<std::size_t>(t - 1)]);
      out.costs.push_back(c.costs[static_cast<std::size_t>(t - 1)]);
    }
  }
  for (const auto& c : costs) out.budget += c.budget;
  return out;
}

std::vector<Index> flatten_schedule(const MultiChainModel& model, const Schedules& schedules) {
  check_schedules(model, schedules);
  std::vector<Index> out;
  const int l = model.sensor_count();
  for (int s = 1; s <= l; ++s) {
    for (Index t : schedules[static_cast<std::size_t>(s - 1)]) out.push_back((t - 1) * l + s);
  }
  std::sort(out.begin(), out.end());
  return out;
}

MultiSchedule schedule_multi(const MultiChainModel& model, const std::vector<CostModel>& costs,
                             const ScheduleOptions& options) {
  require_valid(model);
  check_costs(model, costs);
  if (options.max_iters < 0) throw ValidationError("max_iters must be >= 0");
  const int l = model.sensor_count();
  const int steps = model.steps();
  CrossEvaluator eval(model, options.cross);

  MultiSchedule result;
  result.selected.resize(static_cast<std::size_t>(l));
  if (options.init == ScheduleInit::Independent) {
    for (int s = 0; s < l; ++s) {
      result.selected[static_cast<std::size_t>(s)] =
          select_subset(model.sensors[static_cast<std::size_t>(s)], model.rewards[static_cast<std::size_t>(s)],
                        costs[static_cast<std::size_t>(s)], Mode::Filtering)
              .selected;
    }
  } else {
    std::mt19937_64 rng(options.init_seed);
    for (int s = 0; s < l; ++s) {
      std::vector<Index> order(static_cast<std::size_t>(steps));
      std::iota(order.begin(), order.end(), 1);
      std::shuffle(order.begin(), order.end(), rng);
      int left = costs[static_cast<std::size_t>(s)].budget;
      auto& sel = result.selected[static_cast<std::size_t>(s)];
      for (Index t : order) {
        const int c = costs[static_cast<std::size_t>(s)].cost(t);
        if (c <= left && uniform01(rng) < 0.5) {
          sel.push_back(t);
          left -= c;
        }
      }
      std::sort(sel.begin(), sel.end());
    }
  }

  double current = objective_with(eval, model, costs, result.selected);
  result.trace.push_back(current);
  for (int iter = 0; iter < options.max_iters; ++iter) {
    for (int s = 1; s <= l; ++s) {
      const Schedules snapshot = result.selected;
      SensorObjective objective(eval, model, costs[static_cast<std::size_t>(s - 1)], snapshot, s);
      result.selected[static_cast<std::size_t>(s - 1)] =
          select_subset(objective, costs[static_cast<std::size_t>(s - 1)], Mode::Filtering).selected;
    }
    const double next = objective_with(eval, model, costs, result.selected);
    const double delta = next - current;
    result.trace.push_back(next);
    result.deltas.push_back(delta);
    result.iterations = iter + 1;
    current = next;
    if (delta < options.delta_tol) {
      result.converged = true;
      break;
    }
  }
  result.objective = current;
  return result;
}

}  // namespace voidp
