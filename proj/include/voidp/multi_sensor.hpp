#pragma once

// Multi-chain sensor scheduling under the most-recent-observation
// approximation, solved by coordinate ascent over per-sensor subset recursions.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "voidp/chain_model.hpp"
#include "voidp/cost_model.hpp"
#include "voidp/oracles.hpp"
#include "voidp/rewards.hpp"
#include "voidp/subset_dp.hpp"

namespace voidp {

/// Upper bound on the number of joint cross-sensor states at one time step.
inline constexpr int kMaxProductStates = 4096;

/// Sensors s = 1..l observed over times t = 1..T. The coupling is a Markov
/// chain over the per-time product state (sensor 1 is the most significant
/// digit); without it the sensors are independent.
struct MultiChainModel {
  std::vector<ChainModel> sensors;
  /// rewards[s-1] has one local reward per time step of sensor s.
  std::vector<RewardSpec> rewards;
  std::optional<ChainModel> coupling;

  int sensor_count() const noexcept { return static_cast<int>(sensors.size()); }
  int steps() const { return sensors.empty() ? 0 : sensors.front().size(); }

  friend bool operator==(const MultiChainModel&, const MultiChainModel&) = default;
};

ValidationReport validate_multi(const MultiChainModel& model);
void require_valid(const MultiChainModel& model);

/// The coupling chain, or the product of the independent sensor chains.
ChainModel joint_chain(const MultiChainModel& model);

/// Product of independent sensor chains (Kronecker products of priors and transitions).
ChainModel product_chain(const std::vector<ChainModel>& sensors);

/// (sensor, time) pair; both 1-based.
struct SensorTime {
  int sensor = 0;
  int time = 0;
  friend auto operator<=>(const SensorTime&, const SensorTime&) = default;
};

/// Keeps, for each sensor with an observation at time <= t, only its latest.
/// Result is ordered by time, then sensor.
std::vector<SensorTime> recent_observation_filter(const std::vector<SensorTime>& observations, int t);

struct CrossOptions {
  /// 0 selects exact enumeration; otherwise Monte-Carlo samples per expectation.
  int samples = 0;
  std::optional<std::uint64_t> seed;
};

/// Per-sensor selected times.
using Schedules = std::vector<std::vector<Index>>;

/// E[R_{s,j}(X_{s,j} | X_{s,a} and the latest observation at or before j of
/// every other sensor)], with a = 0 meaning no own observation.
double cross_chain_expected_reward(const MultiChainModel& model, int sensor, Index j, Index a,
                                   const Schedules& schedules, const CrossOptions& options = {});

/// Sum over all (s, t) of E[R_{s,t} | recent observations at or before t] minus
/// expected penalties: the approximate objective the scheduler maximizes.
double recent_observation_objective(const MultiChainModel& model, const std::vector<CostModel>& costs,
                                    const Schedules& schedules, const CrossOptions& options = {});

/// Explicit joint over all X_{s,t}; variable (t-1)*l + s, time tag t.
ExplicitJoint joint_from_multi(const MultiChainModel& model);
/// Reward spec and cost model aligned with `joint_from_multi`.
RewardSpec flatten_rewards(const MultiChainModel& model);
CostModel flatten_costs(const MultiChainModel& model, const std::vector<CostModel>& costs);
std::vector<Index> flatten_schedule(const MultiChainModel& model, const Schedules& schedules);

enum class ScheduleInit { Independent, Random };

struct ScheduleOptions {
  int max_iters = 20;
  double delta_tol = 1e-6;
  ScheduleInit init = ScheduleInit::Independent;
  /// Seed for random initialization.
  std::uint64_t init_seed = 0;
  CrossOptions cross;
};

struct MultiSchedule {
  Schedules selected;
  double objective = 0.0;
  /// Objective before the first sweep followed by the objective after each sweep.
  std::vector<double> trace;
  /// Improvement of each sweep.
  std::vector<double> deltas;
  int iterations = 0;
  bool converged = false;
};

/// Coordinate ascent: each sweep re-solves every sensor's subset recursion in
/// filtering mode with the other schedules held fixed. costs[s-1] holds the
/// state-independent costs and budget of sensor s.
MultiSchedule schedule_multi(const MultiChainModel& model, const std::vector<CostModel>& costs,
                             const ScheduleOptions& options = {});

}  // namespace voidp
