#pragma once

// JSON interchange formats. Every document carries a "format" header of the
// form "voidp-<kind>/<version>". Doubles are written in shortest round-trip
// form, so load(save(x)) == x bit for bit.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "voidp/chain_model.hpp"
#include "voidp/cost_model.hpp"
#include "voidp/multi_sensor.hpp"
#include "voidp/plan_dp.hpp"
#include "voidp/rewards.hpp"
#include "voidp/subset_dp.hpp"

namespace voidp {

using Json = nlohmann::json;

inline constexpr const char* kModelFormat = "voidp-model/1";
inline constexpr const char* kMultiFormat = "voidp-multi/1";
inline constexpr const char* kRewardFormat = "voidp-reward/1";
inline constexpr const char* kCostsFormat = "voidp-costs/1";
inline constexpr const char* kPlanFormat = "voidp-plan/1";
inline constexpr const char* kSubsetFormat = "voidp-subset/1";
inline constexpr const char* kScheduleFormat = "voidp-schedule/1";
inline constexpr const char* kEpisodeFormat = "voidp-episode/1";
inline constexpr const char* kHmmFormat = "voidp-hmm/1";
inline constexpr const char* kAssignmentFormat = "voidp-assignment/1";

/// The "format" string of a document, e.g. "voidp-model/1". Throws SchemaError if absent.
std::string document_format(const Json& doc);

Json to_json(const ChainModel& model);
Json to_json(const MultiChainModel& model);
Json to_json(const RewardSpec& spec);
Json to_json(const CostModel& costs);
Json to_json(const PlanTables& plan);
Json to_json(const SubsetResult& result);
Json to_json(const MultiSchedule& schedule);
Json to_json(const EpisodeRecord& episode);
Json to_json(const HmmModel& hmm);

ChainModel model_from_json(const Json& doc);
MultiChainModel multi_from_json(const Json& doc);
/// A reward document either lists one reward per variable under "rewards" or
/// gives a single "uniform" reward, which is expanded to `n` variables.
RewardSpec reward_spec_from_json(const Json& doc, std::optional<int> n = std::nullopt);
/// A cost document either lists per-variable "penalties" and "costs" or gives
/// a "uniform" {penalty, cost} object, which is expanded to `n` variables.
CostModel costs_from_json(const Json& doc, std::optional<int> n = std::nullopt);
PlanTables plan_from_json(const Json& doc);
SubsetResult subset_from_json(const Json& doc);
MultiSchedule schedule_from_json(const Json& doc);
EpisodeRecord episode_from_json(const Json& doc);
HmmModel hmm_from_json(const Json& doc);
/// Recorded observations: {"observations": [{index, state}, ...]} or a full
/// {"assignment": [x_1, ..., x_n]}.
std::vector<Observation> assignment_from_json(const Json& doc);

/// Reads and parses a JSON file. Throws IoError if unreadable, SchemaError if not JSON.
Json read_json(const std::filesystem::path& path);
/// Writes `doc` followed by a newline. Throws IoError on failure.
void write_json(const std::filesystem::path& path, const Json& doc);

template <class T>
void save(const std::filesystem::path& path, const T& value) {
  write_json(path, to_json(value));
}

}  // namespace voidp
