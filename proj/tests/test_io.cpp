#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "test_support.hpp"
#include "voidp/error.hpp"
#include "voidp/io.hpp"

using namespace voidp;
using voidp::testing::sym3;

namespace {

std::string schema_field(const std::function<void()>& f) {
  try {
    f();
  } catch (const SchemaError& e) {
    return e.field();
  }
  return "<no error>";
}

RewardSpec mixed_spec(const ChainModel& m) {
  RewardSpec spec;
  std::mt19937_64 rng(9);
  for (Index j = 1; j <= m.size(); ++j) spec.rewards.push_back(voidp::testing::random_reward(j, m.states(j), rng));
  return spec;
}

}  // namespace

TEST_CASE("chain model round trip") {
  const auto m = sym3();
  CHECK(model_from_json(to_json(m)) == m);
  CHECK(model_from_json(Json::parse(to_json(m).dump())) == m);

  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto r = voidp::testing::random_chain(6, 4, rng);
    CHECK(model_from_json(Json::parse(to_json(r).dump())) == r);
  }
}

TEST_CASE("doubles survive text exactly") {
  ChainModel m;
  m.prior = {0.1, 0.2, 1.0 - 0.1 - 0.2};
  m.transitions.push_back(Matrix{{1.0 / 3, 2.0 / 3, 0.0}, {5e-324, 1.0 - 5e-324, 0.0}, {0.0, 0.0, 1.0}});
  const auto back = model_from_json(Json::parse(to_json(m).dump()));
  CHECK(back == m);
}

TEST_CASE("reward, cost, subset, plan, schedule and episode round trips") {
  std::mt19937_64 rng(2);
  const auto m = voidp::testing::random_chain(4, 2, rng);
  const auto spec = mixed_spec(m);
  CHECK(reward_spec_from_json(Json::parse(to_json(spec).dump())) == spec);

  const auto costs = voidp::testing::random_costs(4, 3, rng, true, &m);
  CHECK(costs_from_json(Json::parse(to_json(costs).dump())) == costs);

  const auto unit = CostModel::uniform(4, 2, 0.1);
  for (Mode mode : {Mode::Filtering, Mode::Smoothing}) {
    const auto subset = select_subset(m, spec, unit, mode);
    CHECK(subset_from_json(Json::parse(to_json(subset).dump())) == subset);

    const auto plan = build_plan(m, spec, costs, mode);
    const auto back = plan_from_json(Json::parse(to_json(plan).dump()));
    CHECK(back == plan);
    CHECK(plan_value(back, m) == plan_value(plan, m));
  }

  MultiSchedule sched{{{1, 3}, {}}, -1.25, {-2.0, -1.25}, {0.75}, 1, true};
  const auto sb = schedule_from_json(Json::parse(to_json(sched).dump()));
  CHECK(sb.selected == sched.selected);
  CHECK(sb.trace == sched.trace);
  CHECK(sb.converged);

  EpisodeRecord ep{{{2, 1}, {4, 0}}, -0.5, 2};
  const auto eb = episode_from_json(Json::parse(to_json(ep).dump()));
  CHECK(eb.queried == ep.queried);
  CHECK(eb.realized_reward == ep.realized_reward);
  CHECK(eb.spent == 2);
}

TEST_CASE("multi-chain model round trip") {
  std::mt19937_64 rng(3);
  MultiChainModel m;
  m.sensors = {voidp::testing::random_chain(3, 2, rng), voidp::testing::random_chain(3, 2, rng)};
  m.rewards = {RewardSpec::uniform(ResidualEntropy{}, 3), RewardSpec::uniform(Expectation{}, 3)};
  CHECK(multi_from_json(Json::parse(to_json(m).dump())) == m);
  m.coupling = product_chain(m.sensors);
  CHECK(multi_from_json(Json::parse(to_json(m).dump())) == m);
}

TEST_CASE("SYM3 plan file keeps its value") {
  const auto m = sym3();
  const auto plan = build_plan(m, RewardSpec::uniform(ResidualEntropy{}, 3), CostModel::uniform(3, 1), Mode::Smoothing);
  const auto path = std::filesystem::temp_directory_path() / "voidp_test_sym3_plan.json";
  save(path, plan);
  const auto back = plan_from_json(read_json(path));
  std::filesystem::remove(path);
  CHECK(back == plan);
  CHECK(plan_value(back, m) == plan_value(plan, m));
  CHECK(back.choice(0, 4, 0, 0, 1) == 2);
}

TEST_CASE("uniform shorthands") {
  const Json r = {{"format", "voidp-reward/1"}, {"uniform", {{"kind", "hotspot"}, {"critical", {1}}}}};
  CHECK(reward_spec_from_json(r, 3) == RewardSpec::uniform(Hotspot{{1}}, 3));
  CHECK(schema_field([&] { reward_spec_from_json(r); }) == "/uniform");
  const Json c = {{"format", "voidp-costs/1"}, {"budget", 2}, {"uniform", {{"penalty", 0.5}}}};
  CHECK(costs_from_json(c, 3) == CostModel::uniform(3, 2, 0.5, 1));
}

TEST_CASE("assignments") {
  const Json full = {{"format", "voidp-assignment/1"}, {"assignment", {1, 0, 1}}};
  CHECK(assignment_from_json(full) == std::vector<Observation>{{1, 1}, {2, 0}, {3, 1}});
  const Json partial = {{"format", "voidp-assignment/1"}, {"observations", {{{"index", 2}, {"state", 1}}}}};
  CHECK(assignment_from_json(partial) == std::vector<Observation>{{2, 1}});
}

TEST_CASE("schema errors name the field") {
  Json doc = to_json(sym3());
  doc.erase("transitions");
  CHECK(schema_field([&] { model_from_json(doc); }) == "/transitions");

  doc = to_json(sym3());
  doc["transitions"][1][0] = Json::array({0.5});
  CHECK(schema_field([&] { model_from_json(doc); }) == "/transitions/1/1");

  doc = to_json(sym3());
  doc["prior"][1] = "x";
  CHECK(schema_field([&] { model_from_json(doc); }) == "/prior/1");

  doc = to_json(sym3());
  doc["format"] = "voidp-model/2";
  try {
    model_from_json(doc);
    FAIL("expected a version error");
  } catch (const SchemaError& e) {
    CHECK(e.field() == "/format");
    CHECK(std::string(e.what()).find("unsupported version") != std::string::npos);
  }
  CHECK(schema_field([&] { plan_from_json(to_json(sym3())); }) == "/format");

  const auto plan = build_plan(sym3(), RewardSpec::uniform(ResidualEntropy{}, 3), CostModel::uniform(3, 1), Mode::Filtering);
  Json p = to_json(plan);
  p["values"].erase(p["values"].size() - 1);
  CHECK(schema_field([&] { plan_from_json(p); }) == "/values");
  p = to_json(plan);
  p["costs"].erase("budget");
  CHECK(schema_field([&] { plan_from_json(p); }) == "/costs/budget");
  p = to_json(plan);
  p["rewards"]["rewards"][2]["kind"] = "bogus";
  CHECK(schema_field([&] { plan_from_json(p); }) == "/rewards/rewards/2/kind");
}

TEST_CASE("truncated and missing files") {
  const auto path = std::filesystem::temp_directory_path() / "voidp_test_truncated.json";
  {
    std::ofstream out(path);
    const std::string text = to_json(sym3()).dump();
    out << text.substr(0, text.size() / 2);
  }
  CHECK_THROWS_AS(read_json(path), SchemaError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_json(path), IoError);
  try {
    read_json(path);
  } catch (const Error& e) {
    CHECK(e.exit_code() == 4);
  }
}
