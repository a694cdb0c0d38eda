#include "voidp/io.hpp"

#include <fstream>
#include <sstream>

#include "voidp/error.hpp"

namespace voidp {

namespace {

std::string at(const std::string& path, const std::string& key) { return path + "/" + key; }
std::string at(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }

const Json& field(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path.empty() ? "/" : path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(at(path, key), "missing field");
  return *it;
}

const Json* optional_field(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path.empty() ? "/" : path, "expected an object");
  auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  return j.get<double>();
}

long long integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw SchemaError(path, "expected an integer");
  return j.get<long long>();
}

int small_int(const Json& j, const std::string& path) {
  const long long v = integer(j, path);
  if (v < INT32_MIN || v > INT32_MAX) throw SchemaError(path, "integer out of range");
  return static_cast<int>(v);
}

std::string text(const Json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "expected a string");
  return j.get<std::string>();
}

bool boolean(const Json& j, const std::string& path) {
  if (!j.is_boolean()) throw SchemaError(path, "expected a boolean");
  return j.get<bool>();
}

const Json& array(const Json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array");
  return j;
}

std::vector<double> numbers(const Json& j, const std::string& path) {
  std::vector<double> out;
  for (std::size_t i = 0; i < array(j, path).size(); ++i) out.push_back(number(j[i], at(path, i)));
  return out;
}

std::vector<int> ints(const Json& j, const std::string& path) {
  std::vector<int> out;
  for (std::size_t i = 0; i < array(j, path).size(); ++i) out.push_back(small_int(j[i], at(path, i)));
  return out;
}

template <class F>
auto each(const Json& j, const std::string& path, F&& read) {
  std::vector<decltype(read(j, path))> out;
  for (std::size_t i = 0; i < array(j, path).size(); ++i) out.push_back(read(j[i], at(path, i)));
  return out;
}

Matrix matrix(const Json& j, const std::string& path) {
  const auto rows = each(j, path, numbers);
  if (rows.empty()) throw SchemaError(path, "expected a nonempty matrix");
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw SchemaError(at(path, r), "ragged matrix row");
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Json header(const char* format) { return Json{{"format", format}}; }

void expect_format(const Json& doc, const char* expected, const std::string& path = "") {
  const std::string got = text(field(doc, "format", path), at(path, "format"));
  if (got == expected) return;
  const std::string want(expected);
  const auto kind = want.substr(0, want.find('/') + 1);
  if (got.rfind(kind, 0) == 0) {
    throw SchemaError(at(path, "format"), "unsupported version '" + got + "' (expected '" + want + "')");
  }
  throw SchemaError(at(path, "format"), "expected '" + want + "', got '" + got + "'");
}

ChainModel read_model(const Json& doc, const std::string& path) {
  expect_format(doc, kModelFormat, path);
  ChainModel m;
  m.prior = numbers(field(doc, "prior", path), at(path, "prior"));
  m.transitions = each(field(doc, "transitions", path), at(path, "transitions"), matrix);
  if (const Json* v = optional_field(doc, "state_values", path)) m.state_values = each(*v, at(path, "state_values"), numbers);
  return m;
}

Json reward_json(const LocalReward& r) {
  Json j{{"kind", reward_name(r)}};
  if (const auto* voi = std::get_if<DecisionVoi>(&r)) {
    j["actions"] = voi->actions;
    j["utility"] = matrix_json(voi->utility);
  } else if (const auto* wv = std::get_if<WeightedVariance>(&r)) {
    j["weight"] = wv->weight;
  } else if (const auto* hs = std::get_if<Hotspot>(&r)) {
    j["critical"] = hs->critical;
  }
  return j;
}

LocalReward read_reward(const Json& j, const std::string& path) {
  const std::string kind = text(field(j, "kind", path), at(path, "kind"));
  if (kind == "residual_entropy") return ResidualEntropy{};
  if (kind == "joint_entropy") return JointEntropy{};
  if (kind == "margin") return Margin{};
  if (kind == "expectation") return Expectation{};
  if (kind == "weighted_variance") {
    const Json* w = optional_field(j, "weight", path);
    return WeightedVariance{w ? number(*w, at(path, "weight")) : 1.0};
  }
  if (kind == "hotspot") return Hotspot{ints(field(j, "critical", path), at(path, "critical"))};
  if (kind == "decision_voi") {
    DecisionVoi voi;
    voi.utility = matrix(field(j, "utility", path), at(path, "utility"));
    if (const Json* a = optional_field(j, "actions", path)) {
      voi.actions = each(*a, at(path, "actions"), text);
    } else {
      for (std::size_t i = 0; i < voi.utility.rows(); ++i) voi.actions.push_back("a" + std::to_string(i));
    }
    if (voi.actions.size() != voi.utility.rows()) throw SchemaError(at(path, "actions"), "one action per utility row expected");
    return voi;
  }
  throw SchemaError(at(path, "kind"), "unknown reward kind '" + kind + "'");
}

RewardSpec read_reward_spec(const Json& doc, std::optional<int> n, const std::string& path) {
  expect_format(doc, kRewardFormat, path);
  RewardSpec spec;
  if (const Json* u = optional_field(doc, "uniform", path)) {
    if (!n) throw SchemaError(at(path, "uniform"), "uniform reward needs a model to size it");
    return RewardSpec::uniform(read_reward(*u, at(path, "uniform")), *n);
  }
  spec.rewards = each(field(doc, "rewards", path), at(path, "rewards"), read_reward);
  return spec;
}

CostModel read_costs(const Json& doc, std::optional<int> n, const std::string& path) {
  expect_format(doc, kCostsFormat, path);
  const int budget = small_int(field(doc, "budget", path), at(path, "budget"));
  if (const Json* u = optional_field(doc, "uniform", path)) {
    if (!n) throw SchemaError(at(path, "uniform"), "uniform costs need a model to size them");
    const Json* p = optional_field(*u, "penalty", at(path, "uniform"));
    const Json* c = optional_field(*u, "cost", at(path, "uniform"));
    return CostModel::uniform(*n, budget, p ? number(*p, at(path, "uniform/penalty")) : 0.0,
                              c ? small_int(*c, at(path, "uniform/cost")) : 1);
  }
  CostModel costs;
  costs.budget = budget;
  costs.penalties = each(field(doc, "penalties", path), at(path, "penalties"), numbers);
  costs.costs = each(field(doc, "costs", path), at(path, "costs"), ints);
  return costs;
}

Json observations_json(const std::vector<Observation>& obs) {
  Json out = Json::array();
  for (const auto& o : obs) out.push_back({{"index", o.index}, {"state", o.state}});
  return out;
}

Observation read_observation(const Json& j, const std::string& path) {
  return {small_int(field(j, "index", path), at(path, "index")), small_int(field(j, "state", path), at(path, "state"))};
}

template <class T>
void expect_size(const std::vector<T>& v, std::size_t size, const std::string& path) {
  if (v.size() != size) {
    throw SchemaError(path, "expected " + std::to_string(size) + " entries, got " + std::to_string(v.size()));
  }
}

}  // namespace

std::string document_format(const Json& doc) { return text(field(doc, "format", ""), "/format"); }

Json to_json(const ChainModel& model) {
  Json j = header(kModelFormat);
  j["prior"] = model.prior;
  j["transitions"] = Json::array();
  for (const auto& t : model.transitions) j["transitions"].push_back(matrix_json(t));
  if (model.has_state_values()) j["state_values"] = model.state_values;
  return j;
}

Json to_json(const MultiChainModel& model) {
  Json j = header(kMultiFormat);
  j["sensors"] = Json::array();
  for (const auto& s : model.sensors) j["sensors"].push_back(to_json(s));
  j["rewards"] = Json::array();
  for (const auto& r : model.rewards) j["rewards"].push_back(to_json(r));
  if (model.coupling) j["coupling"] = to_json(*model.coupling);
  return j;
}

Json to_json(const RewardSpec& spec) {
  Json j = header(kRewardFormat);
  j["rewards"] = Json::array();
  for (const auto& r : spec.rewards) j["rewards"].push_back(reward_json(r));
  return j;
}

Json to_json(const CostModel& costs) {
  Json j = header(kCostsFormat);
  j["budget"] = costs.budget;
  j["penalties"] = costs.penalties;
  j["costs"] = costs.costs;
  return j;
}

Json to_json(const PlanTables& plan) {
  Json j = header(kPlanFormat);
  j["mode"] = to_string(plan.mode());
  j["model"] = to_json(plan.model());
  j["rewards"] = to_json(plan.spec());
  j["costs"] = to_json(plan.costs());
  j["root_value"] = plan.root_value();
  j["eval_count"] = plan.eval_count();
  j["values"] = plan.raw_values();
  j["choices"] = plan.raw_choices();
  j["splits"] = plan.raw_splits();
  return j;
}

Json to_json(const SubsetResult& result) {
  Json j = header(kSubsetFormat);
  j["mode"] = to_string(result.mode);
  j["selected"] = result.selected;
  j["value"] = result.value;
  j["eval_count"] = result.eval_count;
  j["n"] = result.tables.size();
  j["budget"] = result.tables.budget();
  j["values"] = result.tables.raw_values();
  j["choices"] = result.tables.raw_choices();
  return j;
}

Json to_json(const MultiSchedule& schedule) {
  Json j = header(kScheduleFormat);
  j["selected"] = schedule.selected;
  j["objective"] = schedule.objective;
  j["trace"] = schedule.trace;
  j["deltas"] = schedule.deltas;
  j["iterations"] = schedule.iterations;
  j["converged"] = schedule.converged;
  return j;
}

Json to_json(const EpisodeRecord& episode) {
  Json j = header(kEpisodeFormat);
  j["queried"] = observations_json(episode.queried);
  j["realized_reward"] = episode.realized_reward;
  j["spent"] = episode.spent;
  return j;
}

Json to_json(const HmmModel& hmm) {
  Json j = header(kHmmFormat);
  j["hidden"] = to_json(hmm.hidden);
  j["emissions"] = Json::array();
  for (const auto& e : hmm.emissions) j["emissions"].push_back(matrix_json(e));
  return j;
}

ChainModel model_from_json(const Json& doc) { return read_model(doc, ""); }

MultiChainModel multi_from_json(const Json& doc) {
  expect_format(doc, kMultiFormat);
  MultiChainModel m;
  m.sensors = each(field(doc, "sensors", ""), "/sensors", read_model);
  const Json& rewards = array(field(doc, "rewards", ""), "/rewards");
  for (std::size_t s = 0; s < rewards.size(); ++s) {
    std::optional<int> n;
    if (s < m.sensors.size()) n = m.sensors[s].size();
    m.rewards.push_back(read_reward_spec(rewards[s], n, at("/rewards", s)));
  }
  if (const Json* c = optional_field(doc, "coupling", "")) m.coupling = read_model(*c, "/coupling");
  return m;
}

RewardSpec reward_spec_from_json(const Json& doc, std::optional<int> n) { return read_reward_spec(doc, n, ""); }

CostModel costs_from_json(const Json& doc, std::optional<int> n) { return read_costs(doc, n, ""); }

PlanTables plan_from_json(const Json& doc) {
  expect_format(doc, kPlanFormat);
  const std::string mode_text = text(field(doc, "mode", ""), "/mode");
  if (mode_text != "filtering" && mode_text != "smoothing") throw SchemaError("/mode", "expected filtering|smoothing");
  ChainModel model = read_model(field(doc, "model", ""), "/model");
  const int n = model.size();
  PlanTables plan(std::move(model), read_reward_spec(field(doc, "rewards", ""), n, "/rewards"),
                  read_costs(field(doc, "costs", ""), n, "/costs"), mode_from_string(mode_text));
  auto values = numbers(field(doc, "values", ""), "/values");
  auto choices = ints(field(doc, "choices", ""), "/choices");
  auto splits = ints(field(doc, "splits", ""), "/splits");
  expect_size(values, plan.raw_values().size(), "/values");
  expect_size(choices, plan.raw_choices().size(), "/choices");
  expect_size(splits, plan.raw_splits().size(), "/splits");
  plan.raw_values() = std::move(values);
  plan.raw_choices() = std::move(choices);
  plan.raw_splits() = std::move(splits);
  const long long count = integer(field(doc, "eval_count", ""), "/eval_count");
  if (count < 0) throw SchemaError("/eval_count", "expected a nonnegative integer");
  plan.set_eval_count(static_cast<std::uint64_t>(count));
  return plan;
}

SubsetResult subset_from_json(const Json& doc) {
  expect_format(doc, kSubsetFormat);
  SubsetResult r;
  const std::string mode_text = text(field(doc, "mode", ""), "/mode");
  if (mode_text != "filtering" && mode_text != "smoothing") throw SchemaError("/mode", "expected filtering|smoothing");
  r.mode = mode_from_string(mode_text);
  r.selected = ints(field(doc, "selected", ""), "/selected");
  r.value = number(field(doc, "value", ""), "/value");
  const long long count = integer(field(doc, "eval_count", ""), "/eval_count");
  if (count < 0) throw SchemaError("/eval_count", "expected a nonnegative integer");
  r.eval_count = static_cast<std::uint64_t>(count);
  const int n = small_int(field(doc, "n", ""), "/n");
  const int budget = small_int(field(doc, "budget", ""), "/budget");
  if (n < 1 || budget < 0) throw SchemaError(n < 1 ? "/n" : "/budget", "out of range");
  r.tables = SubsetTables(n, budget);
  auto values = numbers(field(doc, "values", ""), "/values");
  auto choices = ints(field(doc, "choices", ""), "/choices");
  expect_size(values, r.tables.raw_values().size(), "/values");
  expect_size(choices, r.tables.raw_choices().size(), "/choices");
  r.tables.raw_values() = std::move(values);
  r.tables.raw_choices() = std::move(choices);
  return r;
}

MultiSchedule schedule_from_json(const Json& doc) {
  expect_format(doc, kScheduleFormat);
  MultiSchedule s;
  s.selected = each(field(doc, "selected", ""), "/selected", ints);
  s.objective = number(field(doc, "objective", ""), "/objective");
  s.trace = numbers(field(doc, "trace", ""), "/trace");
  s.deltas = numbers(field(doc, "deltas", ""), "/deltas");
  s.iterations = small_int(field(doc, "iterations", ""), "/iterations");
  s.converged = boolean(field(doc, "converged", ""), "/converged");
  return s;
}

EpisodeRecord episode_from_json(const Json& doc) {
  expect_format(doc, kEpisodeFormat);
  EpisodeRecord e;
  e.queried = each(field(doc, "queried", ""), "/queried", read_observation);
  e.realized_reward = number(field(doc, "realized_reward", ""), "/realized_reward");
  e.spent = small_int(field(doc, "spent", ""), "/spent");
  return e;
}

HmmModel hmm_from_json(const Json& doc) {
  expect_format(doc, kHmmFormat);
  HmmModel hmm;
  hmm.hidden = read_model(field(doc, "hidden", ""), "/hidden");
  hmm.emissions = each(field(doc, "emissions", ""), "/emissions", matrix);
  return hmm;
}

std::vector<Observation> assignment_from_json(const Json& doc) {
  expect_format(doc, kAssignmentFormat);
  if (const Json* full = optional_field(doc, "assignment", "")) {
    const auto states = ints(*full, "/assignment");
    std::vector<Observation> out;
    for (std::size_t i = 0; i < states.size(); ++i) out.push_back({static_cast<Index>(i + 1), states[i]});
    return out;
  }
  return each(field(doc, "observations", ""), "/observations", read_observation);
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return Json::parse(buffer.str());
  } catch (const Json::parse_error& e) {
    throw SchemaError("/", std::string("invalid JSON in '") + path.string() + "': " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& doc) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << doc.dump(1) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace voidp
