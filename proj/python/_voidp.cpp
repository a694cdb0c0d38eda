#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "voidp/error.hpp"
#include "voidp/experiment.hpp"
#include "voidp/io.hpp"
#include "voidp/multi_sensor.hpp"
#include "voidp/plan_dp.hpp"
#include "voidp/session.hpp"
#include "voidp/subset_dp.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using voidp::Json;

// Documents cross the boundary as JSON text; the Python package wraps them as dicts.
namespace {

struct Problem {
  voidp::ChainModel model;
  voidp::RewardSpec spec;
  voidp::CostModel costs;
};

Problem problem(const std::string& model, const std::string& rewards, const std::string& costs) {
  Problem p;
  p.model = voidp::model_from_json(Json::parse(model));
  p.spec = voidp::reward_spec_from_json(Json::parse(rewards), p.model.size());
  p.costs = voidp::costs_from_json(Json::parse(costs), p.model.size());
  return p;
}

std::vector<voidp::Observation> observations(const std::vector<std::pair<int, int>>& pairs) {
  std::vector<voidp::Observation> out;
  for (const auto& [j, x] : pairs) out.push_back({j, x});
  return out;
}

}  // namespace

PYBIND11_MODULE(_voidp, m) {
  m.doc() = "Value-of-information observation selection on chain models";

  auto error = py::register_exception<voidp::Error>(m, "Error");
  py::register_exception<voidp::ValidationError>(m, "ValidationError", error.ptr());
  py::register_exception<voidp::InfeasibleInput>(m, "InfeasibleInput", error.ptr());
  py::register_exception<voidp::IoError>(m, "IoError", error.ptr());
  py::register_exception<voidp::SchemaError>(m, "SchemaError", error.ptr());

  m.def("validate", [](const std::string& model) {
    return voidp::validate_model(voidp::model_from_json(Json::parse(model))).violations;
  }, "model"_a, "Violations of a voidp-model/1 document (empty if valid)");

  m.def("select_subset", [](const std::string& model, const std::string& rewards, const std::string& costs,
                            const std::string& mode) {
    const auto p = problem(model, rewards, costs);
    py::gil_scoped_release release;
    return voidp::to_json(voidp::select_subset(p.model, p.spec, p.costs, voidp::mode_from_string(mode))).dump();
  }, "model"_a, "rewards"_a, "costs"_a, "mode"_a);

  m.def("build_plan", [](const std::string& model, const std::string& rewards, const std::string& costs,
                         const std::string& mode) {
    const auto p = problem(model, rewards, costs);
    py::gil_scoped_release release;
    return voidp::to_json(voidp::build_plan(p.model, p.spec, p.costs, voidp::mode_from_string(mode))).dump();
  }, "model"_a, "rewards"_a, "costs"_a, "mode"_a);

  m.def("total_objective", [](const std::string& model, const std::string& rewards, const std::string& costs,
                              const std::vector<int>& selected, const std::string& mode) {
    const auto p = problem(model, rewards, costs);
    return voidp::total_objective(p.model, p.spec, p.costs, selected, voidp::mode_from_string(mode));
  }, "model"_a, "rewards"_a, "costs"_a, "selected"_a, "mode"_a);

  m.def("posterior", [](const std::string& model, const std::vector<std::pair<int, int>>& evidence, int index,
                        const std::string& mode) {
    const auto chain = voidp::model_from_json(Json::parse(model));
    voidp::require_valid(chain);
    const voidp::Evidence ev(observations(evidence), voidp::mode_from_string(mode));
    voidp::check_evidence_domain(chain, ev);
    return voidp::posterior_marginal(chain, ev, index).p;
  }, "model"_a, "evidence"_a, "index"_a, "mode"_a);

  m.def("realized_reward", [](const std::string& plan, const std::vector<std::pair<int, int>>& queried) {
    return voidp::realized_reward(voidp::plan_from_json(Json::parse(plan)), observations(queried));
  }, "plan"_a, "queried"_a);

  m.def("schedule", [](const std::string& multi, const std::vector<std::string>& costs, int samples,
                       std::optional<std::uint64_t> seed) {
    const auto model = voidp::multi_from_json(Json::parse(multi));
    std::vector<voidp::CostModel> per_sensor;
    for (const auto& c : costs) per_sensor.push_back(voidp::costs_from_json(Json::parse(c), model.steps()));
    voidp::ScheduleOptions options;
    options.cross.samples = samples;
    options.cross.seed = seed;
    py::gil_scoped_release release;
    return voidp::to_json(voidp::schedule_multi(model, per_sensor, options)).dump();
  }, "multi"_a, "costs"_a, "samples"_a = 0, "seed"_a = py::none());

  m.def("experiment", [](const std::string& model, const std::string& rewards, const std::string& costs,
                         const std::string& mode, const std::vector<std::string>& methods, int k_min, int k_max) {
    const auto p = problem(model, rewards, costs);
    std::vector<voidp::Method> ms;
    for (const auto& name : methods) ms.push_back(voidp::method_from_string(name));
    const auto table = voidp::run_experiment(p.model, p.spec, p.costs, voidp::mode_from_string(mode), ms, k_min, k_max);
    py::list rows;
    for (const auto& row : table.rows) {
      py::dict r;
      r["k"] = row.k;
      for (std::size_t i = 0; i < table.methods.size(); ++i) {
        r[voidp::to_string(table.methods[i])] = row.values[i];
        r[py::str("improvement_") + py::str(voidp::to_string(table.methods[i]))] = row.improvement[i];
      }
      rows.append(r);
    }
    return py::dict("baseline"_a = table.baseline, "rows"_a = rows);
  }, "model"_a, "rewards"_a, "costs"_a, "mode"_a, "methods"_a, "k_min"_a, "k_max"_a);

  py::exception<voidp::SessionError>(m, "SessionError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const voidp::SessionError& e) {
      const auto type = py::module_::import("voidp._voidp").attr("SessionError");
      PyErr_SetObject(type.ptr(), py::str(e.body().dump()).ptr());
    }
  });
  py::class_<voidp::SessionService>(m, "SessionService")
      .def(py::init([](std::optional<std::uint64_t> seed) {
        return seed ? std::make_unique<voidp::SessionService>(*seed) : std::make_unique<voidp::SessionService>();
      }), "seed"_a = py::none())
      .def("create", [](voidp::SessionService& s, const std::string& body) { return s.create(Json::parse(body)).dump(); })
      .def("get", [](voidp::SessionService& s, const std::string& id) { return s.get(id).dump(); })
      .def("answer", [](voidp::SessionService& s, const std::string& id, const std::string& body) {
        return s.answer(id, Json::parse(body)).dump();
      })
      .def("remove", &voidp::SessionService::remove)
      .def("__len__", &voidp::SessionService::size);
}
