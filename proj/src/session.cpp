#include "voidp/session.hpp"

#include <algorithm>
#include <cstdio>

#include "voidp/error.hpp"

namespace voidp {

Json SessionError::body() const {
  Json e{{"code", code_}, {"message", what()}};
  if (!field_.empty()) e["field"] = field_;
  return Json{{"error", e}};
}

SessionService::SessionService(std::uint64_t seed) : ids_(seed) {}

Json SessionService::create(const Json& request) {
  if (!request.is_object()) throw SessionError(400, "schema_error", "request body must be a JSON object");
  std::shared_ptr<const PlanTables> plan;
  try {
    if (request.contains("plan")) {
      plan = std::make_shared<const PlanTables>(plan_from_json(request["plan"]));
    } else if (request.contains("plan_file")) {
      if (!request["plan_file"].is_string()) throw SessionError(400, "schema_error", "plan_file must be a string", "plan_file");
      plan = std::make_shared<const PlanTables>(plan_from_json(read_json(request["plan_file"].get<std::string>())));
    } else {
      throw SessionError(400, "schema_error", "expected 'plan' or 'plan_file'", "plan");
    }
  } catch (const SchemaError& e) {
    throw SessionError(400, "schema_error", e.what(), "plan" + e.field());
  } catch (const IoError& e) {
    throw SessionError(400, "io_error", e.what(), "plan_file");
  }
  auto session = std::make_shared<Session>();
  session->plan = plan;
  session->cursor = std::make_unique<PlanCursor>(*plan);
  std::lock_guard lock(mutex_);
  do {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(ids_()));
    session->id = buf;
  } while (sessions_.count(session->id));
  sessions_[session->id] = session;
  std::lock_guard inner(session->mutex);
  return state(*session);
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw SessionError(404, "unknown_session", "no session '" + id + "'", "id");
  return it->second;
}

Json SessionService::get(const std::string& id) const {
  auto session = find(id);
  std::lock_guard lock(session->mutex);
  return state(*session);
}

Json SessionService::answer(const std::string& id, const Json& request) {
  auto session = find(id);
  std::lock_guard lock(session->mutex);
  if (!request.is_object()) throw SessionError(400, "schema_error", "request body must be a JSON object");
  for (const char* key : {"index", "state"}) {
    if (!request.contains(key)) throw SessionError(400, "schema_error", std::string("missing field '") + key + "'", key);
    if (!request[key].is_number_integer()) {
      throw SessionError(400, "schema_error", std::string("field '") + key + "' must be an integer", key);
    }
  }
  const long long index = request["index"].get<long long>();
  const long long state_value = request["state"].get<long long>();
  PlanCursor& cursor = *session->cursor;
  const ChainModel& model = session->plan->model();
  if (index < 1 || index > model.size()) {
    throw SessionError(422, "out_of_range", "index " + std::to_string(index) + " outside 1.." + std::to_string(model.size()),
                       "index");
  }
  if (cursor.done()) throw SessionError(409, "session_done", "the plan has already stopped", "index");
  if (index != *cursor.next_query()) {
    throw SessionError(409, "index_mismatch",
                       "expected an answer for index " + std::to_string(*cursor.next_query()) + ", got " +
                           std::to_string(index),
                       "index");
  }
  const int d = model.states(static_cast<Index>(index));
  if (state_value < 0 || state_value >= d) {
    throw SessionError(422, "out_of_range",
                       "state " + std::to_string(state_value) + " outside 0.." + std::to_string(d - 1) + " for index " +
                           std::to_string(index),
                       "state");
  }
  try {
    cursor.answer(static_cast<Index>(index), static_cast<State>(state_value));
  } catch (const ZeroProbabilityEvidence& e) {
    throw SessionError(409, "zero_probability", e.what(), "state");
  }
  return state(*session);
}

void SessionService::remove(const std::string& id) {
  std::lock_guard lock(mutex_);
  if (sessions_.erase(id) == 0) throw SessionError(404, "unknown_session", "no session '" + id + "'", "id");
}

std::size_t SessionService::size() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

Json SessionService::state(const Session& session) {
  const PlanCursor& cursor = *session.cursor;
  const PlanTables& plan = *session.plan;
  Json s;
  s["id"] = session.id;
  s["mode"] = to_string(plan.mode());
  s["done"] = cursor.done();
  s["next_query"] = cursor.done() ? Json(nullptr) : Json(*cursor.next_query());
  s["budget"] = plan.budget();
  s["spent"] = cursor.spent();
  s["remaining"] = cursor.remaining();
  s["expected_value"] = plan.root_value();
  Json queried = Json::array();
  for (const auto& o : cursor.queried()) queried.push_back({{"index", o.index}, {"state", o.state}});
  s["evidence"] = std::move(queried);
  const Evidence evidence = cursor.evidence();
  Json marginals = Json::array();
  for (Index j = 1; j <= plan.size(); ++j) marginals.push_back(posterior_marginal(plan.model(), evidence, j).p);
  s["marginals"] = std::move(marginals);
  s["realized_reward"] = cursor.done() ? Json(realized_reward(plan, cursor.queried())) : Json(nullptr);
  return s;
}

}  // namespace voidp
