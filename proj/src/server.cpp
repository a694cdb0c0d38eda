#include "voidp/server.hpp"

namespace voidp {

namespace {

constexpr const char* kJson = "application/json";

void send(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

template <class F>
void guarded(httplib::Response& res, F&& handler) {
  try {
    handler();
  } catch (const SessionError& e) {
    send(res, e.status(), e.body());
  } catch (const std::exception& e) {
    send(res, 500, SessionError(500, "internal", e.what()).body());
  }
}

Json parse_body(const httplib::Request& req) {
  try {
    return Json::parse(req.body);
  } catch (const Json::parse_error& e) {
    throw SessionError(400, "invalid_json", e.what());
  }
}

}  // namespace

void mount_session_routes(httplib::Server& server, SessionService& service) {
  server.Post("/sessions", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send(res, 201, service.create(parse_body(req))); });
  });
  server.Get(R"(/sessions/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send(res, 200, service.get(req.matches[1])); });
  });
  server.Post(R"(/sessions/([^/]+)/answer)", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send(res, 200, service.answer(req.matches[1], parse_body(req))); });
  });
  server.Delete(R"(/sessions/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      service.remove(id);
      send(res, 200, Json{{"id", id}, {"deleted", true}});
    });
  });
  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    const std::string code = res.status == 404 ? "not_found" : "bad_request";
    send(res, res.status, SessionError(res.status, code, req.method + " " + req.path).body());
  });
}

}  // namespace voidp
