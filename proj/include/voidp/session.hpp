#pragma once

// Plan execution sessions driven by JSON requests. Transport-free: the HTTP
// routes in server.hpp translate requests and SessionError into responses.

#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>

#include "voidp/io.hpp"
#include "voidp/plan_dp.hpp"

namespace voidp {

/// A rejected request. `status` is the HTTP status, `code` a stable machine
/// code and `field` the offending request field (may be empty).
class SessionError : public std::runtime_error {
 public:
  SessionError(int status, std::string code, const std::string& message, std::string field = {})
      : std::runtime_error(message), status_(status), code_(std::move(code)), field_(std::move(field)) {}
  int status() const noexcept { return status_; }
  const std::string& code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }
  Json body() const;

 private:
  int status_;
  std::string code_;
  std::string field_;
};

class SessionService {
 public:
  explicit SessionService(std::uint64_t seed = std::random_device{}());

  /// Body: {"plan": <voidp-plan/1>} or {"plan_file": "<path>"}. Returns the initial state.
  Json create(const Json& request);
  Json get(const std::string& id) const;
  /// Body: {"index": j, "state": x}. Returns the next state.
  Json answer(const std::string& id, const Json& request);
  void remove(const std::string& id);
  std::size_t size() const;

 private:
  struct Session {
    std::string id;
    std::shared_ptr<const PlanTables> plan;
    std::unique_ptr<PlanCursor> cursor;
    mutable std::mutex mutex;
  };

  std::shared_ptr<Session> find(const std::string& id) const;
  static Json state(const Session& session);

  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mt19937_64 ids_;
};

}  // namespace voidp
