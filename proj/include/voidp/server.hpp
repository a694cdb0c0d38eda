#pragma once

// HTTP/JSON routes for SessionService:
//   POST   /sessions              create, 201 + state
//   GET    /sessions/{id}         state
//   POST   /sessions/{id}/answer  {index, state} -> next state
//   DELETE /sessions/{id}
// Errors are {"error": {code, message, field?}} with a 4xx status.

#include "httplib.h"
#include "voidp/session.hpp"

namespace voidp {

void mount_session_routes(httplib::Server& server, SessionService& service);

}  // namespace voidp
