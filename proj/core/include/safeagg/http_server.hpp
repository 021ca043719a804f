#pragma once

#include <memory>
#include <string>

#include "safeagg/controller.hpp"

namespace safeagg {

// JSON-over-HTTP front end for a Controller. Every endpoint is a POST whose
// body and reply mirror the in-process API field for field, so independently
// written clients interoperate. Long-polling endpoints hold the connection
// for at most one poll window; callers with larger budgets re-issue requests.
class ControllerHttpServer {
 public:
  // Binds immediately; port 0 picks a free port. Throws TransportError if
  // the bind or listener startup fails.
  ControllerHttpServer(Controller& controller, const std::string& host,
                       int port);
  ~ControllerHttpServer();

  ControllerHttpServer(const ControllerHttpServer&) = delete;
  ControllerHttpServer& operator=(const ControllerHttpServer&) = delete;

  int port() const;
  std::string base_url() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace safeagg
