#include "safeagg/http_server.hpp"

#include <httplib.h>

#include <functional>
#include <json.hpp>
#include <thread>

#include "safeagg/errors.hpp"

namespace safeagg {

using nlohmann::json;

namespace {

GroupId group_or_default(const json& body) {
  if (!body.contains("group")) return 1;
  return body.at("group").get<GroupId>();
}

json error_body(const std::string& what) { return json{{"error", what}}; }

}  // namespace

struct ControllerHttpServer::Impl {
  Controller& controller;
  httplib::Server server;
  std::thread listener;
  int port = 0;
  std::string host;

  explicit Impl(Controller& c) : controller(c) {}

  // Wraps a handler body with JSON parsing and the error-to-status mapping
  // every endpoint shares.
  void route(const std::string& path,
             std::function<json(const json&)> handler) {
    server.Post(path, [this, handler = std::move(handler)](
                          const httplib::Request& req,
                          httplib::Response& res) {
      json body = json::object();
      if (!req.body.empty()) {
        body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object()) {
          res.status = 400;
          res.set_content(error_body("request body is not a JSON object").dump(),
                          "application/json");
          return;
        }
      }
      try {
        res.set_content(handler(body).dump(), "application/json");
      } catch (const UnknownNode& e) {
        res.status = 404;
        res.set_content(error_body(e.what()).dump(), "application/json");
      } catch (const TimeoutError& e) {
        res.status = 408;
        res.set_content(error_body(e.what()).dump(), "application/json");
      } catch (const ProtocolError& e) {
        res.status = 400;
        res.set_content(error_body(e.what()).dump(), "application/json");
      } catch (const json::exception& e) {
        res.status = 400;
        res.set_content(error_body(e.what()).dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(error_body(e.what()).dump(), "application/json");
      }
    });
  }

  void install_routes() {
    route("/register_key", [this](const json& b) {
      controller.register_key(b.at("node").get<NodeId>(),
                              b.at("key").get<std::string>());
      return json{{"status", "ok"}};
    });
    route("/get_key", [this](const json& b) {
      return json{{"key", controller.get_key(b.at("node").get<NodeId>())}};
    });
    route("/post_aggregate", [this](const json& b) {
      controller.post_aggregate(b.at("from_node").get<NodeId>(),
                                b.at("to_node").get<NodeId>(),
                                b.at("aggregate").get<std::string>(),
                                group_or_default(b));
      return json{{"status", "ok"}};
    });
    route("/check_aggregate", [this](const json& b) {
      // The server holds the connection for one poll window; clients with a
      // longer budget re-issue the request.
      CheckReply rep =
          controller.check_aggregate(b.at("node").get<NodeId>(),
                                     group_or_default(b), std::nullopt);
      json out{{"status", rep.status}};
      if (rep.status == "repost") out["to_node"] = rep.to_node;
      return out;
    });
    route("/get_aggregate", [this](const json& b) {
      FetchReply rep = controller.get_aggregate(b.at("node").get<NodeId>(),
                                                group_or_default(b),
                                                std::nullopt);
      return json{{"status", rep.status},
                  {"aggregate", rep.aggregate},
                  {"from_node", rep.from_node},
                  {"posted", rep.posted}};
    });
    route("/post_average", [this](const json& b) {
      controller.post_average(b.at("average").get<std::vector<double>>(),
                              b.at("node").get<NodeId>(), group_or_default(b));
      return json{{"status", "ok"}};
    });
    route("/get_average", [this](const json&) {
      AverageReply rep = controller.get_average(std::nullopt);
      return json{{"status", rep.status}, {"average", rep.average}};
    });
    route("/should_initiate", [this](const json& b) {
      return json{{"init", controller.should_initiate(b.at("node").get<NodeId>(),
                                                      group_or_default(b))}};
    });
    route("/post_value", [this](const json& b) {
      controller.post_value(b.at("node").get<NodeId>(),
                            b.at("values").get<std::vector<double>>(),
                            group_or_default(b));
      return json{{"status", "ok"}};
    });
    route("/monitor_state", [this](const json& b) {
      MonitorView view = controller.monitor_state(group_or_default(b));
      json entries = json::array();
      for (const MonitorEntry& e : view.entries) {
        entries.push_back({{"to", e.to}, {"from", e.from}, {"age", e.age_s}});
      }
      json out{{"entries", entries},
               {"chain", view.chain},
               {"skipped", view.skipped}};
      if (view.has_initiator) out["initiator"] = view.initiator;
      return out;
    });
    route("/direct_repost", [this](const json& b) {
      controller.direct_repost(group_or_default(b),
                               b.at("stuck_sender").get<NodeId>(),
                               b.at("new_target").get<NodeId>());
      return json{{"status", "ok"}};
    });
    route("/mark_skipped", [this](const json& b) {
      controller.mark_skipped(group_or_default(b), b.at("node").get<NodeId>());
      return json{{"status", "ok"}};
    });
    route("/round_status", [this](const json& b) {
      RoundPeek peek = controller.round_status(group_or_default(b));
      json out{{"exists", peek.exists}};
      if (peek.exists) {
        out["status"] = peek.status;
        out["initiator"] = peek.initiator;
        out["age"] = peek.age_s;
      }
      return out;
    });
    route("/post_preneg", [this](const json& b) {
      controller.post_preneg(b.at("from_node").get<NodeId>(),
                             b.at("to_node").get<NodeId>(),
                             b.at("sealed_key").get<std::string>());
      return json{{"status", "ok"}};
    });
    route("/get_preneg", [this](const json& b) {
      auto entries = controller.get_preneg(b.at("node").get<NodeId>(),
                                           b.at("expected").get<int>(),
                                           std::nullopt);
      json out = json::array();
      for (const PrenegEntry& e : entries) {
        out.push_back({{"from", e.from}, {"sealed_key", e.sealed_key}});
      }
      return json{{"entries", out}};
    });
    route("/configure", [this](const json& b) {
      controller.configure_chain(group_or_default(b),
                                 b.at("chain").get<std::vector<NodeId>>());
      return json{{"status", "ok"}};
    });
    route("/reset", [this](const json&) {
      controller.reset();
      return json{{"status", "ok"}};
    });
    route("/counters", [this](const json&) {
      return json{{"counters", controller.counters()}};
    });
  }
};

ControllerHttpServer::ControllerHttpServer(Controller& controller,
                                           const std::string& host, int port)
    : impl_(std::make_unique<Impl>(controller)) {
  impl_->host = host;
  impl_->install_routes();
  // Long polls can hold many connections open at once; size the worker pool
  // for a full chain plus the monitor with room to spare.
  impl_->server.new_task_queue = [] { return new httplib::ThreadPool(96); };
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port(host);
    if (impl_->port <= 0) {
      throw TransportError("http server: could not bind to a free port on " +
                           host);
    }
  } else {
    if (!impl_->server.bind_to_port(host, port)) {
      throw TransportError("http server: could not bind " + host + ":" +
                           std::to_string(port));
    }
    impl_->port = port;
  }
  impl_->listener = std::thread([this] {
    impl_->server.listen_after_bind();
  });
  impl_->server.wait_until_ready();
  if (!impl_->server.is_running()) {
    throw TransportError("http server: listener failed to start");
  }
}

ControllerHttpServer::~ControllerHttpServer() {
  stop();
  if (impl_->listener.joinable()) impl_->listener.join();
}

int ControllerHttpServer::port() const { return impl_->port; }

std::string ControllerHttpServer::base_url() const {
  return "http://" + impl_->host + ":" + std::to_string(impl_->port);
}

void ControllerHttpServer::stop() { impl_->server.stop(); }

}  // namespace safeagg
