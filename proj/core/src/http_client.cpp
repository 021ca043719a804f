#include "safeagg/http_client.hpp"

#include <httplib.h>

#include <json.hpp>

#include "safeagg/errors.hpp"

namespace safeagg {

using nlohmann::json;

struct HttpControllerClient::Impl {
  httplib::Client http;
  Clock& clock;
  PollConfig poll;

  Impl(const std::string& base_url, Clock& c, PollConfig p)
      : http(base_url), clock(c), poll(p) {
    http.set_keep_alive(true);
    // Server-side long polls hold a request for up to one aggregation
    // window; read timeouts must outlast the longest of them.
    const auto wire_margin = std::chrono::seconds(15);
    http.set_read_timeout(poll.aggregation_timeout() + wire_margin);
    http.set_write_timeout(std::chrono::seconds(15));
    http.set_connection_timeout(std::chrono::seconds(15));
  }

  json call(const std::string& path, const json& body) {
    httplib::Result res =
        http.Post(path, body.dump(), "application/json");
    if (!res) {
      throw ControllerUnreachable("http " + path + ": " +
                                  httplib::to_string(res.error()));
    }
    json parsed = json::object();
    if (!res->body.empty()) {
      parsed = json::parse(res->body, nullptr, false);
      if (parsed.is_discarded()) {
        throw TransportError("http " + path + ": reply is not JSON");
      }
    }
    if (res->status == 200) return parsed;
    const std::string what =
        parsed.is_object() && parsed.contains("error")
            ? parsed.at("error").get<std::string>()
            : "http status " + std::to_string(res->status);
    switch (res->status) {
      case 404:
        throw UnknownNode(what);
      case 408:
        throw TimeoutError(what);
      case 400:
        throw ProtocolError(what);
      default:
        throw TransportError("http " + path + ": " + what);
    }
  }

  // Re-issues a one-window request until it resolves or the caller's
  // deadline passes; mirrors what the loopback transport gets in a single
  // controller-side poll.
  json call_until(const std::string& path, const json& body,
                  std::optional<TimePoint> deadline,
                  const std::function<bool(const json&)>& resolved) {
    for (;;) {
      json rep = call(path, body);
      if (resolved(rep)) return rep;
      if (!deadline || clock.now() >= *deadline) return rep;
    }
  }
};

HttpControllerClient::HttpControllerClient(std::string base_url, Clock& clock,
                                           PollConfig poll)
    : impl_(std::make_unique<Impl>(base_url, clock, poll)) {}

HttpControllerClient::~HttpControllerClient() = default;

void HttpControllerClient::register_key(NodeId node, const std::string& key) {
  impl_->call("/register_key", {{"node", node}, {"key", key}});
}

std::string HttpControllerClient::get_key(NodeId node) {
  return impl_->call("/get_key", {{"node", node}}).at("key").get<std::string>();
}

void HttpControllerClient::post_aggregate(NodeId from_node, NodeId to_node,
                                          const std::string& aggregate,
                                          GroupId group) {
  impl_->call("/post_aggregate", {{"from_node", from_node},
                                  {"to_node", to_node},
                                  {"aggregate", aggregate},
                                  {"group", group}});
}

CheckReply HttpControllerClient::check_aggregate(
    NodeId node, GroupId group, std::optional<TimePoint> deadline) {
  json rep = impl_->call_until(
      "/check_aggregate", {{"node", node}, {"group", group}}, deadline,
      [](const json& r) { return r.at("status").get<std::string>() != "empty"; });
  CheckReply out;
  out.status = rep.at("status").get<std::string>();
  if (rep.contains("to_node")) out.to_node = rep.at("to_node").get<NodeId>();
  return out;
}

FetchReply HttpControllerClient::get_aggregate(
    NodeId node, GroupId group, std::optional<TimePoint> deadline) {
  json rep = impl_->call_until(
      "/get_aggregate", {{"node", node}, {"group", group}}, deadline,
      [](const json& r) { return r.at("status").get<std::string>() == "ok"; });
  FetchReply out;
  out.status = rep.at("status").get<std::string>();
  out.aggregate = rep.value("aggregate", std::string{});
  out.from_node = rep.value("from_node", 0);
  out.posted = rep.value("posted", 0L);
  return out;
}

void HttpControllerClient::post_average(const std::vector<double>& average,
                                        NodeId node, GroupId group) {
  impl_->call("/post_average",
              {{"average", average}, {"node", node}, {"group", group}});
}

AverageReply HttpControllerClient::get_average(
    std::optional<TimePoint> deadline) {
  json rep = impl_->call_until(
      "/get_average", json::object(), deadline,
      [](const json& r) { return r.at("status").get<std::string>() == "ok"; });
  AverageReply out;
  out.status = rep.at("status").get<std::string>();
  if (rep.contains("average")) {
    out.average = rep.at("average").get<std::vector<double>>();
  }
  return out;
}

bool HttpControllerClient::should_initiate(NodeId node, GroupId group) {
  return impl_->call("/should_initiate", {{"node", node}, {"group", group}})
      .at("init")
      .get<bool>();
}

void HttpControllerClient::post_value(NodeId node,
                                      const std::vector<double>& values,
                                      GroupId group) {
  impl_->call("/post_value",
              {{"node", node}, {"values", values}, {"group", group}});
}

MonitorView HttpControllerClient::monitor_state(GroupId group) {
  json rep = impl_->call("/monitor_state", {{"group", group}});
  MonitorView view;
  for (const json& e : rep.at("entries")) {
    view.entries.push_back({e.at("to").get<NodeId>(), e.at("from").get<NodeId>(),
                            e.at("age").get<double>()});
  }
  view.chain = rep.at("chain").get<std::vector<NodeId>>();
  view.skipped = rep.at("skipped").get<std::vector<NodeId>>();
  if (rep.contains("initiator")) {
    view.initiator = rep.at("initiator").get<NodeId>();
    view.has_initiator = true;
  }
  return view;
}

void HttpControllerClient::direct_repost(GroupId group, NodeId stuck_sender,
                                         NodeId new_target) {
  impl_->call("/direct_repost", {{"group", group},
                                 {"stuck_sender", stuck_sender},
                                 {"new_target", new_target}});
}

void HttpControllerClient::mark_skipped(GroupId group, NodeId node) {
  impl_->call("/mark_skipped", {{"group", group}, {"node", node}});
}

RoundPeek HttpControllerClient::round_status(GroupId group) {
  json rep = impl_->call("/round_status", {{"group", group}});
  RoundPeek peek;
  peek.exists = rep.at("exists").get<bool>();
  if (peek.exists) {
    peek.status = rep.at("status").get<std::string>();
    peek.initiator = rep.at("initiator").get<NodeId>();
    peek.age_s = rep.at("age").get<double>();
  }
  return peek;
}

void HttpControllerClient::post_preneg(NodeId from_node, NodeId to_node,
                                       const std::string& sealed_key) {
  impl_->call("/post_preneg", {{"from_node", from_node},
                               {"to_node", to_node},
                               {"sealed_key", sealed_key}});
}

std::vector<PrenegEntry> HttpControllerClient::get_preneg(
    NodeId node, int expected, std::optional<TimePoint> deadline) {
  json body = {{"node", node}, {"expected", expected}};
  for (;;) {
    try {
      json rep = impl_->call("/get_preneg", body);
      std::vector<PrenegEntry> out;
      for (const json& e : rep.at("entries")) {
        out.push_back({e.at("from").get<NodeId>(),
                       e.at("sealed_key").get<std::string>()});
      }
      return out;
    } catch (const TimeoutError&) {
      if (!deadline || impl_->clock.now() >= *deadline) throw;
    }
  }
}

}  // namespace safeagg
