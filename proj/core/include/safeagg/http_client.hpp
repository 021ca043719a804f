#pragma once

#include <memory>
#include <string>

#include "safeagg/transport.hpp"

namespace safeagg {

// ControllerApi over HTTP. Blocking operations are re-issued in poll_time
// windows until the caller's deadline passes, so learner code behaves the
// same over the wire as it does over the loopback transport.
class HttpControllerClient : public ControllerApi {
 public:
  // base_url like "http://127.0.0.1:8181". The clock orders client-side
  // re-poll loops and must be the same one the calling actor sleeps on.
  HttpControllerClient(std::string base_url, Clock& clock, PollConfig poll);
  ~HttpControllerClient() override;

  void register_key(NodeId node, const std::string& key) override;
  std::string get_key(NodeId node) override;
  void post_aggregate(NodeId from_node, NodeId to_node,
                      const std::string& aggregate, GroupId group) override;
  CheckReply check_aggregate(NodeId node, GroupId group,
                             std::optional<TimePoint> deadline) override;
  FetchReply get_aggregate(NodeId node, GroupId group,
                           std::optional<TimePoint> deadline) override;
  void post_average(const std::vector<double>& average, NodeId node,
                    GroupId group) override;
  AverageReply get_average(std::optional<TimePoint> deadline) override;
  bool should_initiate(NodeId node, GroupId group) override;
  void post_value(NodeId node, const std::vector<double>& values,
                  GroupId group) override;
  MonitorView monitor_state(GroupId group) override;
  void direct_repost(GroupId group, NodeId stuck_sender,
                     NodeId new_target) override;
  void mark_skipped(GroupId group, NodeId node) override;
  RoundPeek round_status(GroupId group) override;
  void post_preneg(NodeId from_node, NodeId to_node,
                   const std::string& sealed_key) override;
  std::vector<PrenegEntry> get_preneg(
      NodeId node, int expected, std::optional<TimePoint> deadline) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace safeagg
