#pragma once

#include <optional>
#include <string>
#include <vector>

#include "safeagg/controller.hpp"
#include "safeagg/types.hpp"

namespace safeagg {

// Everything a learner or monitor can ask of the controller, independent of
// how the request travels. Blocking operations take an optional absolute
// deadline: in-process transports hand it to the controller so one logical
// wait is one call; networked transports poll in poll_time windows and
// re-issue requests until the deadline.
class ControllerApi {
 public:
  virtual ~ControllerApi() = default;

  virtual void register_key(NodeId node, const std::string& key) = 0;
  virtual std::string get_key(NodeId node) = 0;

  virtual void post_aggregate(NodeId from_node, NodeId to_node,
                              const std::string& aggregate, GroupId group) = 0;
  virtual CheckReply check_aggregate(NodeId node, GroupId group,
                                     std::optional<TimePoint> deadline) = 0;
  virtual FetchReply get_aggregate(NodeId node, GroupId group,
                                   std::optional<TimePoint> deadline) = 0;
  virtual void post_average(const std::vector<double>& average, NodeId node,
                            GroupId group) = 0;
  virtual AverageReply get_average(std::optional<TimePoint> deadline) = 0;
  virtual bool should_initiate(NodeId node, GroupId group) = 0;

  virtual void post_value(NodeId node, const std::vector<double>& values,
                          GroupId group) = 0;

  virtual MonitorView monitor_state(GroupId group) = 0;
  virtual void direct_repost(GroupId group, NodeId stuck_sender,
                             NodeId new_target) = 0;
  virtual void mark_skipped(GroupId group, NodeId node) = 0;

  virtual RoundPeek round_status(GroupId group) = 0;
  virtual void post_preneg(NodeId from_node, NodeId to_node,
                           const std::string& sealed_key) = 0;
  virtual std::vector<PrenegEntry> get_preneg(
      NodeId node, int expected, std::optional<TimePoint> deadline) = 0;
};

// Direct in-process calls into a Controller instance. Deterministic under a
// virtual clock; the default transport for tests and counted runs.
class LoopbackClient : public ControllerApi {
 public:
  explicit LoopbackClient(Controller& controller) : controller_(controller) {}

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

  Controller& controller() { return controller_; }

 private:
  Controller& controller_;
};

}  // namespace safeagg
