#include "safeagg/transport.hpp"

namespace safeagg {

void LoopbackClient::register_key(NodeId node, const std::string& key) {
  controller_.register_key(node, key);
}

std::string LoopbackClient::get_key(NodeId node) {
  return controller_.get_key(node);
}

void LoopbackClient::post_aggregate(NodeId from_node, NodeId to_node,
                                    const std::string& aggregate,
                                    GroupId group) {
  controller_.post_aggregate(from_node, to_node, aggregate, group);
}

CheckReply LoopbackClient::check_aggregate(NodeId node, GroupId group,
                                           std::optional<TimePoint> deadline) {
  return controller_.check_aggregate(node, group, deadline);
}

FetchReply LoopbackClient::get_aggregate(NodeId node, GroupId group,
                                         std::optional<TimePoint> deadline) {
  return controller_.get_aggregate(node, group, deadline);
}

void LoopbackClient::post_average(const std::vector<double>& average,
                                  NodeId node, GroupId group) {
  controller_.post_average(average, node, group);
}

AverageReply LoopbackClient::get_average(std::optional<TimePoint> deadline) {
  return controller_.get_average(deadline);
}

bool LoopbackClient::should_initiate(NodeId node, GroupId group) {
  return controller_.should_initiate(node, group);
}

void LoopbackClient::post_value(NodeId node, const std::vector<double>& values,
                                GroupId group) {
  controller_.post_value(node, values, group);
}

MonitorView LoopbackClient::monitor_state(GroupId group) {
  return controller_.monitor_state(group);
}

void LoopbackClient::direct_repost(GroupId group, NodeId stuck_sender,
                                   NodeId new_target) {
  controller_.direct_repost(group, stuck_sender, new_target);
}

void LoopbackClient::mark_skipped(GroupId group, NodeId node) {
  controller_.mark_skipped(group, node);
}

RoundPeek LoopbackClient::round_status(GroupId group) {
  return controller_.round_status(group);
}

void LoopbackClient::post_preneg(NodeId from_node, NodeId to_node,
                                 const std::string& sealed_key) {
  controller_.post_preneg(from_node, to_node, sealed_key);
}

std::vector<PrenegEntry> LoopbackClient::get_preneg(
    NodeId node, int expected, std::optional<TimePoint> deadline) {
  return controller_.get_preneg(node, expected, deadline);
}

}  // namespace safeagg
