#pragma once

#include <atomic>
#include <optional>
#include <vector>

#include "safeagg/clock.hpp"
#include "safeagg/transport.hpp"
#include "safeagg/types.hpp"

namespace safeagg {

struct MonitorConfig {
  double probe_interval_s = 1.0;
  // Maximum age of an unconsumed mailbox entry before its target is
  // presumed dead. Must sit between the probe interval and the controller's
  // aggregation_timeout: shorter than the former it cannot be observed,
  // longer than the latter the initiator-election race fires first.
  double progress_timeout_s = 5.0;

  void validate(double aggregation_timeout_s) const {
    if (probe_interval_s <= 0 || progress_timeout_s <= 0) {
      throw ProtocolError("monitor config: intervals must be positive");
    }
    if (probe_interval_s >= progress_timeout_s) {
      throw ProtocolError(
          "monitor config: probe_interval must be below progress_timeout");
    }
    if (progress_timeout_s >= aggregation_timeout_s) {
      throw ProtocolError(
          "monitor config: progress_timeout must be below "
          "aggregation_timeout or the election wins every race");
    }
  }
};

struct StallReport {
  GroupId group = 0;
  NodeId stuck_sender = 0;
  NodeId failed_node = 0;
  NodeId new_target = 0;
};

// External watchdog for stalled chains. Looks only at mailbox metadata
// (sender, target, age) — never at aggregate contents — and when a target
// has sat on an entry for too long, routes the sender around it. Dead
// initiators are left alone: replacing them is the election's job, and a
// repost directed at the chain's endpoint would corrupt the round.
class Monitor {
 public:
  Monitor(MonitorConfig cfg, ControllerApi& api, Clock& clock);

  // Oldest over-age entry (if any) turned into a remediation plan.
  std::optional<StallReport> probe(GroupId group);

  // mark_skipped first, then direct_repost: once the sender can repost, the
  // skip must already be counted or the divisor could miss it.
  void remediate(const StallReport& report);

  // Probe/remediate every probe_interval until *stop. Runs all groups.
  void run(const std::vector<GroupId>& groups, const std::atomic<bool>& stop);

  long remediations() const { return remediations_; }

 private:
  MonitorConfig cfg_;
  ControllerApi& api_;
  Clock& clock_;
  long remediations_ = 0;
};

}  // namespace safeagg
