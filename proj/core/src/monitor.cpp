#include "safeagg/monitor.hpp"

#include <algorithm>

namespace safeagg {

Monitor::Monitor(MonitorConfig cfg, ControllerApi& api, Clock& clock)
    : cfg_(cfg), api_(api), clock_(clock) {}

std::optional<StallReport> Monitor::probe(GroupId group) {
  MonitorView view = api_.monitor_state(group);
  if (view.chain.empty()) return std::nullopt;

  const MonitorEntry* oldest = nullptr;
  for (const MonitorEntry& e : view.entries) {
    if (e.age_s <= cfg_.progress_timeout_s) continue;
    // The entry addressed at the initiator is the round's final hop; if the
    // initiator is dead only an election can help, and rerouting the final
    // aggregate into the chain would double-count whoever received it.
    if (view.has_initiator && e.to == view.initiator) continue;
    if (!oldest || e.age_s > oldest->age_s) oldest = &e;
  }
  if (!oldest) return std::nullopt;

  // Next node after the failed one in chain order, jumping over everything
  // already skipped (consecutive failures resolve one probe at a time).
  auto pos = std::find(view.chain.begin(), view.chain.end(), oldest->to);
  if (pos == view.chain.end()) return std::nullopt;
  const std::size_t n = view.chain.size();
  const std::size_t start = static_cast<std::size_t>(pos - view.chain.begin());
  for (std::size_t step = 1; step < n; ++step) {
    NodeId cand = view.chain[(start + step) % n];
    if (cand == oldest->to) continue;
    if (cand == oldest->from) continue;  // never route a sender to itself
    if (std::find(view.skipped.begin(), view.skipped.end(), cand) !=
        view.skipped.end()) {
      continue;
    }
    return StallReport{group, oldest->from, oldest->to, cand};
  }
  return std::nullopt;  // nobody left to route to
}

void Monitor::remediate(const StallReport& report) {
  api_.mark_skipped(report.group, report.failed_node);
  api_.direct_repost(report.group, report.stuck_sender, report.new_target);
  ++remediations_;
}

void Monitor::run(const std::vector<GroupId>& groups,
                  const std::atomic<bool>& stop) {
  while (!stop.load(std::memory_order_relaxed)) {
    for (GroupId g : groups) {
      if (auto report = probe(g)) remediate(*report);
    }
    clock_.sleep_for(secs(cfg_.probe_interval_s));
  }
}

}  // namespace safeagg
