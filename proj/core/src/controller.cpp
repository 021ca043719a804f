#include "safeagg/controller.hpp"

#include <algorithm>

#include "safeagg/errors.hpp"

namespace safeagg {

Controller::Controller(ControllerConfig cfg, Clock& clock)
    : cfg_(cfg), clock_(clock) {
  cfg_.poll.validate();
  if (cfg_.expected_groups < 1) {
    throw ProtocolError("controller: expected_groups must be >= 1");
  }
}

Controller::GroupState& Controller::group_locked(GroupId g) {
  return groups_[g];
}

void Controller::count_locked(const std::string& endpoint) {
  ++counters_[endpoint];
}

void Controller::require_in_chain_locked(const GroupState& gs, NodeId node,
                                         const char* what) const {
  if (gs.chain.empty()) return;  // chain not configured: id checks disabled
  if (std::find(gs.chain.begin(), gs.chain.end(), node) == gs.chain.end()) {
    throw UnknownNode(std::string(what) + ": node " + std::to_string(node) +
                      " is not in this group's chain");
  }
}

// Fresh aggregation attempt: the caller becomes the recorded initiator and
// every per-round structure is wiped, so stale mailbox entries or repost
// directives from an abandoned attempt cannot leak into the new one.
void Controller::init_average_locked(GroupId g, NodeId initiator) {
  GroupState& gs = groups_[g];
  AverageRecord rec;
  rec.initiator = initiator;
  rec.time = clock_.now();
  rec.status = "started";
  gs.average = rec;
  gs.posted = 0;
  gs.skipped = 0;
  gs.skipped_nodes.clear();
  gs.mailbox.clear();
  gs.repost.clear();
}

template <typename F>
auto Controller::poll(F&& check, std::optional<TimePoint> deadline,
                      Duration window) -> decltype(check()) {
  const TimePoint give_up = deadline ? *deadline : clock_.now() + window;
  {
    std::lock_guard lk(mu_);
    if (auto r = check()) return r;
  }
  while (clock_.now() < give_up) {
    clock_.sleep_for(cfg_.poll.yield_time());
    // A result landing as the window closes is reported in the caller's
    // next call, not here: a caller whose budget is spent must see the
    // timeout and re-enter with a fresh budget rather than start a step it
    // has no time to finish.
    if (clock_.now() >= give_up) break;
    std::lock_guard lk(mu_);
    if (auto r = check()) return r;
  }
  return {};
}

void Controller::register_key(NodeId node, const std::string& key) {
  std::lock_guard lk(mu_);
  count_locked("register_key");
  keys_[node] = key;
}

std::string Controller::get_key(NodeId node) {
  std::lock_guard lk(mu_);
  count_locked("get_key");
  auto it = keys_.find(node);
  if (it == keys_.end()) {
    throw UnknownNode("get_key: node " + std::to_string(node) +
                      " never registered a key");
  }
  return it->second;
}

void Controller::post_aggregate(NodeId from_node, NodeId to_node,
                                const std::string& aggregate, GroupId group) {
  std::lock_guard lk(mu_);
  count_locked("post_aggregate");
  if (from_node == to_node) {
    throw SelfSend("post_aggregate: node " + std::to_string(from_node) +
                   " addressed itself");
  }
  GroupState& gs = group_locked(group);
  require_in_chain_locked(gs, from_node, "post_aggregate");
  require_in_chain_locked(gs, to_node, "post_aggregate");

  // A deposed initiator posting after its takeover is a ghost of the
  // abandoned attempt: journal it and drop, never mixing epochs.
  if (gs.average && gs.deposed_initiator == from_node &&
      gs.average->initiator != from_node) {
    journal_.push_back({"stale_drop", group, from_node, to_node, aggregate,
                        clock_.now()});
    return;
  }

  if (!gs.average) {
    init_average_locked(group, from_node);
  } else if (gs.average->initiator == from_node &&
             gs.average->status == "posted") {
    // The recorded initiator opening its next round after a completed one.
    init_average_locked(group, from_node);
  }

  if (gs.mailbox.count(to_node)) {
    journal_.push_back({"overwrite", group, from_node, to_node,
                        gs.mailbox[to_node].aggregate, clock_.now()});
  }
  gs.mailbox[to_node] = {aggregate, from_node, clock_.now()};
  ++gs.posted;
  gs.repost[from_node] = {"consumed", 0};
  gs.repost[to_node] = {"empty", 0};
  journal_.push_back({"post", group, from_node, to_node, aggregate,
                      clock_.now()});
}

CheckReply Controller::check_aggregate(NodeId node, GroupId group,
                                       std::optional<TimePoint> deadline) {
  {
    std::lock_guard lk(mu_);
    count_locked("check_aggregate");
  }
  auto got = poll(
      [&]() -> std::optional<CheckReply> {
        GroupState& gs = group_locked(group);
        auto it = gs.repost.find(node);
        if (it == gs.repost.end() || it->second.status == "empty") {
          return std::nullopt;
        }
        CheckReply rep{it->second.status, it->second.to_node};
        gs.repost.erase(it);
        return rep;
      },
      deadline, cfg_.poll.poll_time());
  return got ? *got : CheckReply{"empty", 0};
}

FetchReply Controller::get_aggregate(NodeId node, GroupId group,
                                     std::optional<TimePoint> deadline) {
  {
    std::lock_guard lk(mu_);
    count_locked("get_aggregate");
  }
  auto got = poll(
      [&]() -> std::optional<FetchReply> {
        GroupState& gs = group_locked(group);
        auto it = gs.mailbox.find(node);
        if (it == gs.mailbox.end()) return std::nullopt;
        FetchReply rep;
        rep.status = "ok";
        rep.aggregate = it->second.aggregate;
        rep.from_node = it->second.from_node;
        rep.posted = gs.posted - gs.skipped;
        gs.mailbox.erase(it);
        return rep;
      },
      deadline, cfg_.poll.poll_time());
  return got ? *got : FetchReply{"empty", "", 0, 0};
}

void Controller::post_average(const std::vector<double>& average, NodeId node,
                              GroupId group) {
  std::lock_guard lk(mu_);
  count_locked("post_average");
  GroupState& gs = group_locked(group);
  if (!gs.average || gs.average->initiator != node) {
    throw NotInitiator("post_average: node " + std::to_string(node) +
                       " is not group " + std::to_string(group) +
                       "'s current initiator");
  }
  if (gs.average->status == "posted") {
    throw StaleEpoch("post_average: group " + std::to_string(group) +
                     " already has a delivered average this round");
  }
  gs.average->average = average;
  gs.average->status = "posted";
  gs.average->contributors = gs.posted - gs.skipped;
  // Acknowledges the chain's last node, which is watching the initiator's
  // repost key for consumption of the final aggregate.
  gs.repost[node] = {"consumed", 0};
}

AverageReply Controller::get_average(std::optional<TimePoint> deadline) {
  {
    std::lock_guard lk(mu_);
    count_locked("get_average");
  }
  auto got = poll(
      [&]() -> std::optional<AverageReply> {
        if (cfg_.insec_nodes > 0) {
          if (static_cast<int>(insec_values_.size()) < cfg_.insec_nodes) {
            return std::nullopt;
          }
          const std::size_t dim = insec_values_.begin()->second.size();
          std::vector<double> mean(dim, 0.0);
          for (const auto& [node, v] : insec_values_) {
            if (v.size() != dim) {
              throw ProtocolError("post_value vectors disagree on length");
            }
            for (std::size_t i = 0; i < dim; ++i) mean[i] += v[i];
          }
          for (double& m : mean) m /= static_cast<double>(insec_values_.size());
          return AverageReply{"ok", std::move(mean)};
        }
        // Chain mode: every expected group must have delivered its average.
        std::vector<const AverageRecord*> recs;
        for (GroupId g = 1; g <= cfg_.expected_groups; ++g) {
          auto it = groups_.find(g);
          if (it == groups_.end() || !it->second.average ||
              it->second.average->status != "posted") {
            return std::nullopt;
          }
          recs.push_back(&*it->second.average);
        }
        const std::size_t dim = recs.front()->average.size();
        std::vector<double> mean(dim, 0.0);
        double total_weight = 0.0;
        for (const AverageRecord* rec : recs) {
          if (rec->average.size() != dim) {
            throw ProtocolError("group averages disagree on length");
          }
          const double w = cfg_.size_weighted_group_mean
                               ? static_cast<double>(rec->contributors)
                               : 1.0;
          for (std::size_t i = 0; i < dim; ++i) mean[i] += w * rec->average[i];
          total_weight += w;
        }
        for (double& m : mean) m /= total_weight;
        return AverageReply{"ok", std::move(mean)};
      },
      deadline, cfg_.poll.aggregation_timeout());
  return got ? *got : AverageReply{"empty", {}};
}

bool Controller::should_initiate(NodeId node, GroupId group) {
  std::lock_guard lk(mu_);
  count_locked("should_initiate");
  GroupState& gs = group_locked(group);
  require_in_chain_locked(gs, node, "should_initiate");
  if (!gs.average) {
    init_average_locked(group, node);
    return true;
  }
  if (clock_.now() - gs.average->time > cfg_.poll.aggregation_timeout()) {
    if (gs.average->initiator != node) {
      gs.deposed_initiator = gs.average->initiator;
    }
    init_average_locked(group, node);
    return true;
  }
  return false;
}

void Controller::post_value(NodeId node, const std::vector<double>& values,
                            GroupId group) {
  (void)group;
  std::lock_guard lk(mu_);
  count_locked("post_value");
  insec_values_[node] = values;
}

MonitorView Controller::monitor_state(GroupId group) {
  std::lock_guard lk(mu_);
  count_locked("monitor_state");
  GroupState& gs = group_locked(group);
  MonitorView view;
  const TimePoint now = clock_.now();
  for (const auto& [to, entry] : gs.mailbox) {
    view.entries.push_back(
        {to, entry.from_node, to_secs(now - entry.time)});
  }
  view.chain = gs.chain;
  view.skipped.assign(gs.skipped_nodes.begin(), gs.skipped_nodes.end());
  if (gs.average) {
    view.initiator = gs.average->initiator;
    view.has_initiator = true;
  }
  return view;
}

void Controller::direct_repost(GroupId group, NodeId stuck_sender,
                               NodeId new_target) {
  std::lock_guard lk(mu_);
  count_locked("direct_repost");
  GroupState& gs = group_locked(group);
  require_in_chain_locked(gs, stuck_sender, "direct_repost");
  require_in_chain_locked(gs, new_target, "direct_repost");
  // The directive is addressed at the stuck sender, but the repost key the
  // sender watches is its dead target's — find it via the stale entry.
  NodeId failed = 0;
  bool found = false;
  for (const auto& [to, entry] : gs.mailbox) {
    if (entry.from_node == stuck_sender) {
      failed = to;
      found = true;
      break;
    }
  }
  if (!found) return;  // already cleared: redundant remediation is a no-op
  gs.repost[failed] = {"repost", new_target};
  gs.mailbox.erase(failed);
}

void Controller::mark_skipped(GroupId group, NodeId node) {
  std::lock_guard lk(mu_);
  count_locked("mark_skipped");
  GroupState& gs = group_locked(group);
  require_in_chain_locked(gs, node, "mark_skipped");
  if (gs.skipped_nodes.insert(node).second) ++gs.skipped;
}

void Controller::configure_chain(GroupId group, std::vector<NodeId> chain) {
  std::lock_guard lk(mu_);
  count_locked("configure");
  if (chain.empty()) throw ProtocolError("configure: empty chain");
  std::set<NodeId> uniq(chain.begin(), chain.end());
  if (uniq.size() != chain.size()) {
    throw ProtocolError("configure: duplicate node id in chain");
  }
  group_locked(group).chain = std::move(chain);
}

RoundPeek Controller::round_status(GroupId group) {
  std::lock_guard lk(mu_);
  count_locked("round_status");
  GroupState& gs = group_locked(group);
  RoundPeek peek;
  if (gs.average) {
    peek.exists = true;
    peek.status = gs.average->status;
    peek.initiator = gs.average->initiator;
    peek.age_s = to_secs(clock_.now() - gs.average->time);
  }
  return peek;
}

void Controller::post_preneg(NodeId from_node, NodeId to_node,
                             const std::string& sealed_key) {
  std::lock_guard lk(mu_);
  count_locked("post_preneg");
  preneg_[to_node][from_node] = sealed_key;
}

std::vector<PrenegEntry> Controller::get_preneg(
    NodeId node, int expected, std::optional<TimePoint> deadline) {
  {
    std::lock_guard lk(mu_);
    count_locked("get_preneg");
  }
  auto got = poll(
      [&]() -> std::optional<std::vector<PrenegEntry>> {
        auto it = preneg_.find(node);
        if (it == preneg_.end() ||
            static_cast<int>(it->second.size()) < expected) {
          return std::nullopt;
        }
        std::vector<PrenegEntry> out;
        for (const auto& [from, key] : it->second) out.push_back({from, key});
        return out;
      },
      deadline, cfg_.poll.poll_time());
  if (!got) {
    throw TimeoutError("get_preneg: peers did not deliver " +
                       std::to_string(expected) + " keys in time");
  }
  return *got;
}

void Controller::reset() {
  std::lock_guard lk(mu_);
  count_locked("reset");
  groups_.clear();
  insec_values_.clear();
  journal_.clear();
  counters_.clear();
  // Key material (directory + pre-negotiated drops) survives: registration
  // happens once, rounds repeat.
}

std::map<std::string, long> Controller::counters() const {
  std::lock_guard lk(mu_);
  return counters_;
}

std::vector<JournalEntry> Controller::journal() const {
  std::lock_guard lk(mu_);
  return journal_;
}

namespace {
long sum_counters(const std::map<std::string, long>& counters,
                  std::initializer_list<const char*> names) {
  long total = 0;
  for (const char* name : names) {
    auto it = counters.find(name);
    if (it != counters.end()) total += it->second;
  }
  return total;
}
}  // namespace

long protocol_message_count(const std::map<std::string, long>& counters) {
  return sum_counters(counters,
                      {"post_aggregate", "check_aggregate", "get_aggregate",
                       "post_average", "get_average", "should_initiate",
                       "post_value"});
}

long key_exchange_count(const std::map<std::string, long>& counters) {
  return sum_counters(counters,
                      {"register_key", "get_key", "post_preneg", "get_preneg"});
}

}  // namespace safeagg
