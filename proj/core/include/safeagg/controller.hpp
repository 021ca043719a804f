#pragma once

#include <condition_variable>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "safeagg/clock.hpp"
#include "safeagg/types.hpp"

namespace safeagg {

// Replies carry a status string so that long-poll expiry ("empty") is an
// ordinary return, not an error — callers decide whether to re-poll.
struct CheckReply {
  std::string status;  // "empty" | "consumed" | "repost"
  NodeId to_node = 0;  // set when status == "repost"
};

struct FetchReply {
  std::string status;  // "empty" | "ok"
  std::string aggregate;
  NodeId from_node = 0;
  long posted = 0;  // posted − skipped at fetch time: the averaging divisor
};

struct AverageReply {
  std::string status;  // "empty" | "ok"
  std::vector<double> average;
};

// Introspection for the progress monitor: mailbox metadata only — the
// monitor never sees aggregate contents.
struct MonitorEntry {
  NodeId to = 0;
  NodeId from = 0;
  double age_s = 0;
};

struct MonitorView {
  std::vector<MonitorEntry> entries;
  std::vector<NodeId> chain;
  std::vector<NodeId> skipped;
  NodeId initiator = 0;
  bool has_initiator = false;
};

// Plumbing peek at a group's round record, used by the learner failover
// driver to identify a deposed initiator. Never part of the message model.
struct RoundPeek {
  bool exists = false;
  std::string status;  // "started" | "posted"
  NodeId initiator = 0;
  double age_s = 0;
};

struct PrenegEntry {
  NodeId from = 0;
  std::string sealed_key;
};

// Everything the controller journals about aggregate traffic, for
// post-mortems and for the broker-blindness probe: what could an honest but
// curious broker reconstruct from what it stores?
struct JournalEntry {
  std::string kind;  // "post" | "overwrite" | "stale_drop"
  GroupId group = 0;
  NodeId from = 0;
  NodeId to = 0;
  std::string aggregate;
  TimePoint time{0};
};

struct ControllerConfig {
  PollConfig poll;
  int expected_groups = 1;
  // When > 0, get_average serves the centralized-plaintext baseline: it
  // resolves once this many nodes have posted raw values.
  int insec_nodes = 0;
  // Off by default: cross-group mean is the plain mean of group averages.
  // On, groups are weighted by their contributor counts.
  bool size_weighted_group_mean = false;
};

// The message broker. It never aggregates, decrypts, or inspects chain
// traffic; it stores opaque strings in per-node mailboxes, tracks
// consumed/repost state so senders can tell whether their hop landed, and
// arbitrates the initiator role. All state lives behind one mutex; long
// polls re-acquire it per re-check and sleep unlocked in between.
class Controller {
 public:
  Controller(ControllerConfig cfg, Clock& clock);

  // ---- key directory ----
  void register_key(NodeId node, const std::string& key);
  std::string get_key(NodeId node);

  // ---- chain protocol ----
  void post_aggregate(NodeId from_node, NodeId to_node,
                      const std::string& aggregate, GroupId group);
  CheckReply check_aggregate(NodeId node, GroupId group,
                             std::optional<TimePoint> deadline = {});
  FetchReply get_aggregate(NodeId node, GroupId group,
                           std::optional<TimePoint> deadline = {});
  void post_average(const std::vector<double>& average, NodeId node,
                    GroupId group);
  AverageReply get_average(std::optional<TimePoint> deadline = {});
  bool should_initiate(NodeId node, GroupId group);

  // ---- centralized baseline ----
  void post_value(NodeId node, const std::vector<double>& values,
                  GroupId group);

  // ---- monitor surface ----
  MonitorView monitor_state(GroupId group);
  void direct_repost(GroupId group, NodeId stuck_sender, NodeId new_target);
  void mark_skipped(GroupId group, NodeId node);

  // ---- plumbing (never part of the protocol message model) ----
  void configure_chain(GroupId group, std::vector<NodeId> chain);
  RoundPeek round_status(GroupId group);
  void post_preneg(NodeId from_node, NodeId to_node,
                   const std::string& sealed_key);
  std::vector<PrenegEntry> get_preneg(NodeId node, int expected,
                                      std::optional<TimePoint> deadline = {});
  void reset();

  // Per-endpoint invocation counts since construction/reset.
  std::map<std::string, long> counters() const;
  std::vector<JournalEntry> journal() const;

  const ControllerConfig& config() const { return cfg_; }

 private:
  struct MailboxEntry {
    std::string aggregate;
    NodeId from_node = 0;
    TimePoint time{0};
  };
  struct RepostRecord {
    std::string status;
    NodeId to_node = 0;
  };
  struct AverageRecord {
    NodeId initiator = 0;
    TimePoint time{0};
    std::string status;  // "started" | "posted"
    std::vector<double> average;
    long contributors = 0;
  };
  struct GroupState {
    std::map<NodeId, MailboxEntry> mailbox;
    std::map<NodeId, RepostRecord> repost;
    std::optional<AverageRecord> average;
    long posted = 0;
    long skipped = 0;
    std::set<NodeId> skipped_nodes;
    std::vector<NodeId> chain;
    NodeId deposed_initiator = 0;  // last initiator replaced by a takeover
  };

  GroupState& group_locked(GroupId g);
  void init_average_locked(GroupId g, NodeId initiator);
  void count_locked(const std::string& endpoint);
  void require_in_chain_locked(const GroupState& gs, NodeId node,
                               const char* what) const;

  // Runs `check` under the lock immediately and then every yield_time until
  // it yields a value or the window closes; a long poll with a hard edge.
  template <typename F>
  auto poll(F&& check, std::optional<TimePoint> deadline, Duration window)
      -> decltype(check());

  ControllerConfig cfg_;
  Clock& clock_;
  mutable std::mutex mu_;
  std::map<NodeId, std::string> keys_;
  std::map<GroupId, GroupState> groups_;
  std::map<NodeId, std::map<NodeId, std::string>> preneg_;  // to -> from -> key
  std::map<NodeId, std::vector<double>> insec_values_;
  std::map<std::string, long> counters_;
  std::vector<JournalEntry> journal_;
};

// Count-bucket helpers over Controller::counters(). The protocol bucket is
// what the closed-form message models describe; key exchange and plumbing
// are tallied separately.
long protocol_message_count(const std::map<std::string, long>& counters);
long key_exchange_count(const std::map<std::string, long>& counters);

}  // namespace safeagg
