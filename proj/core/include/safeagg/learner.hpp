#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "safeagg/clock.hpp"
#include "safeagg/crypto.hpp"
#include "safeagg/ring.hpp"
#include "safeagg/transport.hpp"
#include "safeagg/types.hpp"

namespace safeagg {

// SAF ships plaintext ring vectors between hops; SAFE seals every hop.
enum class WireMode { Safe, Saf };
// Hybrid: per-message content key sealed to the recipient's public key.
// Preneg: pairwise symmetric keys distributed once, before the first round.
enum class KeyMode { Hybrid, Preneg };
enum class Role { Initiator, NonInitiator };

// Failure injection points for tests and failure-sweep benchmarks.
enum class FailStep {
  None,
  BeforeStart,     // never contacts the controller
  AfterFirstPost,  // initiator dies right after its opening post
  AfterGet,        // dies after consuming its incoming aggregate
};

struct ChainConfig {
  NodeId node = 0;
  GroupId group = 1;
  std::vector<NodeId> chain;  // the group's ring, in hop order
  Role role = Role::NonInitiator;
  int features = 1;
  std::uint64_t scale = std::uint64_t{1} << 16;
  WireMode mode = WireMode::Safe;
  KeyMode key_mode = KeyMode::Hybrid;
  PollConfig poll;
  int groups = 1;  // when > 1, members fetch the cross-group mean
  int max_attempts = 3;
  // Compatibility switch: keep a dead initiator in the retry chain (it gets
  // skipped mid-traversal) instead of proactively excluding it. The
  // closed-form failover message counts assume this behavior.
  bool traverse_again = false;
  bool weighted_round = false;  // all members ship (values·w, w)
  FailStep fail_step = FailStep::None;
  Duration start_delay{0};  // staggers actors for deterministic elections
  Duration hop_delay{0};    // simulated local compute per hop

  void validate() const;
};

struct Submission {
  std::vector<double> values;
  std::optional<double> weight;  // sample count; absent = unweighted
};

Submission make_submission(std::vector<double> values,
                           std::optional<double> weight = {});

// Splits an averaged (values·w ++ [w]) vector back into the true weighted
// mean: element-wise (mean of weighted sums) / (mean of weights).
std::vector<double> resolve_weighted(const std::vector<double>& avg_vector);

struct RoundOutcome {
  std::vector<double> average;
  long contributors = 0;  // known to the finalizing initiator; 0 otherwise
  int attempts = 1;       // 1 + initiator failovers observed by this node
  int reposts = 0;        // times this node re-sent around a dead target
  bool completed = false;
  bool was_initiator = false;
};

// The per-hop transform pair chosen from (mode, key_mode).
struct CipherSuite {
  std::function<std::string(const RingVector&, NodeId to)> seal_fn;
  std::function<RingVector(const std::string&, NodeId from)> open_fn;
};

// Deterministic, seeded test/benchmark inputs: uniform multiples of 1/scale
// in [-32, 32], so encode/decode is exact and protocol results can be
// compared to a plaintext oracle at full precision.
std::vector<double> gen_values(std::uint64_t seed, int features,
                               std::uint64_t scale = std::uint64_t{1} << 16);

// One chain participant. Drives its role's state machine against the
// controller: initiators mask and open the round, everyone else folds its
// vector in and passes the aggregate along; the failover driver re-elects
// on timeout. Sequential; runs as a thread in the harness or behind the
// CLI as a process.
class LearnerActor {
 public:
  LearnerActor(ChainConfig cfg, ControllerApi& api, Clock& clock);

  // Generates this node's keypair and registers the public half (SAFE).
  void setup_keys();

  // Pre-negotiated mode: create one symmetric key per peer and drop each
  // off sealed to that peer (publish), then collect the keys peers left for
  // us. After both halves, rounds perform no public-key operations at all.
  // Split so an orchestrator can publish for everyone before anyone blocks
  // collecting; exchange_preneg() does both for standalone actors.
  void publish_preneg();
  void collect_preneg();
  void exchange_preneg();

  // Single-attempt state machines.
  RoundOutcome run_initiator(const Submission& sub);
  RoundOutcome run_non_initiator(const Submission& sub);

  // The retrying wrapper: runs the configured role, and on a round timeout
  // asks the controller whether to take over as initiator before retrying.
  RoundOutcome failover_driver(const Submission& sub);

  CipherSuite select_cipher();

  const KeyPair& keypair() const { return self_kp_; }

 private:
  struct InjectedDeath {};  // unwinds the actor when fail_step fires

  NodeId successor(NodeId of) const;
  TimePoint attempt_budget_end();
  PublicKey peer_key(NodeId node);
  RingVector submission_vector(const Submission& sub);
  void watch_consumption(const RingVector& raw, NodeId target,
                         TimePoint budget_end);
  FetchReply fetch_aggregate_blocking(TimePoint budget_end);
  std::vector<double> fetch_average_blocking(TimePoint budget_end);

  ChainConfig cfg_;
  ControllerApi& api_;
  Clock& clock_;
  FixedPointCodec codec_;
  CipherSuite cipher_;
  KeyPair self_kp_{};
  bool have_keypair_ = false;
  std::map<NodeId, PublicKey> peer_pks_;
  PrenegTable preneg_;
  std::set<NodeId> excluded_;  // nodes this actor routes around
  int reposts_ = 0;
};

}  // namespace safeagg
