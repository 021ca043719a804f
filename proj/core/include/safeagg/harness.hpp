#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "safeagg/crypto.hpp"
#include "safeagg/learner.hpp"
#include "safeagg/monitor.hpp"
#include "safeagg/types.hpp"

namespace safeagg {

enum class Protocol { Safe, Saf, Insec };

Protocol protocol_from_name(const std::string& name);
std::string protocol_name(Protocol p);

enum class TransportKind { Loopback, Http };

// Poll settings for instrumented runs: short enough that a full failover
// round fits comfortably in a test, long enough that staggered actors wake
// at distinct instants under the virtual clock.
PollConfig instrumented_poll();

// One benchmark configuration; run_experiment executes `repeats` independent
// rounds of it against a fresh controller each time.
struct Experiment {
  Protocol protocol = Protocol::Safe;
  int nodes = 3;
  int features = 1;
  int groups = 1;
  int repeats = 1;

  // Nodes that die before doing any round work. Group heads may not appear
  // here; initiator death is modelled separately below.
  std::vector<NodeId> fail_nodes;
  bool fail_initiator = false;
  FailStep initiator_fail_step = FailStep::BeforeStart;
  bool traverse_again = false;

  KeyMode key_mode = KeyMode::Hybrid;
  TransportKind transport = TransportKind::Loopback;
  std::int64_t scale = 1ll << 16;
  std::uint64_t seed = 1;
  double hop_delay_s = 0.0;
  int max_attempts = 3;

  // Optional fixed inputs, both indexed by node - 1. Empty values means
  // deterministic per-(seed, repeat, node) generated submissions; empty
  // weights means an unweighted round.
  std::vector<std::vector<double>> values;
  std::vector<double> weights;

  PollConfig poll = instrumented_poll();
  MonitorConfig monitor{0.5, 5.0};

  void validate() const;
};

// Everything measured in one repeat.
struct RepeatResult {
  double wall_time_s = 0.0;
  double key_setup_s = 0.0;
  std::map<std::string, long> counts;  // per-endpoint call counts
  long protocol_messages = 0;          // physical protocol traffic
  long key_exchange_messages = 0;
  long modeled_messages = 0;  // schedule-billed count; see modeled_exact
  bool modeled_exact = false;  // true when the billing rules cover this run
  CryptoOpCounts crypto;
  bool correct = false;
  std::vector<double> average;
  std::vector<double> oracle;
  long contributors = 0;
  int attempts = 1;  // max over learners
  long reposts = 0;  // total redirected posts
  std::map<NodeId, std::string> node_errors;
};

struct RunStats {
  Experiment experiment;
  std::vector<RepeatResult> repeats;
};

// Closed-form per-round message total for the experiment's failure schedule:
//   clean chain            4n
//   g groups               4n + g
//   f pre-start failures   4n + 2f
//   initiator failure      (i+1) * (4n + i*n)   with i = 1
long expected_messages(const Experiment& e);

// All-pairs overlay cost model for the same round: n^2 messages. This is a
// model used for comparison plots, not a measurement of anything run here.
long bon_message_model(int n);

// Contiguous chain partition over node ids 1..nodes; group ids are
// 1..groups and any remainder goes to the leading groups.
std::vector<std::vector<NodeId>> partition_chains(int nodes, int groups);

// The submission node would make in the given repeat.
Submission node_submission(const Experiment& e, int repeat, NodeId node);

// True average the round should produce given who survives the schedule:
// per-group (weighted) mean over surviving members, then the plain mean of
// group means.
std::vector<double> schedule_oracle(const Experiment& e, int repeat);

RunStats run_experiment(const Experiment& e);

// Centralized plaintext baseline: every node posts raw values, the
// controller divides. 2n messages, no failover story.
RunStats run_insec(int nodes, int features, int repeats = 1,
                   std::uint64_t seed = 1);

}  // namespace safeagg
