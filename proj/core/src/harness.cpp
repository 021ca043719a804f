#include "safeagg/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <set>
#include <thread>

#include "safeagg/controller.hpp"
#include "safeagg/errors.hpp"
#include "safeagg/http_client.hpp"
#include "safeagg/http_server.hpp"
#include "safeagg/transport.hpp"

namespace safeagg {

Protocol protocol_from_name(const std::string& name) {
  if (name == "safe" || name == "SAFE") return Protocol::Safe;
  if (name == "saf" || name == "SAF") return Protocol::Saf;
  if (name == "insec" || name == "INSEC") return Protocol::Insec;
  throw ParseError("unknown protocol name: " + name);
}

std::string protocol_name(Protocol p) {
  switch (p) {
    case Protocol::Safe:
      return "SAFE";
    case Protocol::Saf:
      return "SAF";
    case Protocol::Insec:
      return "INSEC";
  }
  throw ParseError("unknown protocol enum value");
}

PollConfig instrumented_poll() {
  PollConfig poll;
  poll.poll_time_s = 10.0;
  poll.yield_time_s = 0.1;
  poll.aggregation_timeout_s = 30.0;
  return poll;
}

void Experiment::validate() const {
  if (nodes < 3) throw ProtocolError("experiment: need at least 3 nodes");
  if (features < 1) throw ProtocolError("experiment: features must be >= 1");
  if (repeats < 1) throw ProtocolError("experiment: repeats must be >= 1");
  if (groups < 1) throw ProtocolError("experiment: groups must be >= 1");
  if (nodes / groups < 3) {
    throw ProtocolError("experiment: every group needs at least 3 members");
  }
  poll.validate();
  if (protocol == Protocol::Insec) {
    if (groups != 1 || fail_initiator || !fail_nodes.empty()) {
      throw ProtocolError(
          "experiment: the centralized baseline supports clean single-group "
          "runs only");
    }
  } else {
    monitor.validate(poll.aggregation_timeout_s);
  }
  const auto chains = partition_chains(nodes, groups);
  std::set<NodeId> heads;
  for (const auto& chain : chains) heads.insert(chain.front());
  std::set<NodeId> seen;
  for (NodeId f : fail_nodes) {
    if (f < 1 || f > nodes) {
      throw ProtocolError("experiment: fail node out of range: " +
                          std::to_string(f));
    }
    if (!seen.insert(f).second) {
      throw ProtocolError("experiment: duplicate fail node " +
                          std::to_string(f));
    }
    if (heads.count(f)) {
      throw ProtocolError(
          "experiment: group heads die via fail_initiator, not fail_nodes");
    }
  }
  if (fail_initiator && !fail_nodes.empty()) {
    throw ProtocolError(
        "experiment: combined initiator and member failures are out of scope "
        "for the message accounting");
  }
  if (fail_initiator && groups > 1) {
    throw ProtocolError(
        "experiment: initiator failure is modelled for single-group runs");
  }
  if (!values.empty() && static_cast<int>(values.size()) != nodes) {
    throw ProtocolError("experiment: fixed values must cover every node");
  }
  for (const auto& v : values) {
    if (static_cast<int>(v.size()) != features) {
      throw ProtocolError(
          "experiment: fixed values must have `features` entries per node");
    }
  }
  if (!weights.empty()) {
    if (static_cast<int>(weights.size()) != nodes) {
      throw ProtocolError("experiment: weights must cover every node");
    }
    for (double w : weights) {
      if (!(w > 0.0)) throw NonPositiveWeight("experiment: weights must be > 0");
    }
    if (protocol == Protocol::Insec) {
      throw ProtocolError("experiment: the centralized baseline is unweighted");
    }
  }
  if (hop_delay_s < 0.0) throw ProtocolError("experiment: negative hop delay");
  if (max_attempts < 1) throw ProtocolError("experiment: max_attempts >= 1");
}

long expected_messages(const Experiment& e) {
  const long n = e.nodes;
  if (e.protocol == Protocol::Insec) return 2 * n;
  const long f = static_cast<long>(e.fail_nodes.size());
  const long i = e.fail_initiator ? 1 : 0;
  const long group_term = e.groups > 1 ? e.groups : 0;
  return (i + 1) * (4 * n + 2 * f + i * n + group_term);
}

long bon_message_model(int n) {
  return static_cast<long>(n) * static_cast<long>(n);
}

std::vector<std::vector<NodeId>> partition_chains(int nodes, int groups) {
  if (groups < 1 || nodes < groups) {
    throw ProtocolError("partition_chains: impossible split");
  }
  std::vector<std::vector<NodeId>> chains;
  const int base = nodes / groups;
  int remainder = nodes % groups;
  NodeId next = 1;
  for (int g = 0; g < groups; ++g) {
    int size = base + (remainder > 0 ? 1 : 0);
    if (remainder > 0) --remainder;
    std::vector<NodeId> chain;
    chain.reserve(static_cast<std::size_t>(size));
    for (int k = 0; k < size; ++k) chain.push_back(next++);
    chains.push_back(std::move(chain));
  }
  return chains;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, int repeat, NodeId node) {
  std::uint64_t x = seed;
  x ^= static_cast<std::uint64_t>(repeat) * 0x9E3779B97F4A7C15ULL;
  x += static_cast<std::uint64_t>(node) * 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 31;
  return x;
}

std::set<NodeId> dead_set(const Experiment& e) {
  std::set<NodeId> dead(e.fail_nodes.begin(), e.fail_nodes.end());
  if (e.fail_initiator) {
    dead.insert(partition_chains(e.nodes, e.groups).front().front());
  }
  return dead;
}

constexpr double kMatchTol = 1e-9;

bool vectors_match(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::fabs(a[i] - b[i]) > kMatchTol) return false;
  }
  return true;
}

}  // namespace

Submission node_submission(const Experiment& e, int repeat, NodeId node) {
  Submission sub;
  if (!e.values.empty()) {
    sub.values = e.values[static_cast<std::size_t>(node - 1)];
  } else {
    sub.values = gen_values(mix_seed(e.seed, repeat, node), e.features,
                            static_cast<std::uint64_t>(e.scale));
  }
  if (!e.weights.empty()) {
    sub.weight = e.weights[static_cast<std::size_t>(node - 1)];
  }
  return sub;
}

std::vector<double> schedule_oracle(const Experiment& e, int repeat) {
  const auto dead = dead_set(e);
  const auto chains = partition_chains(e.nodes, e.groups);
  std::vector<double> global(static_cast<std::size_t>(e.features), 0.0);
  for (const auto& chain : chains) {
    std::vector<double> num(static_cast<std::size_t>(e.features), 0.0);
    double denom = 0.0;
    for (NodeId node : chain) {
      if (dead.count(node)) continue;
      const Submission sub = node_submission(e, repeat, node);
      const double w = sub.weight.value_or(1.0);
      for (int k = 0; k < e.features; ++k) {
        num[static_cast<std::size_t>(k)] +=
            w * sub.values[static_cast<std::size_t>(k)];
      }
      denom += w;
    }
    if (denom == 0.0) {
      throw ProtocolError("schedule_oracle: a group has no survivors");
    }
    for (int k = 0; k < e.features; ++k) {
      global[static_cast<std::size_t>(k)] +=
          num[static_cast<std::size_t>(k)] / denom;
    }
  }
  for (double& v : global) v /= static_cast<double>(chains.size());
  return global;
}

namespace {

// Clock + controller + transport for one repeat. Loopback runs on a virtual
// clock (deterministic, counted); HTTP runs on the system clock.
struct Deployment {
  std::unique_ptr<VirtualClock> vclock;
  std::unique_ptr<SystemClock> sclock;
  Clock* clock = nullptr;
  std::unique_ptr<Controller> controller;
  std::unique_ptr<LoopbackClient> loop;
  std::unique_ptr<ControllerHttpServer> server;
  std::vector<std::unique_ptr<HttpControllerClient>> http_clients;

  ControllerApi& client(std::size_t actor_index) {
    if (loop) return *loop;
    return *http_clients[actor_index];
  }
};

Deployment deploy(const Experiment& e, std::size_t actor_count) {
  Deployment d;
  ControllerConfig cfg;
  cfg.poll = e.poll;
  cfg.expected_groups = e.groups;
  cfg.insec_nodes = e.protocol == Protocol::Insec ? e.nodes : 0;
  if (e.transport == TransportKind::Loopback) {
    d.vclock = std::make_unique<VirtualClock>();
    d.clock = d.vclock.get();
    d.controller = std::make_unique<Controller>(cfg, *d.clock);
    d.loop = std::make_unique<LoopbackClient>(*d.controller);
  } else {
    d.sclock = std::make_unique<SystemClock>();
    d.clock = d.sclock.get();
    d.controller = std::make_unique<Controller>(cfg, *d.clock);
    d.server = std::make_unique<ControllerHttpServer>(*d.controller,
                                                      "127.0.0.1", 0);
    for (std::size_t i = 0; i < actor_count; ++i) {
      d.http_clients.push_back(std::make_unique<HttpControllerClient>(
          d.server->base_url(), *d.clock, e.poll));
    }
  }
  return d;
}

struct ActorResult {
  std::optional<RoundOutcome> outcome;
  std::string error;
  TimePoint finished{0};
};

long billed_messages(const Experiment& e, const RepeatResult& r,
                     bool* exact_out) {
  const long n = e.nodes;
  const long f = static_cast<long>(e.fail_nodes.size());
  const long physical = r.protocol_messages;
  if (e.protocol == Protocol::Insec) {
    *exact_out = true;
    return physical;
  }
  if (e.fail_initiator && e.initiator_fail_step != FailStep::BeforeStart) {
    // Mid-round deaths recover correctly but are not billed by the
    // closed-form schedule, so the physical count stands unreconciled.
    *exact_out = false;
    return physical;
  }
  *exact_out = true;
  // Nodes that died before starting are billed their nominal 4 messages.
  long modeled = physical + 4 * f;
  long billed_reposts = f;
  if (e.fail_initiator) {
    const long i = 1;
    const long attempts = i + 1;
    const long survivors = n - 1 - f;
    const long si = r.counts.count("should_initiate")
                        ? r.counts.at("should_initiate")
                        : 0;
    // The dead initiator is billed 4 messages per attempt but performed none.
    modeled += 4 * attempts;
    // Survivors' aborted first attempt: billed 4, performed only the one
    // blocking fetch that timed out.
    modeled += 3 * survivors;
    // Election messages are billed at i*n per attempt; only the survivors
    // that actually re-entered asked, once each.
    modeled += i * attempts * n - si;
  }
  // Redirected posts beyond the billed failures (e.g. the wrap-around hop
  // past a dead initiator) cost a real repost pair the schedule doesn't bill.
  modeled -= 2 * (r.reposts - billed_reposts);
  return modeled;
}

void finish_accounting(const Experiment& e, int repeat,
                       const std::map<std::string, long>& setup_counts,
                       const std::map<std::string, long>& final_counts,
                       const std::vector<ActorResult>& results,
                       RepeatResult& r) {
  for (const auto& [k, v] : final_counts) {
    const auto it = setup_counts.find(k);
    const long delta = v - (it == setup_counts.end() ? 0 : it->second);
    if (delta != 0) r.counts[k] = delta;
  }
  r.protocol_messages = protocol_message_count(r.counts);
  r.key_exchange_messages = key_exchange_count(final_counts);
  r.crypto = crypto_op_counts();

  const auto dead = dead_set(e);
  const auto chains = partition_chains(e.nodes, e.groups);
  std::map<NodeId, GroupId> group_of;
  for (std::size_t g = 0; g < chains.size(); ++g) {
    for (NodeId node : chains[g]) {
      group_of[node] = static_cast<GroupId>(g + 1);
    }
  }

  bool consistent = true;
  std::vector<double> agreed;
  long contributors_total = 0;
  for (NodeId node = 1; node <= e.nodes; ++node) {
    const auto& res = results[static_cast<std::size_t>(node - 1)];
    if (!res.error.empty()) {
      r.node_errors[node] = res.error;
      consistent = false;
      continue;
    }
    if (!res.outcome) continue;
    const RoundOutcome& out = *res.outcome;
    r.attempts = std::max(r.attempts, out.attempts);
    r.reposts += out.reposts;
    if (dead.count(node)) {
      // A scheduled death must not have produced a completed round.
      if (out.completed) consistent = false;
      continue;
    }
    if (e.protocol != Protocol::Insec && !out.completed) {
      consistent = false;
      continue;
    }
    if (out.was_initiator && out.completed) {
      contributors_total += out.contributors;
    }
    if (out.completed) {
      if (agreed.empty()) {
        agreed = out.average;
      } else if (!vectors_match(agreed, out.average)) {
        consistent = false;
      }
    }
  }
  r.average = agreed;
  r.contributors = contributors_total;
  r.oracle = schedule_oracle(e, repeat);

  const long expect_contrib =
      e.protocol == Protocol::Insec
          ? e.nodes
          : static_cast<long>(e.nodes) - static_cast<long>(dead.size());
  if (e.protocol == Protocol::Insec) {
    // No initiator reports a divisor; the baseline divides by node count.
    contributors_total = agreed.empty() ? 0 : expect_contrib;
    r.contributors = contributors_total;
  }
  r.correct = consistent && !agreed.empty() &&
              contributors_total == expect_contrib &&
              vectors_match(agreed, r.oracle);
  r.modeled_messages = billed_messages(e, r, &r.modeled_exact);
}

RepeatResult run_repeat(const Experiment& e, int repeat) {
  const auto chains = partition_chains(e.nodes, e.groups);
  const auto dead = dead_set(e);
  const std::size_t actor_count =
      static_cast<std::size_t>(e.nodes) +
      (e.protocol == Protocol::Insec ? 0 : 1);  // + the progress monitor
  Deployment d = deploy(e, actor_count);
  Controller& ctrl = *d.controller;

  std::vector<ChainConfig> cfgs(static_cast<std::size_t>(e.nodes));
  for (std::size_t g = 0; g < chains.size(); ++g) {
    if (e.protocol != Protocol::Insec) {
      ctrl.configure_chain(static_cast<GroupId>(g + 1), chains[g]);
    }
    for (NodeId node : chains[g]) {
      ChainConfig& cfg = cfgs[static_cast<std::size_t>(node - 1)];
      cfg.node = node;
      cfg.group = static_cast<GroupId>(g + 1);
      cfg.chain = chains[g];
      cfg.role = node == chains[g].front() ? Role::Initiator
                                           : Role::NonInitiator;
      cfg.features = e.features;
      cfg.scale = static_cast<std::uint64_t>(e.scale);
      cfg.mode = e.protocol == Protocol::Saf ? WireMode::Saf : WireMode::Safe;
      cfg.key_mode = e.key_mode;
      cfg.poll = e.poll;
      cfg.groups = e.groups;
      cfg.max_attempts = e.max_attempts;
      cfg.traverse_again = e.traverse_again;
      cfg.weighted_round = !e.weights.empty();
      cfg.start_delay = std::chrono::milliseconds(node);
      cfg.hop_delay = secs(e.hop_delay_s);
      if (dead.count(node)) {
        cfg.fail_step = node == chains[g].front() ? e.initiator_fail_step
                                                  : FailStep::BeforeStart;
      }
    }
  }

  RepeatResult r;
  const TimePoint setup_start = d.clock->now();

  std::vector<std::unique_ptr<LearnerActor>> actors;
  if (e.protocol != Protocol::Insec) {
    for (NodeId node = 1; node <= e.nodes; ++node) {
      actors.push_back(std::make_unique<LearnerActor>(
          cfgs[static_cast<std::size_t>(node - 1)],
          d.client(static_cast<std::size_t>(node - 1)), *d.clock));
    }
    // Key distribution happens before any round work, dead nodes included:
    // the schedule kills them before the round, not before enrollment.
    for (auto& actor : actors) actor->setup_keys();
    if (e.key_mode == KeyMode::Preneg && e.protocol == Protocol::Safe) {
      for (auto& actor : actors) actor->publish_preneg();
      for (auto& actor : actors) actor->collect_preneg();
    }
  }
  r.key_setup_s = to_secs(d.clock->now() - setup_start);

  const auto setup_counts = ctrl.counters();
  reset_crypto_op_counts();

  std::vector<ActorResult> results(static_cast<std::size_t>(e.nodes));
  std::atomic<bool> stop_monitor{false};
  if (d.vclock) d.vclock->reserve_actors(static_cast<int>(actor_count));
  const TimePoint t0 = d.clock->now();

  std::vector<std::thread> threads;
  for (NodeId node = 1; node <= e.nodes; ++node) {
    const std::size_t idx = static_cast<std::size_t>(node - 1);
    threads.emplace_back([&, node, idx] {
      ScopedActor scope(d.vclock.get());
      ActorResult& res = results[idx];
      try {
        if (e.protocol == Protocol::Insec) {
          ControllerApi& api = d.client(idx);
          d.clock->sleep_for(std::chrono::milliseconds(node));
          const Submission sub = node_submission(e, repeat, node);
          api.post_value(node, sub.values, 1);
          const TimePoint budget =
              d.clock->now() + e.poll.aggregation_timeout() +
              e.poll.poll_time();
          RoundOutcome out;
          for (;;) {
            AverageReply rep = api.get_average(budget);
            if (rep.status == "ok") {
              out.average = rep.average;
              out.completed = true;
              break;
            }
            if (d.clock->now() >= budget) {
              throw RoundTimeout("baseline: no average within budget");
            }
          }
          res.outcome = std::move(out);
        } else {
          res.outcome =
              actors[idx]->failover_driver(node_submission(e, repeat, node));
        }
      } catch (const std::exception& ex) {
        res.error = ex.what();
      }
      res.finished = d.clock->now();
    });
  }

  std::thread monitor_thread;
  if (e.protocol != Protocol::Insec) {
    monitor_thread = std::thread([&] {
      ScopedActor scope(d.vclock.get());
      Monitor mon(e.monitor, d.client(static_cast<std::size_t>(e.nodes)),
                  *d.clock);
      std::vector<GroupId> gids;
      for (int g = 1; g <= e.groups; ++g) gids.push_back(g);
      mon.run(gids, stop_monitor);
    });
  }

  for (auto& t : threads) t.join();
  stop_monitor = true;
  if (monitor_thread.joinable()) monitor_thread.join();

  TimePoint last{0};
  for (const auto& res : results) last = std::max(last, res.finished);
  r.wall_time_s = to_secs(last - t0);

  finish_accounting(e, repeat, setup_counts, ctrl.counters(), results, r);
  if (d.server) d.server->stop();
  return r;
}

}  // namespace

RunStats run_experiment(const Experiment& e) {
  e.validate();
  RunStats stats;
  stats.experiment = e;
  for (int rep = 0; rep < e.repeats; ++rep) {
    stats.repeats.push_back(run_repeat(e, rep));
  }
  return stats;
}

RunStats run_insec(int nodes, int features, int repeats, std::uint64_t seed) {
  Experiment e;
  e.protocol = Protocol::Insec;
  e.nodes = nodes;
  e.features = features;
  e.repeats = repeats;
  e.seed = seed;
  return run_experiment(e);
}

}  // namespace safeagg
