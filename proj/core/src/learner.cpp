#include "safeagg/learner.hpp"

#include <sodium.h>

#include <algorithm>
#include <random>

#include "safeagg/errors.hpp"

namespace safeagg {

void ChainConfig::validate() const {
  if (chain.size() < 3) {
    throw ProtocolError("chain needs at least 3 learners; got " +
                        std::to_string(chain.size()));
  }
  if (std::count(chain.begin(), chain.end(), node) != 1) {
    throw ProtocolError("node " + std::to_string(node) +
                        " must appear exactly once in its chain");
  }
  if (features < 1) throw ProtocolError("features must be >= 1");
  if (max_attempts < 1) throw ProtocolError("max_attempts must be >= 1");
  if (groups < 1) throw ProtocolError("groups must be >= 1");
  poll.validate();
}

Submission make_submission(std::vector<double> values,
                           std::optional<double> weight) {
  if (weight && *weight <= 0) {
    throw NonPositiveWeight("submission weight must be > 0; got " +
                            std::to_string(*weight));
  }
  return Submission{std::move(values), weight};
}

std::vector<double> resolve_weighted(const std::vector<double>& avg_vector) {
  if (avg_vector.size() < 2) {
    throw ProtocolError("weighted average needs the trailing weight element");
  }
  const double weight_mean = avg_vector.back();
  if (weight_mean <= 0) {
    throw NonPositiveWeight("averaged weight is not positive: " +
                            std::to_string(weight_mean));
  }
  std::vector<double> out(avg_vector.begin(), avg_vector.end() - 1);
  for (double& v : out) v /= weight_mean;
  return out;
}

std::vector<double> gen_values(std::uint64_t seed, int features,
                               std::uint64_t scale) {
  std::mt19937_64 rng(seed);
  const long long span = 32 * static_cast<long long>(scale);
  std::uniform_int_distribution<long long> dist(-span, span);
  std::vector<double> out(static_cast<std::size_t>(features));
  for (double& v : out) {
    v = static_cast<double>(dist(rng)) / static_cast<double>(scale);
  }
  return out;
}

LearnerActor::LearnerActor(ChainConfig cfg, ControllerApi& api, Clock& clock)
    : cfg_(std::move(cfg)), api_(api), clock_(clock) {
  cfg_.validate();
  codec_.scale = cfg_.scale;
  cipher_ = select_cipher();
}

void LearnerActor::setup_keys() {
  if (cfg_.mode == WireMode::Saf) return;
  self_kp_ = generate_keypair();
  have_keypair_ = true;
  api_.register_key(cfg_.node, pk_to_base64(self_kp_.pk));
}

PublicKey LearnerActor::peer_key(NodeId node) {
  auto it = peer_pks_.find(node);
  if (it != peer_pks_.end()) return it->second;
  std::string b64;
  try {
    b64 = api_.get_key(node);
  } catch (const UnknownNode& e) {
    throw MissingKeys(std::string("no public key on file for node ") +
                      std::to_string(node) + ": " + e.what());
  }
  PublicKey pk = pk_from_base64(b64);
  peer_pks_[node] = pk;
  return pk;
}

void LearnerActor::publish_preneg() {
  if (cfg_.mode == WireMode::Saf) return;
  if (!have_keypair_) {
    throw MissingKeys("publish_preneg: call setup_keys first");
  }
  for (NodeId peer : cfg_.chain) {
    if (peer == cfg_.node) continue;
    SymKey key = generate_sym_key();
    preneg_.generated[peer] = key;
    api_.post_preneg(cfg_.node, peer, seal_sym_key(key, peer_key(peer)));
  }
}

void LearnerActor::collect_preneg() {
  if (cfg_.mode == WireMode::Saf) return;
  const int expected = static_cast<int>(cfg_.chain.size()) - 1;
  const TimePoint deadline = clock_.now() + cfg_.poll.poll_time();
  for (const PrenegEntry& entry :
       api_.get_preneg(cfg_.node, expected, deadline)) {
    preneg_.received[entry.from] = open_sym_key(entry.sealed_key, self_kp_);
  }
}

void LearnerActor::exchange_preneg() {
  publish_preneg();
  collect_preneg();
}

CipherSuite LearnerActor::select_cipher() {
  CipherSuite suite;
  switch (cfg_.mode) {
    case WireMode::Saf:
      suite.seal_fn = [](const RingVector& v, NodeId) {
        return ring_to_text(v);
      };
      suite.open_fn = [](const std::string& wire, NodeId) {
        return ring_from_text(wire);
      };
      return suite;
    case WireMode::Safe:
      break;
  }
  if (cfg_.key_mode == KeyMode::Hybrid) {
    suite.seal_fn = [this](const RingVector& v, NodeId to) {
      return seal(v, peer_key(to));
    };
    suite.open_fn = [this](const std::string& wire, NodeId) {
      if (!have_keypair_) throw MissingKeys("no keypair; call setup_keys");
      try {
        return open(wire, self_kp_);
      } catch (const CryptoError& e) {
        throw DecryptFailure(e.what());
      }
    };
  } else {
    suite.seal_fn = [this](const RingVector& v, NodeId to) {
      auto it = preneg_.received.find(to);
      if (it == preneg_.received.end()) {
        throw MissingKeys("no pre-negotiated key for sending to node " +
                          std::to_string(to));
      }
      return seal_preneg(v, it->second);
    };
    suite.open_fn = [this](const std::string& wire, NodeId from) {
      auto it = preneg_.generated.find(from);
      if (it == preneg_.generated.end()) {
        throw MissingKeys("no pre-negotiated key for receiving from node " +
                          std::to_string(from));
      }
      try {
        return open_preneg(wire, it->second);
      } catch (const CryptoError& e) {
        throw DecryptFailure(e.what());
      }
    };
  }
  return suite;
}

NodeId LearnerActor::successor(NodeId of) const {
  auto pos = std::find(cfg_.chain.begin(), cfg_.chain.end(), of);
  if (pos == cfg_.chain.end()) {
    throw ProtocolError("successor: node " + std::to_string(of) +
                        " not in chain");
  }
  const std::size_t n = cfg_.chain.size();
  const std::size_t start = static_cast<std::size_t>(pos - cfg_.chain.begin());
  for (std::size_t step = 1; step < n; ++step) {
    NodeId cand = cfg_.chain[(start + step) % n];
    if (!excluded_.count(cand)) return cand;
  }
  throw ProtocolError("successor: every other node is excluded");
}

TimePoint LearnerActor::attempt_budget_end() {
  // One aggregation_timeout (the controller's staleness horizon) plus one
  // poll window, so this actor always observes controller staleness before
  // giving up — never the other way around.
  return clock_.now() + cfg_.poll.aggregation_timeout() +
         cfg_.poll.poll_time();
}

RingVector LearnerActor::submission_vector(const Submission& sub) {
  if (static_cast<int>(sub.values.size()) != cfg_.features) {
    throw ProtocolError("submission has " + std::to_string(sub.values.size()) +
                        " values; configured for " +
                        std::to_string(cfg_.features));
  }
  std::vector<double> vals = sub.values;
  if (cfg_.weighted_round) {
    const double w = sub.weight.value_or(1.0);
    if (w <= 0) throw NonPositiveWeight("weight must be > 0");
    for (double& v : vals) v *= w;
    vals.push_back(w);
  }
  return codec_.encode(vals);
}

void LearnerActor::watch_consumption(const RingVector& raw, NodeId target,
                                     TimePoint budget_end) {
  while (true) {
    CheckReply r = api_.check_aggregate(target, cfg_.group, budget_end);
    if (r.status == "consumed") return;
    if (r.status == "repost") {
      // Re-seal the cached plaintext aggregate for the new target; the
      // contents never change, only the recipient.
      ++reposts_;
      target = r.to_node;
      api_.post_aggregate(cfg_.node, target, cipher_.seal_fn(raw, target),
                          cfg_.group);
      continue;
    }
    if (clock_.now() >= budget_end) {
      throw RoundTimeout("aggregate posted to node " + std::to_string(target) +
                         " was never consumed");
    }
  }
}

FetchReply LearnerActor::fetch_aggregate_blocking(TimePoint budget_end) {
  while (true) {
    FetchReply r = api_.get_aggregate(cfg_.node, cfg_.group, budget_end);
    if (r.status == "ok") return r;
    if (clock_.now() >= budget_end) {
      throw RoundTimeout("no aggregate arrived for node " +
                         std::to_string(cfg_.node));
    }
  }
}

std::vector<double> LearnerActor::fetch_average_blocking(
    TimePoint budget_end) {
  while (true) {
    AverageReply r = api_.get_average(budget_end);
    if (r.status == "ok") return r.average;
    if (clock_.now() >= budget_end) {
      throw RoundTimeout("no average was delivered");
    }
  }
}

RoundOutcome LearnerActor::run_initiator(const Submission& sub) {
  const TimePoint budget_end = attempt_budget_end();

  // The mask seed is crypto-fresh every attempt; a retried round must not
  // reuse the abandoned attempt's pad.
  std::uint64_t seed = 0;
  randombytes_buf(&seed, sizeof seed);
  const RingVector mine = submission_vector(sub);
  const Mask mask = gen_mask(seed, mine.size());
  const RingVector masked = ring_add(mine, mask.pad);

  if (cfg_.hop_delay > Duration::zero()) clock_.sleep_for(cfg_.hop_delay);
  const NodeId first = successor(cfg_.node);
  api_.post_aggregate(cfg_.node, first, cipher_.seal_fn(masked, first),
                      cfg_.group);
  if (cfg_.fail_step == FailStep::AfterFirstPost) throw InjectedDeath{};
  watch_consumption(masked, first, budget_end);

  const FetchReply fin = fetch_aggregate_blocking(budget_end);
  RingVector total = cipher_.open_fn(fin.aggregate, fin.from_node);
  if (total.size() != mine.size()) {
    throw ProtocolError("final aggregate length " +
                        std::to_string(total.size()) + " != submitted " +
                        std::to_string(mine.size()));
  }
  std::vector<double> avg =
      finalize_average(total, mask, fin.posted, codec_);
  if (cfg_.weighted_round) avg = resolve_weighted(avg);
  api_.post_average(avg, cfg_.node, cfg_.group);

  RoundOutcome out;
  out.average = avg;
  out.contributors = fin.posted;
  out.completed = true;
  out.was_initiator = true;
  if (cfg_.groups > 1) {
    // One extra message per group: its initiator learns the global mean.
    out.average = fetch_average_blocking(budget_end);
  }
  return out;
}

RoundOutcome LearnerActor::run_non_initiator(const Submission& sub) {
  const TimePoint budget_end = attempt_budget_end();

  const FetchReply in = fetch_aggregate_blocking(budget_end);
  if (cfg_.fail_step == FailStep::AfterGet) throw InjectedDeath{};
  RingVector acc = cipher_.open_fn(in.aggregate, in.from_node);
  const RingVector mine = submission_vector(sub);
  if (acc.size() != mine.size()) {
    throw ProtocolError("incoming aggregate length " +
                        std::to_string(acc.size()) + " != own vector " +
                        std::to_string(mine.size()));
  }
  if (cfg_.hop_delay > Duration::zero()) clock_.sleep_for(cfg_.hop_delay);
  ring_add_in_place(acc, mine);

  const NodeId next = successor(cfg_.node);
  api_.post_aggregate(cfg_.node, next, cipher_.seal_fn(acc, next),
                      cfg_.group);
  watch_consumption(acc, next, budget_end);

  RoundOutcome out;
  out.average = fetch_average_blocking(budget_end);
  out.completed = true;
  return out;
}

RoundOutcome LearnerActor::failover_driver(const Submission& sub) {
  if (cfg_.start_delay > Duration::zero()) clock_.sleep_for(cfg_.start_delay);
  if (cfg_.fail_step == FailStep::BeforeStart) {
    return RoundOutcome{};  // never even says hello
  }

  Role role = cfg_.role;
  for (int attempt = 1; attempt <= cfg_.max_attempts; ++attempt) {
    try {
      RoundOutcome out = (role == Role::Initiator) ? run_initiator(sub)
                                                   : run_non_initiator(sub);
      out.attempts = attempt;
      out.reposts = reposts_;
      return out;
    } catch (const InjectedDeath&) {
      RoundOutcome out;
      out.attempts = attempt;
      out.reposts = reposts_;
      return out;  // completed stays false: this actor "died"
    } catch (const RoundTimeout&) {
      // Identify a deposed initiator before the election overwrites the
      // record: only a stale record names the dead one. Nodes that arrive
      // after the winner re-initialized see a fresh record and skip this.
      RoundPeek peek = api_.round_status(cfg_.group);
      NodeId deposed = 0;
      if (peek.exists && peek.initiator != cfg_.node &&
          peek.age_s > cfg_.poll.aggregation_timeout_s) {
        deposed = peek.initiator;
      }
      if (api_.should_initiate(cfg_.node, cfg_.group)) {
        role = Role::Initiator;
        if (!cfg_.traverse_again && deposed != 0) excluded_.insert(deposed);
      } else {
        role = Role::NonInitiator;
      }
    }
  }
  throw MaxAttemptsExceeded("node " + std::to_string(cfg_.node) + " gave up after " +
                            std::to_string(cfg_.max_attempts) + " attempts");
}

}  // namespace safeagg
