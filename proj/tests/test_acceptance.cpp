// Acceptance gate: one check per release criterion, one PASS/FAIL line each.
// Exit status is the number of failed criteria.

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "safeagg/clock.hpp"
#include "safeagg/controller.hpp"
#include "safeagg/crypto.hpp"
#include "safeagg/fit.hpp"
#include "safeagg/harness.hpp"
#include "safeagg/learner.hpp"
#include "safeagg/ring.hpp"
#include "safeagg/transport.hpp"

using namespace safeagg;

namespace {

struct Criterion {
  bool pass = false;
  std::string detail;
};

double real_seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

struct LinFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r2 = 0.0;
};

LinFit linear_fit(const std::vector<std::pair<double, double>>& samples) {
  const double n = static_cast<double>(samples.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : samples) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  LinFit fit;
  const double det = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / det;
  fit.intercept = (sy - fit.slope * sx) / n;
  const double mean = sy / n;
  double ss_res = 0, ss_tot = 0;
  for (auto [x, y] : samples) {
    const double pred = fit.intercept + fit.slope * x;
    ss_res += (y - pred) * (y - pred);
    ss_tot += (y - mean) * (y - mean);
  }
  fit.r2 = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
  return fit;
}

// ---------------------------------------------------------------------------
// 1. Exact correctness across protocol modes, sizes, and widths.
// ---------------------------------------------------------------------------
Criterion criterion_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  const int sizes[] = {3, 5, 12, 36, 100};
  const int widths[] = {1, 20, 1000};
  struct ModeChoice {
    Protocol proto;
    KeyMode km;
  };
  const ModeChoice modes[] = {{Protocol::Saf, KeyMode::Hybrid},
                            {Protocol::Safe, KeyMode::Hybrid},
                            {Protocol::Safe, KeyMode::Preneg}};

  int ok_trials = 0;
  double worst_dev = 0.0;
  std::string first_failure;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    Experiment e;
    e.nodes = sizes[t % 5];
    e.features = widths[(t / 5) % 3];
    const ModeChoice mode = modes[(t / 15) % 3];
    e.protocol = mode.proto;
    e.key_mode = mode.km;
    e.seed = 1000 + static_cast<std::uint64_t>(t);
    const RepeatResult r = run_experiment(e).repeats.at(0);

    const double tol =
        1.0 / (2.0 * static_cast<double>(e.scale) * e.nodes);
    double dev = 0.0;
    bool shape_ok = r.average.size() == r.oracle.size() && !r.average.empty();
    if (shape_ok) {
      for (std::size_t k = 0; k < r.average.size(); ++k) {
        dev = std::max(dev, std::fabs(r.average[k] - r.oracle[k]));
      }
    }
    worst_dev = std::max(worst_dev, dev);
    if (r.correct && shape_ok && dev <= tol) {
      ++ok_trials;
    } else if (first_failure.empty()) {
      std::ostringstream why;
      why << protocol_name(e.protocol) << " n=" << e.nodes
          << " F=" << e.features << " dev=" << dev;
      first_failure = why.str();
    }
  }
  const double elapsed = real_seconds_since(t0);

  Criterion c;
  c.pass = ok_trials == trials && elapsed < 300.0;
  std::ostringstream d;
  d << ok_trials << "/" << trials
    << " randomized trials within 1/(2*scale*n); worst deviation " << worst_dev
    << "; " << elapsed << "s real";
  if (!first_failure.empty()) d << "; first failure: " << first_failure;
  c.detail = d.str();
  return c;
}

// ---------------------------------------------------------------------------
// 2. Instrumented message counts equal the closed forms, zero tolerance.
// ---------------------------------------------------------------------------
Criterion criterion_message_counts() {
  struct Case {
    std::string name;
    Experiment e;
    long expect;
  };
  std::vector<Case> cases;
  auto add = [&cases](std::string name, Experiment e, long expect) {
    cases.push_back({std::move(name), std::move(e), expect});
  };

  {
    Experiment e;
    e.nodes = 5;
    add("clean n=5", e, 20);
  }
  {
    Experiment e;
    e.nodes = 12;
    add("clean n=12", e, 48);
  }
  for (int f = 1; f <= 3; ++f) {
    Experiment e;
    e.nodes = 12;
    for (int k = 0; k < f; ++k) e.fail_nodes.push_back(4 + k);
    add("n=12 f=" + std::to_string(f) + " (nodes 4.." +
            std::to_string(3 + f) + ")",
        e, 48 + 2 * f);
  }
  {
    Experiment e;
    e.nodes = 5;
    e.fail_initiator = true;
    e.traverse_again = true;
    add("initiator crash n=5", e, 50);  // (i+1)(4n+in), i=1
  }
  {
    Experiment e;
    e.nodes = 12;
    e.fail_initiator = true;
    e.traverse_again = true;
    add("initiator crash n=12", e, 120);
  }
  for (int g = 2; g <= 4; ++g) {
    Experiment e;
    e.nodes = 12;
    e.groups = g;
    add("n=12 g=" + std::to_string(g), e, 48 + g);
  }

  bool all_ok = true;
  std::ostringstream d;
  int done = 0;
  for (const Case& cse : cases) {
    const RepeatResult r = run_experiment(cse.e).repeats.at(0);
    const bool formula_ok = expected_messages(cse.e) == cse.expect;
    const bool ok = r.modeled_exact && r.modeled_messages == cse.expect &&
                    formula_ok && r.correct;
    if (!ok) {
      all_ok = false;
      d << " [" << cse.name << ": got " << r.modeled_messages << " want "
        << cse.expect << (r.correct ? "" : ", wrong result")
        << (r.modeled_exact ? "" : ", unbilled schedule") << "]";
    }
    ++done;
  }

  // key exchange cost of the hybrid clean round: one register + one fetch
  // per node
  Experiment kx;
  kx.nodes = 12;
  const RepeatResult rkx = run_experiment(kx).repeats.at(0);
  if (rkx.key_exchange_messages != 24) {
    all_ok = false;
    d << " [hybrid key exchange: got " << rkx.key_exchange_messages
      << " want 24]";
  }

  Criterion c;
  c.pass = all_ok;
  std::ostringstream head;
  head << done
       << " schedules exact (4n; 4n+2f f=1..3 incl. consecutive 4-6; "
          "(i+1)(4n+in); 4n+g g=2..4); hybrid key exchange 2n";
  c.detail = head.str() + d.str();
  return c;
}

// ---------------------------------------------------------------------------
// 3. Rounds survive f dropouts while n-f >= 3 and abort below that.
// ---------------------------------------------------------------------------
Criterion criterion_dropout_tolerance() {
  bool ok = true;
  std::ostringstream d;

  Experiment fine;
  fine.nodes = 5;
  fine.fail_nodes = {2, 4};
  const RepeatResult r_fine = run_experiment(fine).repeats.at(0);
  if (!(r_fine.correct && r_fine.contributors == 3)) {
    ok = false;
    d << " [n=5 f=2 should complete with 3 contributors]";
  }

  Experiment doomed;
  doomed.nodes = 5;
  doomed.fail_nodes = {2, 3, 4};
  const RepeatResult r_doomed = run_experiment(doomed).repeats.at(0);
  const auto it = r_doomed.node_errors.find(1);
  const bool aborted =
      !r_doomed.correct && r_doomed.average.empty() &&
      it != r_doomed.node_errors.end() &&
      it->second.find("refusing to average 2 contributors") !=
          std::string::npos;
  if (!aborted) {
    ok = false;
    d << " [n=5 f=3 must abort at the initiator with the named refusal]";
  }

  // the abort is a distinct error type at the API boundary, not just a string
  bool typed = false;
  try {
    FixedPointCodec codec;
    Mask mask = gen_mask(7, 1);
    finalize_average(mask.pad, mask, 2, codec);
  } catch (const TooFewContributors&) {
    typed = true;
  } catch (...) {
  }
  if (!typed) {
    ok = false;
    d << " [finalize with 2 contributors must throw TooFewContributors]";
  }

  Criterion c;
  c.pass = ok;
  c.detail =
      "n-f>=3 completes (5 nodes, 2 dead -> 3 contributors); n-f=2 aborts "
      "with TooFewContributors" +
      d.str();
  return c;
}

// ---------------------------------------------------------------------------
// 4. Initiator failover: one restart, one winner, survivors averaged.
// ---------------------------------------------------------------------------
Criterion criterion_initiator_failover() {
  bool ok = true;
  std::ostringstream d;

  Experiment e;
  e.nodes = 5;
  e.fail_initiator = true;
  e.initiator_fail_step = FailStep::AfterFirstPost;
  const RepeatResult r = run_experiment(e).repeats.at(0);
  if (!(r.correct && r.attempts == 2 && r.contributors == 4)) {
    ok = false;
    d << " [post-crash round: correct=" << r.correct
      << " attempts=" << r.attempts << " contributors=" << r.contributors
      << "; want correct, 2, 4]";
  }

  // 50 concurrent takeover claims against one stale round record
  VirtualClock clock;
  PollConfig poll = instrumented_poll();
  Controller ctrl({poll, 1, 0, false}, clock);
  std::vector<NodeId> chain;
  for (NodeId n = 1; n <= 50; ++n) chain.push_back(n);
  ctrl.configure_chain(1, chain);
  ctrl.should_initiate(1, 1);  // install a round record...
  clock.sleep_for(secs(poll.aggregation_timeout_s + 1.0));  // ...and age it out
  std::atomic<int> winners{0};
  std::vector<std::thread> threads;
  for (NodeId n = 1; n <= 50; ++n) {
    threads.emplace_back([&ctrl, &winners, n] {
      if (ctrl.should_initiate(n, 1)) winners.fetch_add(1);
    });
  }
  for (auto& t : threads) t.join();
  if (winners.load() != 1) {
    ok = false;
    d << " [election stress: " << winners.load() << " winners, want 1]";
  }

  Criterion c;
  c.pass = ok;
  c.detail =
      "crash after first post: 1 restart, 4-survivor average; 50-way "
      "concurrent election grants exactly one takeover" +
      d.str();
  return c;
}

// ---------------------------------------------------------------------------
// 5. Broker blindness: the controller's stored traffic yields nothing in
//    encrypted mode; the identical probe extracts inputs in plaintext mode.
// ---------------------------------------------------------------------------
struct ManualRound {
  std::vector<JournalEntry> posts;  // chronological chain posts
  std::vector<RingVector> encoded;  // each node's raw encoded vector
};

ManualRound manual_round(WireMode mode) {
  VirtualClock clock;
  PollConfig poll;
  poll.poll_time_s = 2.0;
  poll.yield_time_s = 0.05;
  poll.aggregation_timeout_s = 8.0;
  Controller ctrl({poll, 1, 0, false}, clock);
  LoopbackClient api(ctrl);
  const std::vector<NodeId> chain = {1, 2, 3, 4};
  ctrl.configure_chain(1, chain);

  ManualRound out;
  std::vector<std::unique_ptr<LearnerActor>> actors;
  std::vector<Submission> subs;
  FixedPointCodec codec;
  for (NodeId n : chain) {
    ChainConfig cfg;
    cfg.node = n;
    cfg.chain = chain;
    cfg.role = n == chain.front() ? Role::Initiator : Role::NonInitiator;
    cfg.features = 2;
    cfg.mode = mode;
    cfg.poll = poll;
    cfg.start_delay = std::chrono::milliseconds(n);
    actors.push_back(std::make_unique<LearnerActor>(cfg, api, clock));
    Submission sub = make_submission({1.25 * n, -0.5 * n});
    out.encoded.push_back(codec.encode(sub.values));
    subs.push_back(std::move(sub));
  }
  for (auto& a : actors) a->setup_keys();

  std::vector<RoundOutcome> outcomes(chain.size());
  clock.reserve_actors(static_cast<int>(chain.size()));
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    threads.emplace_back([&, i] {
      ScopedActor scope(&clock);
      outcomes[i] = actors[i]->failover_driver(subs[i]);
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& o : outcomes) {
    if (!o.completed) throw ProtocolError("manual round failed to complete");
  }
  for (const JournalEntry& entry : ctrl.journal()) {
    if (entry.kind == "post") out.posts.push_back(entry);
  }
  return out;
}

Criterion criterion_broker_blindness() {
  bool ok = true;
  std::ostringstream d;

  // Plaintext chain first: the probe must have teeth. Consecutive stored
  // aggregates differ by exactly one node's raw vector.
  const ManualRound saf = manual_round(WireMode::Saf);
  if (saf.posts.size() != 4) {
    ok = false;
    d << " [expected 4 chain posts, saw " << saf.posts.size() << "]";
  } else {
    int recovered = 0;
    for (std::size_t k = 1; k < saf.posts.size(); ++k) {
      const RingVector prev = ring_from_text(saf.posts[k - 1].aggregate);
      const RingVector curr = ring_from_text(saf.posts[k].aggregate);
      if (ring_sub(curr, prev) == saf.encoded[k]) ++recovered;
    }
    if (recovered != 3) {
      ok = false;
      d << " [plaintext probe recovered " << recovered
        << "/3 member vectors; the attack should work in SAF mode]";
    }
  }

  // Encrypted chain: same snapshot, zero private keys. Nothing parses as
  // ring text, nothing decrypts, no encoded input appears verbatim.
  const ManualRound safe = manual_round(WireMode::Safe);
  const KeyPair attacker = generate_keypair();  // not a chain key
  int shielded = 0;
  for (const JournalEntry& entry : safe.posts) {
    bool leaked = false;
    try {
      ring_from_text(entry.aggregate);
      leaked = true;  // stored blob is readable ring text
    } catch (const ParseError&) {
    }
    try {
      open(entry.aggregate, attacker);
      leaked = true;  // decrypted without the recipient's private key
    } catch (const CryptoError&) {
    }
    Envelope env = Envelope::from_wire(entry.aggregate);
    if (env.mode != "hybrid") leaked = true;
    for (const RingVector& raw : safe.encoded) {
      if (entry.aggregate.find(ring_to_text(raw)) != std::string::npos) {
        leaked = true;  // raw vector text embedded in the blob
      }
    }
    if (!leaked) ++shielded;
  }
  if (shielded != static_cast<int>(safe.posts.size()) || safe.posts.empty()) {
    ok = false;
    d << " [encrypted snapshot leaked: only " << shielded << "/"
      << safe.posts.size() << " posts opaque]";
  }

  Criterion c;
  c.pass = ok;
  c.detail =
      "SAF snapshot: subtraction recovers all 3 non-initiator vectors; SAFE "
      "snapshot: every stored post unparseable and undecryptable without a "
      "private key" +
      d.str();
  return c;
}

// ---------------------------------------------------------------------------
// 6. Scaling shape: messages and wall time linear in n; the all-pairs
//    overlay model grows super-linearly on the same axes.
// ---------------------------------------------------------------------------
Criterion criterion_scaling_shape() {
  const std::vector<int> sizes = {10, 30, 52, 76, 100};
  std::vector<std::pair<double, double>> wall_samples;
  std::vector<std::pair<double, double>> msg_samples;
  bool per_node_constant = true;
  for (int n : sizes) {
    Experiment e;
    e.nodes = n;
    e.hop_delay_s = 0.05;  // simulated per-hop compute, virtual seconds
    const RepeatResult r = run_experiment(e).repeats.at(0);
    if (!r.correct) {
      Criterion c;
      c.detail = "scaling run n=" + std::to_string(n) + " was not correct";
      return c;
    }
    wall_samples.emplace_back(n, r.wall_time_s);
    msg_samples.emplace_back(n, static_cast<double>(r.modeled_messages));
    if (r.modeled_messages != 4L * n) per_node_constant = false;
  }
  const LinFit wall_fit = linear_fit(wall_samples);
  const LinFit msg_fit = linear_fit(msg_samples);

  // Super-linear divergence of the n^2 overlay model: its per-node cost
  // grows monotonically while the chain's stays flat at 4.
  bool bon_diverges = true;
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    const double prev =
        static_cast<double>(bon_message_model(sizes[i - 1])) / sizes[i - 1];
    const double curr =
        static_cast<double>(bon_message_model(sizes[i])) / sizes[i];
    if (curr <= prev) bon_diverges = false;
  }

  Criterion c;
  c.pass = wall_fit.r2 >= 0.98 && msg_fit.r2 >= 0.98 && per_node_constant &&
           bon_diverges;
  std::ostringstream d;
  d << "n in {10..100}: wall-time linear fit R^2=" << wall_fit.r2
    << ", message-count fit R^2=" << msg_fit.r2
    << ", chain cost flat at 4/node, overlay model n^2 diverges";
  c.detail = d.str();
  return c;
}

// ---------------------------------------------------------------------------
// 7. Subgrouping on the real HTTP transport beats one long chain.
// ---------------------------------------------------------------------------
Criterion criterion_subgroup_speedup() {
  PollConfig poll;
  poll.poll_time_s = 2.0;
  poll.yield_time_s = 0.005;
  poll.aggregation_timeout_s = 6.0;

  auto configure = [&](int groups) {
    Experiment e;
    e.nodes = 12;
    e.groups = groups;
    e.repeats = 3;
    e.transport = TransportKind::Http;
    e.hop_delay_s = 0.01;
    e.poll = poll;
    e.monitor = MonitorConfig{0.25, 3.0};
    return e;
  };

  const RunStats flat = run_experiment(configure(1));
  const RunStats grouped = run_experiment(configure(4));

  auto mean_wall = [](const RunStats& s) {
    double sum = 0;
    for (const auto& r : s.repeats) sum += r.wall_time_s;
    return sum / static_cast<double>(s.repeats.size());
  };
  bool all_correct = true;
  for (const auto& r : flat.repeats) all_correct = all_correct && r.correct;
  for (const auto& r : grouped.repeats) all_correct = all_correct && r.correct;

  const double t_flat = mean_wall(flat);
  const double t_grouped = mean_wall(grouped);
  const double speedup = t_flat / t_grouped;

  Criterion c;
  c.pass = all_correct && speedup >= 1.8;
  std::ostringstream d;
  d << "http, 12 learners, 10ms hops: 1x12 " << t_flat << "s vs 4x3 "
    << t_grouped << "s -> " << speedup << "x (need >= 1.8x)"
    << (all_correct ? "" : "; some repeats incorrect");
  c.detail = d.str();
  return c;
}

// ---------------------------------------------------------------------------
// 8. Weighted averaging recovers the worked example with no extra traffic.
// ---------------------------------------------------------------------------
Criterion criterion_weighted_average() {
  Experiment weighted;
  weighted.nodes = 3;
  weighted.values = {{1.0}, {4.0}, {4.0}};
  weighted.weights = {1000.0, 500.0, 500.0};
  const RepeatResult r = run_experiment(weighted).repeats.at(0);

  Experiment plain;
  plain.nodes = 3;
  const RepeatResult rp = run_experiment(plain).repeats.at(0);

  const bool exact = r.average.size() == 1 &&
                     std::fabs(r.average[0] - 2.5) <= 1e-9 && r.correct;
  Criterion c;
  c.pass = exact && r.modeled_messages == rp.modeled_messages &&
           r.modeled_messages == 12;
  std::ostringstream d;
  d << "(1.0,w=1000) (4.0,w=500) (4.0,w=500) -> "
    << (r.average.empty() ? 0.0 : r.average[0]) << " (want 2.5 exact); "
    << r.modeled_messages << " messages vs " << rp.modeled_messages
    << " unweighted";
  c.detail = d.str();
  return c;
}

// ---------------------------------------------------------------------------
// 9. The timeout fitter's predictor clears every observed clean run.
// ---------------------------------------------------------------------------
Criterion criterion_timeout_fitter() {
  std::vector<std::pair<double, double>> samples;
  for (int n : {5, 10, 20}) {
    Experiment e;
    e.nodes = n;
    e.repeats = 10;
    for (const RepeatResult& r : run_experiment(e).repeats) {
      if (!r.correct) {
        Criterion c;
        c.detail = "fitter training run n=" + std::to_string(n) + " failed";
        return c;
      }
      samples.emplace_back(n, r.wall_time_s);
    }
  }
  const TimeoutFit fit = fit_timeout(samples);
  double min_headroom = 1e300;
  bool all_clear = true;
  for (const auto& [n, t] : samples) {
    const double headroom = fit(n) - t;
    min_headroom = std::min(min_headroom, headroom);
    if (headroom <= 0.0) all_clear = false;
  }
  Criterion c;
  c.pass = all_clear;
  std::ostringstream d;
  d << "predictor exceeds all " << samples.size()
    << " clean-run timings (n in {5,10,20} x 10 repeats); min headroom "
    << min_headroom << "s";
  c.detail = d.str();
  return c;
}

}  // namespace

int main() {
  struct Entry {
    const char* label;
    std::function<Criterion()> run;
  };
  const std::vector<Entry> entries = {
      {"correctness", criterion_correctness},
      {"message counts", criterion_message_counts},
      {"dropout tolerance", criterion_dropout_tolerance},
      {"initiator failover", criterion_initiator_failover},
      {"broker blindness", criterion_broker_blindness},
      {"scaling shape", criterion_scaling_shape},
      {"subgroup speedup", criterion_subgroup_speedup},
      {"weighted averaging", criterion_weighted_average},
      {"timeout fitter", criterion_timeout_fitter},
  };

  int failures = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Criterion c;
    try {
      c = entries[i].run();
    } catch (const std::exception& ex) {
      c.pass = false;
      c.detail = std::string("unexpected exception: ") + ex.what();
    }
    if (!c.pass) ++failures;
    std::cout << "criterion " << (i + 1) << " (" << entries[i].label
              << "): " << (c.pass ? "PASS" : "FAIL") << " - " << c.detail
              << std::endl;
  }
  std::cout << "acceptance: " << (entries.size() - failures) << "/"
            << entries.size() << " criteria passed" << std::endl;
  return failures;
}
