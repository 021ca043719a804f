#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "safeagg/harness.hpp"
#include "safeagg/report.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "Benchmark harness: runs full aggregation rounds and reports wall "
      "time, message counts, and correctness against a plaintext oracle"};
  safeagg::Experiment e;
  std::string protocol = "safe";
  std::string key_mode = "hybrid";
  std::string transport = "loopback";
  std::string out_path = "results.csv";
  double sigma = 3.0;
  app.add_option("--protocol", protocol, "safe, saf, or insec")
      ->check(CLI::IsMember({"safe", "saf", "insec"}));
  app.add_option("--nodes", e.nodes, "Total learners")->required();
  app.add_option("--features", e.features, "Vector length");
  app.add_option("--groups", e.groups, "Parallel chain groups");
  app.add_option("--repeats", e.repeats, "Independent rounds to run");
  app.add_option("--fail", e.fail_nodes,
                 "Nodes that die before starting, e.g. --fail 4,5,6")
      ->delimiter(',');
  app.add_flag("--fail-initiator", e.fail_initiator,
               "Kill the group head before it opens the round");
  app.add_flag("--traverse-again", e.traverse_again,
               "Failover keeps the dead initiator in the chain");
  app.add_option("--transport", transport, "loopback (virtual time) or http")
      ->check(CLI::IsMember({"loopback", "http"}));
  app.add_option("--key-mode", key_mode, "hybrid or preneg")
      ->check(CLI::IsMember({"hybrid", "preneg"}));
  app.add_option("--hop-delay", e.hop_delay_s,
                 "Simulated local compute per hop, seconds");
  app.add_option("--seed", e.seed, "Base seed for generated values");
  app.add_option("--weights", e.weights,
                 "Per-node sample counts; enables a weighted round")
      ->delimiter(',');
  app.add_option("--poll-time", e.poll.poll_time_s, "Seconds");
  app.add_option("--yield-time", e.poll.yield_time_s, "Seconds");
  app.add_option("--aggregation-timeout", e.poll.aggregation_timeout_s,
                 "Seconds");
  app.add_option("--probe-interval", e.monitor.probe_interval_s, "Seconds");
  app.add_option("--progress-timeout", e.monitor.progress_timeout_s,
                 "Seconds");
  app.add_option("--sigma", sigma, "Width multiplier for summary bands");
  app.add_option("--out", out_path, "CSV output path");
  CLI11_PARSE(app, argc, argv);

  try {
    e.protocol = safeagg::protocol_from_name(protocol);
    e.key_mode = key_mode == "preneg" ? safeagg::KeyMode::Preneg
                                      : safeagg::KeyMode::Hybrid;
    e.transport = transport == "http" ? safeagg::TransportKind::Http
                                      : safeagg::TransportKind::Loopback;

    safeagg::RunStats stats = safeagg::run_experiment(e);

    std::ofstream csv(out_path);
    if (!csv) {
      std::cerr << "bench: cannot write " << out_path << std::endl;
      return 1;
    }
    safeagg::emit_report({stats}, csv, std::cout, sigma);
    std::cout << "expected messages per round: "
              << safeagg::expected_messages(e) << std::endl;

    bool all_correct = true;
    for (const auto& r : stats.repeats) all_correct = all_correct && r.correct;
    return all_correct ? 0 : 2;
  } catch (const std::exception& ex) {
    std::cerr << "bench: " << ex.what() << std::endl;
    return 1;
  }
}
