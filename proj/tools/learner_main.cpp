#include <CLI11.hpp>
#include <iostream>
#include <json.hpp>

#include "safeagg/clock.hpp"
#include "safeagg/http_client.hpp"
#include "safeagg/learner.hpp"

using safeagg::ChainConfig;
using safeagg::FailStep;
using safeagg::KeyMode;
using safeagg::Role;
using safeagg::WireMode;

int main(int argc, char** argv) {
  CLI::App app{"Chain participant: joins its group's ring and runs one round"};
  ChainConfig cfg;
  std::string controller_url = "http://127.0.0.1:8181";
  std::string mode = "safe";
  std::string key_mode = "hybrid";
  std::string fail_at = "none";
  std::uint64_t value_seed = 1;
  std::vector<double> values;
  double weight = 0.0;
  double start_delay_ms = 0.0;
  double hop_delay_s = 0.0;
  app.add_option("--node", cfg.node, "This node's id")->required();
  app.add_option("--group", cfg.group, "Group id");
  app.add_option("--chain", cfg.chain,
                 "Group ring in hop order, e.g. --chain 1,2,3")
      ->required()
      ->delimiter(',');
  app.add_option("--features", cfg.features, "Vector length");
  app.add_option("--mode", mode, "safe (encrypted) or saf (plaintext chain)")
      ->check(CLI::IsMember({"safe", "saf"}));
  app.add_option("--key-mode", key_mode, "hybrid or preneg")
      ->check(CLI::IsMember({"hybrid", "preneg"}));
  app.add_option("--controller", controller_url, "Controller base URL");
  app.add_option("--value-seed", value_seed,
                 "Seed for deterministic generated values");
  app.add_option("--values", values,
                 "Explicit values, overrides --value-seed")
      ->delimiter(',');
  app.add_option("--weight", weight,
                 "Sample count for a weighted round (> 0 enables)");
  app.add_option("--fail-at", fail_at,
                 "Injected death: none, before-start, after-first-post, "
                 "after-get")
      ->check(CLI::IsMember(
          {"none", "before-start", "after-first-post", "after-get"}));
  app.add_option("--groups", cfg.groups, "Total groups in the deployment");
  app.add_option("--scale", cfg.scale, "Fixed-point scale");
  app.add_option("--max-attempts", cfg.max_attempts,
                 "Round attempts before giving up");
  app.add_flag("--traverse-again", cfg.traverse_again,
               "Keep a dead initiator in the retry chain");
  app.add_option("--poll-time", cfg.poll.poll_time_s, "Seconds");
  app.add_option("--yield-time", cfg.poll.yield_time_s, "Seconds");
  app.add_option("--aggregation-timeout", cfg.poll.aggregation_timeout_s,
                 "Seconds");
  app.add_option("--start-delay-ms", start_delay_ms,
                 "Startup stagger in milliseconds");
  app.add_option("--hop-delay", hop_delay_s,
                 "Simulated local compute per hop, seconds");
  CLI11_PARSE(app, argc, argv);

  try {
    cfg.mode = mode == "saf" ? WireMode::Saf : WireMode::Safe;
    cfg.key_mode = key_mode == "preneg" ? KeyMode::Preneg : KeyMode::Hybrid;
    cfg.weighted_round = weight > 0.0;
    cfg.start_delay = safeagg::secs(start_delay_ms / 1000.0);
    cfg.hop_delay = safeagg::secs(hop_delay_s);
    if (fail_at == "before-start") cfg.fail_step = FailStep::BeforeStart;
    if (fail_at == "after-first-post") cfg.fail_step = FailStep::AfterFirstPost;
    if (fail_at == "after-get") cfg.fail_step = FailStep::AfterGet;
    cfg.role = !cfg.chain.empty() && cfg.node == cfg.chain.front()
                   ? Role::Initiator
                   : Role::NonInitiator;

    safeagg::SystemClock clock;
    safeagg::HttpControllerClient api(controller_url, clock, cfg.poll);
    safeagg::LearnerActor actor(cfg, api, clock);
    actor.setup_keys();
    if (cfg.mode == WireMode::Safe && cfg.key_mode == KeyMode::Preneg) {
      actor.exchange_preneg();
    }

    safeagg::Submission sub = safeagg::make_submission(
        values.empty() ? safeagg::gen_values(value_seed, cfg.features,
                                             cfg.scale)
                       : values,
        weight > 0.0 ? std::optional<double>(weight) : std::nullopt);
    safeagg::RoundOutcome out = actor.failover_driver(sub);

    nlohmann::json line{{"node", cfg.node},
                        {"group", cfg.group},
                        {"completed", out.completed},
                        {"was_initiator", out.was_initiator},
                        {"attempts", out.attempts},
                        {"reposts", out.reposts},
                        {"contributors", out.contributors},
                        {"average", out.average}};
    std::cout << line.dump() << std::endl;
    return out.completed ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "learner: " << e.what() << std::endl;
    return 1;
  }
}
