#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include "safeagg/clock.hpp"
#include "safeagg/controller.hpp"
#include "safeagg/http_server.hpp"

namespace {
std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop = true; }
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Message broker for chain-based secure aggregation"};
  std::string host = "127.0.0.1";
  int port = 8181;
  int groups = 1;
  int insec_nodes = 0;
  bool size_weighted = false;
  safeagg::PollConfig poll;
  app.add_option("--host", host, "Bind address");
  app.add_option("--port", port, "Bind port (0 = pick a free one)");
  app.add_option("--groups", groups, "Number of chain groups expected");
  app.add_option("--insec-nodes", insec_nodes,
                 "Serve the centralized plaintext baseline for this many "
                 "nodes instead of chain groups");
  app.add_flag("--size-weighted", size_weighted,
               "Weight the cross-group mean by contributor counts");
  app.add_option("--poll-time", poll.poll_time_s, "Long-poll window, seconds");
  app.add_option("--yield-time", poll.yield_time_s,
                 "Re-check interval inside a poll window, seconds");
  app.add_option("--aggregation-timeout", poll.aggregation_timeout_s,
                 "Round staleness threshold, seconds");
  CLI11_PARSE(app, argc, argv);

  try {
    poll.validate();
    safeagg::SystemClock clock;
    safeagg::ControllerConfig cfg;
    cfg.poll = poll;
    cfg.expected_groups = groups;
    cfg.insec_nodes = insec_nodes;
    cfg.size_weighted_group_mean = size_weighted;
    safeagg::Controller controller(cfg, clock);
    safeagg::ControllerHttpServer server(controller, host, port);
    std::cout << "listening on " << server.base_url() << std::endl;

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop) {
      std::this_thread::sleep_for(std::chrono::milliseconds(200));
    }
    server.stop();
  } catch (const std::exception& e) {
    std::cerr << "controller: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
