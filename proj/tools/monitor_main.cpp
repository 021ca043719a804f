#include <CLI11.hpp>
#include <atomic>
#include <csignal>
#include <iostream>

#include "safeagg/clock.hpp"
#include "safeagg/http_client.hpp"
#include "safeagg/monitor.hpp"

namespace {
std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop = true; }
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Progress watchdog: reroutes chain hops around unresponsive nodes"};
  std::string controller_url = "http://127.0.0.1:8181";
  safeagg::MonitorConfig cfg;
  safeagg::PollConfig poll;
  int groups = 1;
  app.add_option("--controller", controller_url, "Controller base URL");
  app.add_option("--probe-interval", cfg.probe_interval_s,
                 "Seconds between probes");
  app.add_option("--progress-timeout", cfg.progress_timeout_s,
                 "Seconds a pending hop may sit before rerouting");
  app.add_option("--groups", groups, "Number of groups to watch");
  app.add_option("--aggregation-timeout", poll.aggregation_timeout_s,
                 "Deployment round timeout, for sanity checking");
  CLI11_PARSE(app, argc, argv);

  try {
    cfg.validate(poll.aggregation_timeout_s);
    safeagg::SystemClock clock;
    safeagg::HttpControllerClient api(controller_url, clock, poll);
    safeagg::Monitor mon(cfg, api, clock);
    std::vector<safeagg::GroupId> gids;
    for (int g = 1; g <= groups; ++g) gids.push_back(g);

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    mon.run(gids, g_stop);
    std::cout << "remediations: " << mon.remediations() << std::endl;
  } catch (const std::exception& e) {
    std::cerr << "monitor: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
