#include "safeagg/report.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace safeagg {

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double stddev_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

void emit_csv(const std::vector<RunStats>& runs, std::ostream& out) {
  out << "protocol,n,F,g,f,repeat,wall_time,messages,correct\n";
  for (const RunStats& run : runs) {
    const Experiment& e = run.experiment;
    const int f = static_cast<int>(e.fail_nodes.size()) +
                  (e.fail_initiator ? 1 : 0);
    for (std::size_t i = 0; i < run.repeats.size(); ++i) {
      const RepeatResult& r = run.repeats[i];
      out << protocol_name(e.protocol) << ',' << e.nodes << ',' << e.features
          << ',' << e.groups << ',' << f << ',' << i << ','
          << std::setprecision(9) << r.wall_time_s << ','
          << r.modeled_messages << ',' << (r.correct ? 1 : 0) << '\n';
    }
  }
}

void emit_summary(const std::vector<RunStats>& runs, std::ostream& out,
                  double k_sigma) {
  for (const RunStats& run : runs) {
    const Experiment& e = run.experiment;
    std::vector<double> walls;
    long correct = 0;
    long messages = 0;
    bool uniform_messages = true;
    for (const RepeatResult& r : run.repeats) {
      walls.push_back(r.wall_time_s);
      if (r.correct) ++correct;
      if (messages == 0) {
        messages = r.modeled_messages;
      } else if (messages != r.modeled_messages) {
        uniform_messages = false;
      }
    }
    const double m = mean_of(walls);
    const double s = stddev_of(walls);
    out << protocol_name(e.protocol) << " n=" << e.nodes
        << " F=" << e.features << " g=" << e.groups
        << " f=" << e.fail_nodes.size() + (e.fail_initiator ? 1 : 0) << ": "
        << std::setprecision(6) << "wall " << m << "s +/- " << k_sigma * s
        << "s [" << m - k_sigma * s << ", " << m + k_sigma * s << "], "
        << "messages " << messages << (uniform_messages ? "" : " (varies)")
        << ", correct " << correct << "/" << run.repeats.size() << "\n";
  }
}

void emit_report(const std::vector<RunStats>& runs, std::ostream& csv_out,
                 std::ostream& summary_out, double k_sigma) {
  emit_csv(runs, csv_out);
  emit_summary(runs, summary_out, k_sigma);
}

}  // namespace safeagg
