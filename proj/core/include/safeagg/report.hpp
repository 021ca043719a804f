#pragma once

#include <iosfwd>
#include <vector>

#include "safeagg/harness.hpp"

namespace safeagg {

double mean_of(const std::vector<double>& xs);
double stddev_of(const std::vector<double>& xs);  // population sigma

// results.csv rows: one per repeat, schema
//   protocol,n,F,g,f,repeat,wall_time,messages,correct
// `messages` is the schedule-billed protocol count (equal to the physical
// count for runs without failures); `correct` is 0/1 against the plaintext
// oracle.
void emit_csv(const std::vector<RunStats>& runs, std::ostream& out);

// Human-readable digest: one line per experiment with wall-time
// mean ± k*sigma bands, message totals, and the correctness tally.
void emit_summary(const std::vector<RunStats>& runs, std::ostream& out,
                  double k_sigma = 3.0);

void emit_report(const std::vector<RunStats>& runs, std::ostream& csv_out,
                 std::ostream& summary_out, double k_sigma = 3.0);

}  // namespace safeagg
