#pragma once

#include <array>
#include <utility>
#include <vector>

#include "safeagg/errors.hpp"

namespace safeagg {

// Quadratic wall-time model t(n) = c0 + c1*n + c2*n^2 plus a flat safety
// margin, used to pick aggregation timeouts that won't fire on healthy runs.
struct TimeoutFit {
  std::array<double, 3> coeff{0.0, 0.0, 0.0};
  double margin_s = 0.0;

  double model(double n) const {
    return coeff[0] + n * (coeff[1] + n * coeff[2]);
  }
  double operator()(double n) const { return model(n) + margin_s; }
};

// Least-squares fit of (n, seconds) samples. Throws InsufficientSamples
// unless at least three distinct n values are present.
TimeoutFit fit_timeout(const std::vector<std::pair<double, double>>& samples,
                       double margin_s = 4.0);

// Coefficient of determination of a fit against its samples.
double r_squared(const TimeoutFit& fit,
                 const std::vector<std::pair<double, double>>& samples);

// Extra cost of a failed run once the detection wait is taken out:
// (failed wall time - timeout allowance) - clean wall time.
double failover_overhead(double failed_run_s, double timeout_allowance_s,
                         double clean_run_s);

}  // namespace safeagg
