#include "safeagg/fit.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <set>

namespace safeagg {

TimeoutFit fit_timeout(const std::vector<std::pair<double, double>>& samples,
                       double margin_s) {
  std::set<double> distinct;
  for (const auto& [n, t] : samples) {
    (void)t;
    distinct.insert(n);
  }
  if (distinct.size() < 3) {
    throw InsufficientSamples(
        "fit_timeout: need samples at three or more distinct sizes, got " +
        std::to_string(distinct.size()));
  }
  const auto m = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd a(m, 3);
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double n = samples[static_cast<std::size_t>(i)].first;
    a(i, 0) = 1.0;
    a(i, 1) = n;
    a(i, 2) = n * n;
    b(i) = samples[static_cast<std::size_t>(i)].second;
  }
  Eigen::Vector3d x = a.colPivHouseholderQr().solve(b);
  TimeoutFit fit;
  fit.coeff = {x(0), x(1), x(2)};
  fit.margin_s = margin_s;
  return fit;
}

double r_squared(const TimeoutFit& fit,
                 const std::vector<std::pair<double, double>>& samples) {
  if (samples.empty()) return 0.0;
  double mean = 0.0;
  for (const auto& [n, t] : samples) {
    (void)n;
    mean += t;
  }
  mean /= static_cast<double>(samples.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (const auto& [n, t] : samples) {
    const double e = t - fit.model(n);
    ss_res += e * e;
    const double d = t - mean;
    ss_tot += d * d;
  }
  if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

double failover_overhead(double failed_run_s, double timeout_allowance_s,
                         double clean_run_s) {
  return (failed_run_s - timeout_allowance_s) - clean_run_s;
}

}  // namespace safeagg
