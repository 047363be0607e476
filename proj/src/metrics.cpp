#include "fdiv/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace fdl::metrics {

namespace {
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}

DensityCurve kde(std::span<const double> samples, double bandwidth,
                 std::vector<double> grid) {
  if (samples.empty()) throw ConfigError("kde: need at least one sample");
  if (bandwidth <= 0.0) throw ConfigError("kde: bandwidth must be positive");
  DensityCurve curve;
  curve.bandwidth = bandwidth;
  curve.grid = std::move(grid);
  curve.density.assign(curve.grid.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    double g = curve.grid[i];
    double acc = 0.0;
    for (double x : samples) {
      double z = (g - x) / bandwidth;
      acc += std::exp(-0.5 * z * z);
    }
    curve.density[i] = acc * kInvSqrt2Pi * inv_n / bandwidth;
  }
  return curve;
}

std::vector<double> default_grid(std::span<const double> samples, double bandwidth,
                                 int points) {
  if (samples.empty()) throw ConfigError("kde grid: need samples");
  double lo = samples[0];
  double hi = samples[0];
  for (double x : samples) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  lo -= 4.0 * bandwidth;
  hi += 4.0 * bandwidth;
  std::vector<double> grid(static_cast<std::size_t>(points));
  double step = (hi - lo) / static_cast<double>(points - 1);
  for (int i = 0; i < points; ++i) {
    grid[static_cast<std::size_t>(i)] = lo + step * static_cast<double>(i);
  }
  return grid;
}

double find_zero_gap_point(const conj::ScalarFn& fstar, const conj::GapConfig& gap,
                           std::optional<Interval> hint) {
  conj::GapEstimate est =
      conj::estimate_min_gap(fstar, gap.u0, gap.eta, gap.iterations, hint);
  if (std::abs(est.delta) > 2e-3) {
    throw NumericError("find_zero_gap_point: residual gap " +
                       std::to_string(est.delta) +
                       " — conjugate has not been shifted");
  }
  return est.argmin_u;
}

InputStats input_stats(std::span<const double> samples, double u_tilde) {
  if (samples.size() < 30) {
    throw ConfigError("input_stats: need at least 30 samples");
  }
  InputStats st;
  st.count = static_cast<int>(samples.size());
  for (double x : samples) st.mean += x;
  st.mean /= static_cast<double>(samples.size());
  for (double x : samples) st.std_dev += (x - st.mean) * (x - st.mean);
  st.std_dev = std::sqrt(st.std_dev / static_cast<double>(samples.size()));
  st.zero_gap_point = u_tilde;
  st.delta_u = std::abs(u_tilde - st.mean);
  st.combined = st.delta_u + st.std_dev;
  return st;
}

InputStats input_stats(std::span<const double> samples, const conj::ScalarFn& fstar) {
  if (samples.size() < 30) {
    throw ConfigError("input_stats: need at least 30 samples");
  }
  double lo = samples[0];
  double hi = samples[0];
  for (double x : samples) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  // start the descent inside the sample range so restricted conjugate
  // domains (u < 0 baselines) stay feasible
  conj::GapConfig cfg;
  cfg.u0 = 0.5 * (lo + hi);
  conj::GapEstimate est = conj::estimate_min_gap(fstar, cfg, Interval{lo, hi});
  return input_stats(samples, est.argmin_u);
}

}  // namespace fdl::metrics
