#pragma once

#include "fdiv/gap.hpp"

namespace fdl::metrics {

struct DensityCurve {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.3;
};

// Gaussian-kernel density estimate on an explicit grid:
// density(g) = (1/n) sum_i K((g - x_i)/h) / h.
DensityCurve kde(std::span<const double> samples, double bandwidth,
                 std::vector<double> grid);

// 512 uniform points over [min - 4h, max + 4h].
std::vector<double> default_grid(std::span<const double> samples, double bandwidth,
                                 int points = 512);

// Input point where the conjugate touches the identity. Requires a shifted
// conjugate: residual gaps above 2e-3 report an error. On flat touching
// regions the descent endpoint is returned.
double find_zero_gap_point(const conj::ScalarFn& fstar,
                           const conj::GapConfig& gap = {},
                           std::optional<Interval> hint = {});

struct InputStats {
  double mean = 0.0;
  double std_dev = 0.0;
  double zero_gap_point = 0.0;
  double delta_u = 0.0;   // |zero_gap_point - mean|
  double combined = 0.0;  // delta_u + std_dev
  int count = 0;
};

// Diagnostic statistics of the conjugate-input distribution; u_tilde is the
// minimum-gap point (the zero-gap point for valid shifted conjugates, the
// closest-approach point for fixed baselines).
InputStats input_stats(std::span<const double> samples, double u_tilde);
InputStats input_stats(std::span<const double> samples, const conj::ScalarFn& fstar);

}  // namespace fdl::metrics
