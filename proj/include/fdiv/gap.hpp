#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>

#include "fdiv/common.hpp"
#include "fdiv/ficnn.hpp"

namespace fdl::conj {

// Scalar function with derivative, the interface the gap estimator works
// against (learned conjugate, closed-form conjugates, test doubles).
struct ScalarFn {
  std::function<double(double)> value;
  std::function<double(double)> deriv;
};

ScalarFn make_scalar_fn(const FicnnParams& p);

struct GapEstimate {
  double delta = 0.0;      // f*(argmin_u) - argmin_u, recomputed at return
  double argmin_u = 0.0;
  double step_size = 0.0;  // eta
  int iterations = 0;
  double initial_u = 0.0;  // u0
};

// Descent settings for the estimator (defaults are artifact-wide).
struct GapConfig {
  double eta = 0.05;
  int iterations = 200;
  double u0 = 0.0;
};

// Estimates inf_u { f*(u) - u } for a convex f*.
//
// Runs the fixed-step descent u <- u - eta * (f*'(u) - 1), then scans a
// 512-point grid over the descent trajectory (and the optional range hint),
// and refines the best bracket by ternary search. The scan window is grown
// by |delta|/2 toward the side a subsequent shift would expose, iterated to
// a fixed point, so that a single estimate -> shift pass leaves no negative
// gap over the working range.
//
// The returned delta is an attained function value, hence an upper bound on
// the true infimum. Throws NumericError if the descent leaves |u| <= 1e6.
GapEstimate estimate_min_gap(const ScalarFn& fstar, double u0, double eta,
                             int iterations,
                             std::optional<Interval> range_hint = {});

inline GapEstimate estimate_min_gap(const ScalarFn& fstar, const GapConfig& cfg,
                                    std::optional<Interval> range_hint = {}) {
  return estimate_min_gap(fstar, cfg.u0, cfg.eta, cfg.iterations, range_hint);
}

// Max Jensen violation f(mid) - lam*f(u1) - (1-lam)*f(u2) over random
// triples; <= 1e-6 certifies convexity at probe resolution.
double convexity_probe(const std::function<double(double)>& f, Interval domain,
                       int samples, std::uint64_t seed);

// Batched fast path for the learned conjugate.
double convexity_probe(const FicnnParams& p, Interval domain, int samples,
                       std::uint64_t seed);

// Min of f*(u) - u over a uniform grid; used by dominance checks.
std::pair<double, double> gap_on_grid(const std::function<double(double)>& f,
                                      Interval domain, int points);
std::pair<double, double> gap_on_grid(const FicnnParams& p, Interval domain,
                                      int points);

}  // namespace fdl::conj
