#include "fdiv/gap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace fdl::conj {

namespace {

constexpr int kGridPoints = 512;
constexpr double kDivergenceBound = 1e6;

struct GridBest {
  double u = 0.0;
  double gap = 0.0;
};

GridBest scan_grid(const ScalarFn& fn, double lo, double hi, int points) {
  GridBest best{lo, fn.value(lo) - lo};
  double step = (hi - lo) / static_cast<double>(points - 1);
  for (int i = 1; i < points; ++i) {
    double u = lo + step * static_cast<double>(i);
    double g = fn.value(u) - u;
    if (g < best.gap) best = {u, g};
  }
  return best;
}

// Ternary search on the (convex) gap around a bracketing interval.
GridBest refine(const ScalarFn& fn, double lo, double hi) {
  for (int it = 0; it < 200 && hi - lo > 1e-13 * (1.0 + std::abs(lo)); ++it) {
    double m1 = lo + (hi - lo) / 3.0;
    double m2 = hi - (hi - lo) / 3.0;
    double g1 = fn.value(m1) - m1;
    double g2 = fn.value(m2) - m2;
    if (g1 < g2) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  double u = 0.5 * (lo + hi);
  return {u, fn.value(u) - u};
}

}  // namespace

ScalarFn make_scalar_fn(const FicnnParams& p) {
  return ScalarFn{
      [p](double u) { return eval_fstar(p, u); },
      [p](double u) {
        double d = 0.0;
        eval_fstar_grad(p, u, &d);
        return d;
      }};
}

GapEstimate estimate_min_gap(const ScalarFn& fstar, double u0, double eta,
                             int iterations, std::optional<Interval> range_hint) {
  if (eta <= 0.0) throw ConfigError("estimate_min_gap: eta must be positive");
  if (iterations < 1) throw ConfigError("estimate_min_gap: iterations must be >= 1");

  // Alg. 2 descent on f*(u) - u.
  double u = u0;
  double traj_lo = u0;
  double traj_hi = u0;
  for (int i = 0; i < iterations; ++i) {
    double h = fstar.deriv(u) - 1.0;
    u -= eta * h;
    if (!std::isfinite(u) || std::abs(u) > kDivergenceBound) {
      throw NumericError("estimate_min_gap: descent diverged; use a smaller eta");
    }
    traj_lo = std::min(traj_lo, u);
    traj_hi = std::max(traj_hi, u);
  }
  // With a range hint the feasible u-space is the hinted working range and
  // the descent endpoint is projected into it; the infimum of a flat
  // conjugate is otherwise chased arbitrarily far from the data, parking
  // the zero-gap point where no input ever lands. Without a hint the
  // descent trajectory itself is the working range.
  double nominal_lo = traj_lo;
  double nominal_hi = traj_hi;
  if (range_hint) {
    nominal_lo = range_hint->lo;
    nominal_hi = range_hint->hi;
  }
  nominal_lo -= 1.0;
  nominal_hi += 1.0;
  const double u_gd = std::clamp(u, nominal_lo, nominal_hi);
  const double gap_gd = fstar.value(u_gd) - u_gd;

  // Grid scan with shift-aware window growth: after a shift by delta/2 the
  // same nominal range reads the function at u - delta/2, so the scan must
  // already cover that translate. Iterated to a fixed point; each round can
  // only lower the minimum, and growth is geometric since the asymptotic
  // slope of the gap stays above -1 on the growing side.
  double lo = nominal_lo;
  double hi = nominal_hi;
  GridBest best{u_gd, gap_gd};
  for (int round = 0; round < 64; ++round) {
    GridBest scanned = scan_grid(fstar, lo, hi, kGridPoints);
    double spacing = (hi - lo) / static_cast<double>(kGridPoints - 1);
    GridBest polished = refine(fstar, std::max(lo, scanned.u - spacing),
                               std::min(hi, scanned.u + spacing));
    if (scanned.gap < best.gap) best = scanned;
    if (polished.gap < best.gap) best = polished;

    double want_lo = std::min(nominal_lo, nominal_lo - best.gap / 2.0);
    double want_hi = std::max(nominal_hi, nominal_hi - best.gap / 2.0);
    if (lo <= want_lo + 1e-12 && hi >= want_hi - 1e-12) break;
    lo = std::min(lo, want_lo);
    hi = std::max(hi, want_hi);
  }

  // Prefer the descent endpoint on ties so flat zero-gap regions report it.
  GapEstimate out;
  if (gap_gd <= best.gap + 1e-12) {
    out.argmin_u = u_gd;
  } else {
    out.argmin_u = best.u;
  }
  out.delta = fstar.value(out.argmin_u) - out.argmin_u;
  out.step_size = eta;
  out.iterations = iterations;
  out.initial_u = u0;
  return out;
}

double convexity_probe(const std::function<double(double)>& f, Interval domain,
                       int samples, std::uint64_t seed) {
  if (samples < 100) throw ConfigError("convexity_probe: samples must be >= 100");
  Rng rng(seed);
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    double u1 = rng.uniform(domain.lo, domain.hi);
    double u2 = rng.uniform(domain.lo, domain.hi);
    double lam = rng.uniform();
    double mid = lam * u1 + (1.0 - lam) * u2;
    double v = f(mid) - lam * f(u1) - (1.0 - lam) * f(u2);
    worst = std::max(worst, v);
  }
  return worst;
}

double convexity_probe(const FicnnParams& p, Interval domain, int samples,
                       std::uint64_t seed) {
  if (samples < 100) throw ConfigError("convexity_probe: samples must be >= 100");
  Rng rng(seed);
  std::vector<double> us;
  std::vector<double> lams;
  us.reserve(static_cast<std::size_t>(samples) * 3);
  lams.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    double u1 = rng.uniform(domain.lo, domain.hi);
    double u2 = rng.uniform(domain.lo, domain.hi);
    double lam = rng.uniform();
    us.push_back(u1);
    us.push_back(u2);
    us.push_back(lam * u1 + (1.0 - lam) * u2);
    lams.push_back(lam);
  }
  std::vector<double> vals(us.size());
  eval_fstar_batch(p, us, vals);
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    std::size_t k = static_cast<std::size_t>(i) * 3;
    double lam = lams[static_cast<std::size_t>(i)];
    double v = vals[k + 2] - lam * vals[k] - (1.0 - lam) * vals[k + 1];
    worst = std::max(worst, v);
  }
  return worst;
}

std::pair<double, double> gap_on_grid(const std::function<double(double)>& f,
                                      Interval domain, int points) {
  double best_gap = std::numeric_limits<double>::infinity();
  double best_u = domain.lo;
  double step = domain.width() / static_cast<double>(points - 1);
  for (int i = 0; i < points; ++i) {
    double u = domain.lo + step * static_cast<double>(i);
    double g = f(u) - u;
    if (g < best_gap) {
      best_gap = g;
      best_u = u;
    }
  }
  return {best_gap, best_u};
}

std::pair<double, double> gap_on_grid(const FicnnParams& p, Interval domain,
                                      int points) {
  std::vector<double> us(static_cast<std::size_t>(points));
  double step = domain.width() / static_cast<double>(points - 1);
  for (int i = 0; i < points; ++i) {
    us[static_cast<std::size_t>(i)] = domain.lo + step * static_cast<double>(i);
  }
  std::vector<double> vals(us.size());
  eval_fstar_batch(p, us, vals);
  double best_gap = std::numeric_limits<double>::infinity();
  double best_u = domain.lo;
  for (std::size_t i = 0; i < us.size(); ++i) {
    double g = vals[i] - us[i];
    if (g < best_gap) {
      best_gap = g;
      best_u = us[i];
    }
  }
  return {best_gap, best_u};
}

}  // namespace fdl::conj
