#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fdiv/ficnn.hpp"
#include "fdiv/gap.hpp"

using namespace fdl;
using conj::FicnnParams;
using conj::GapEstimate;
using conj::ScalarFn;

namespace {

// Hand-built single-layer net: f*(u) = relu(wu * (u + bs) + b0) + bs
FicnnParams tiny_net(double wu, double b0, double bs) {
  FicnnParams p;
  p.layer_count = 1;
  p.nodes_per_layer = 1;
  p.values = {wu, b0, bs};
  return p;
}

ScalarFn analytic(std::function<double(double)> f, std::function<double(double)> df) {
  return ScalarFn{std::move(f), std::move(df)};
}

FicnnParams random_net(int layers, int nodes, std::uint64_t seed, double scale = 0.1) {
  Rng rng(seed);
  return FicnnParams::init(layers, nodes, rng, scale);
}

}  // namespace

TEST_CASE("eval_fstar: single relu unit") {
  FicnnParams p = tiny_net(1.0, 0.0, 0.0);
  CHECK(conj::eval_fstar(p, 3.0) == doctest::Approx(3.0));
  CHECK(conj::eval_fstar(p, -2.0) == doctest::Approx(0.0));
}

TEST_CASE("eval_fstar: shared bias feeds both input and output") {
  FicnnParams p = tiny_net(1.0, 0.0, 1.0);
  // relu(0 + 1) + 1 = 2
  CHECK(conj::eval_fstar(p, 0.0) == doctest::Approx(2.0));
}

TEST_CASE("eval_fstar: two layers with unit weights") {
  // relu(relu(2) + 2) = 4
  FicnnParams p;
  p.layer_count = 2;
  p.nodes_per_layer = 1;
  // layer0: Wu=1, b=0; layer1: Wu=1, Wz=1, b=0; bs=0
  p.values = {1.0, 0.0, 1.0, 1.0, 0.0, 0.0};
  CHECK(conj::eval_fstar(p, 2.0) == doctest::Approx(4.0));
}

TEST_CASE("eval_fstar batch matches scalar path") {
  FicnnParams p = random_net(4, 24, 99);
  std::vector<double> us;
  for (int i = 0; i < 64; ++i) us.push_back(-8.0 + 0.25 * i);
  std::vector<double> batch(us.size());
  conj::eval_fstar_batch(p, us, batch);
  for (std::size_t i = 0; i < us.size(); ++i) {
    CHECK(batch[i] == doctest::Approx(conj::eval_fstar(p, us[i])).epsilon(1e-12));
  }
}

TEST_CASE("eval_fstar derivative matches finite differences") {
  FicnnParams p = random_net(3, 16, 5, 0.3);
  Rng rng(17);
  int checked = 0;
  for (int i = 0; i < 60 && checked < 8; ++i) {
    double u = rng.uniform(-4.0, 4.0);
    if (conj::kink_margin(p, u) < 1e-3) continue;
    double d = 0.0;
    conj::eval_fstar_grad(p, u, &d);
    double h = 1e-6;
    double num = (conj::eval_fstar(p, u + h) - conj::eval_fstar(p, u - h)) / (2.0 * h);
    CHECK(d == doctest::Approx(num).epsilon(1e-5));
    ++checked;
  }
  CHECK(checked == 8);
}

TEST_CASE("project_nonneg clips inner weights only") {
  FicnnParams p;
  p.layer_count = 2;
  p.nodes_per_layer = 1;
  p.values = {-0.5, 0.1, 0.7, -0.3, -0.2, -0.9};  // Wu0, b0, Wu1, Wz1, b1, bs
  FicnnParams q = conj::project_nonneg(p);
  CHECK(q.values[3] == doctest::Approx(0.0));   // Wz clipped
  CHECK(q.values[0] == doctest::Approx(-0.5));  // Wu untouched
  CHECK(q.values[4] == doctest::Approx(-0.2));  // bias untouched
  CHECK(q.values[5] == doctest::Approx(-0.9));  // bs untouched

  // nonnegative weights are a fixed point
  FicnnParams r = conj::project_nonneg(q);
  CHECK(r.values == q.values);

  // all-zero inner weights unchanged
  p.values[3] = 0.0;
  FicnnParams z = conj::project_nonneg(p);
  CHECK(z.values[3] == doctest::Approx(0.0));
  CHECK(z.values[0] == doctest::Approx(-0.5));
}

TEST_CASE("estimate_min_gap: exponential conjugate has zero gap at u=1") {
  ScalarFn fn = analytic([](double u) { return std::exp(u - 1.0); },
                         [](double u) { return std::exp(u - 1.0); });
  GapEstimate est = conj::estimate_min_gap(fn, 0.0, 0.05, 500);
  CHECK(std::abs(est.delta) < 1e-4);
  CHECK(est.argmin_u == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("estimate_min_gap: quadratic double") {
  ScalarFn fn = analytic([](double u) { return u * u; }, [](double u) { return 2.0 * u; });
  GapEstimate est = conj::estimate_min_gap(fn, 0.0, 0.05, 200);
  CHECK(est.delta == doctest::Approx(-0.25).epsilon(1e-9));
  CHECK(est.argmin_u == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("estimate_min_gap: relu itself has zero gap on a flat region") {
  ScalarFn fn = analytic([](double u) { return u > 0.0 ? u : 0.0; },
                         [](double u) { return u > 0.0 ? 1.0 : 0.0; });
  GapEstimate est = conj::estimate_min_gap(fn, 0.0, 0.05, 200);
  CHECK(est.delta == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(est.argmin_u >= 0.0);  // descent endpoint inside the flat region
}

TEST_CASE("estimate_min_gap: delta is recomputed at the returned argmin") {
  FicnnParams p = random_net(4, 32, 1234);
  ScalarFn fn = conj::make_scalar_fn(p);
  GapEstimate est = conj::estimate_min_gap(fn, 0.0, 0.05, 200, Interval{-10.0, 10.0});
  CHECK(est.delta == fn.value(est.argmin_u) - est.argmin_u);
}

TEST_CASE("estimate_min_gap: diverging descent reports a numeric error") {
  // Steep smooth function: eta far too large makes the descent blow up.
  ScalarFn fn = analytic([](double u) { return std::exp(u) + std::exp(-u); },
                         [](double u) { return std::exp(u) - std::exp(-u); });
  CHECK_THROWS_AS(conj::estimate_min_gap(fn, 30.0, 1e5, 400), NumericError);
}

TEST_CASE("apply_shift: bias arithmetic") {
  FicnnParams p = tiny_net(1.0, 0.0, 0.1);
  FicnnParams s = conj::apply_shift(p, 0.04);
  CHECK(s.values.back() == doctest::Approx(0.08));
}

TEST_CASE("apply_shift: zero delta leaves the function pointwise unchanged") {
  FicnnParams p = random_net(4, 32, 7);
  FicnnParams s = conj::apply_shift(p, 0.0);
  for (double u = -5.0; u <= 5.0; u += 0.5) {
    CHECK(conj::eval_fstar(s, u) == conj::eval_fstar(p, u));
  }
}

TEST_CASE("apply_shift realizes f*(u - d/2) - d/2 exactly") {
  FicnnParams p = random_net(4, 32, 21);
  double delta = -0.6;
  FicnnParams s = conj::apply_shift(p, delta);
  for (double u = -5.0; u <= 5.0; u += 0.37) {
    double expect = conj::eval_fstar(p, u - delta / 2.0) - delta / 2.0;
    CHECK(conj::eval_fstar(s, u) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("shifted quadratic double attains zero gap at 0.375") {
  // shift of u^2 by delta = -0.25: (u + 0.125)^2 + 0.125
  ScalarFn shifted = analytic(
      [](double u) { return (u + 0.125) * (u + 0.125) + 0.125; },
      [](double u) { return 2.0 * (u + 0.125); });
  GapEstimate est = conj::estimate_min_gap(shifted, 0.0, 0.05, 200);
  CHECK(std::abs(est.delta) < 1e-9);
  CHECK(est.argmin_u == doctest::Approx(0.375).epsilon(1e-6));
}

TEST_CASE("convexity_probe: relu is convex, concave parabola is not") {
  auto relu = [](double u) { return u > 0.0 ? u : 0.0; };
  // exactly convex; allow roundoff from the interpolated midpoint
  CHECK(conj::convexity_probe(relu, {-5.0, 5.0}, 2000, 3) <= 1e-12);

  auto concave = [](double u) { return -u * u; };
  CHECK(conj::convexity_probe(concave, {-1.0, 1.0}, 2000, 3) > 0.0);
}

TEST_CASE("convexity_probe: projected random networks are convex") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    FicnnParams p = random_net(1 + static_cast<int>(seed % 4) * 2, 20, seed + 100);
    double v = conj::convexity_probe(p, {-10.0, 10.0}, 2000, seed);
    CHECK(v <= 1e-6);
  }
}

TEST_CASE("convexity_probe: ficnn fast path matches generic path") {
  FicnnParams p = random_net(3, 12, 42);
  auto f = [&p](double u) { return conj::eval_fstar(p, u); };
  double a = conj::convexity_probe(f, {-4.0, 4.0}, 500, 9);
  double b = conj::convexity_probe(p, {-4.0, 4.0}, 500, 9);
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("convexity_probe requires at least 100 samples") {
  auto id = [](double u) { return u; };
  CHECK_THROWS_AS(conj::convexity_probe(id, {-1.0, 1.0}, 50, 0), ConfigError);
}

TEST_CASE("pipeline: estimate + shift yields zero gap, convexity preserved") {
  const Interval range{-10.0, 10.0};
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    int layers[] = {1, 2, 4, 7};
    int nodes[] = {25, 50, 100, 200};
    FicnnParams p = random_net(layers[seed % 4], nodes[(seed / 4) % 4], seed * 31 + 5);
    GapEstimate est = conj::estimate_min_gap(conj::make_scalar_fn(p), 0.0, 0.05, 200, range);
    FicnnParams s = conj::apply_shift(p, est.delta);

    GapEstimate re = conj::estimate_min_gap(conj::make_scalar_fn(s), 0.0, 0.05, 200, range);
    CHECK(std::abs(re.delta) <= 1e-3);

    auto [grid_gap, grid_u] = conj::gap_on_grid(s, range, 10000);
    CHECK(grid_gap >= -1e-3);

    CHECK(conj::convexity_probe(s, range, 2000, seed) <= 1e-6);
  }
}

TEST_CASE("pipeline: dominance over the observed range extended by half") {
  const Interval observed{-3.0, 7.0};
  const double width = observed.width();
  const Interval extended{observed.lo - width / 2.0, observed.hi + width / 2.0};
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    FicnnParams p = random_net(4, 50, seed + 400);
    GapEstimate est =
        conj::estimate_min_gap(conj::make_scalar_fn(p), 0.0, 0.05, 200, extended);
    FicnnParams s = conj::apply_shift(p, est.delta);
    auto [gap, at] = conj::gap_on_grid(s, extended, 10000);
    CHECK(gap >= -1e-3);
  }
}
