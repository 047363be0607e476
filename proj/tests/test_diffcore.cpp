#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fdiv/diffcore.hpp"
#include "fdiv/ficnn.hpp"
#include "fdiv/mlp.hpp"

using namespace fdl;
using diff::Expression;
using diff::ParamVector;
using diff::Tape;

namespace {

ParamVector make_params(std::vector<double> values, const std::string& name = "p") {
  ParamVector pv;
  pv.layout = diff::ParamLayout::build({{name, 0, values.size()}});
  pv.values = std::move(values);
  return pv;
}

const Expression square_expr = [](Tape& t, std::span<const Tape::NodeId> p,
                                  std::span<const double>) {
  return t.square(p[0]);
};

}  // namespace

TEST_CASE("evaluate: hand examples") {
  // x^2 at x = 3
  CHECK(diff::evaluate(square_expr, make_params({3.0}), {}) == doctest::Approx(9.0));

  // relu(w*x + b) with w=1, b=0, x=-2 -> 0
  Expression relu_affine = [](Tape& t, std::span<const Tape::NodeId> p,
                              std::span<const double> in) {
    Tape::NodeId ws[] = {p[0]};
    return t.relu(t.affine_input(ws, in, p[1]));
  };
  ParamVector wb = make_params({1.0, 0.0});
  double x = -2.0;
  CHECK(diff::evaluate(relu_affine, wb, {&x, 1}) == doctest::Approx(0.0));

  // tanh(0) = 0
  Expression tanh_expr = [](Tape& t, std::span<const Tape::NodeId> p,
                            std::span<const double>) { return t.tanh_fn(p[0]); };
  CHECK(diff::evaluate(tanh_expr, make_params({0.0}), {}) == doctest::Approx(0.0));
}

TEST_CASE("evaluate is deterministic") {
  ParamVector p = make_params({1.2345});
  double a = diff::evaluate(square_expr, p, {});
  double b = diff::evaluate(square_expr, p, {});
  CHECK(a == b);
}

TEST_CASE("gradients: hand examples") {
  // d(x^2)/dx at 3 = 6
  auto g = diff::gradients(square_expr, make_params({3.0}), {});
  CHECK(g.value == doctest::Approx(9.0));
  CHECK(g.gradient[0] == doctest::Approx(6.0));

  // relu inactive branch: derivative 0 at u = -2
  Expression relu_expr = [](Tape& t, std::span<const Tape::NodeId> p,
                            std::span<const double>) { return t.relu(p[0]); };
  auto gr = diff::gradients(relu_expr, make_params({-2.0}), {});
  CHECK(gr.gradient[0] == doctest::Approx(0.0));

  // d(e^(u-1))/du at u = 1 -> 1
  Expression kl_conj = [](Tape& t, std::span<const Tape::NodeId> p,
                          std::span<const double>) {
    return t.exp_fn(t.add_const(p[0], -1.0));
  };
  auto gk = diff::gradients(kl_conj, make_params({1.0}), {});
  CHECK(gk.gradient[0] == doctest::Approx(1.0));
}

TEST_CASE("gradients: non-finite intermediate names the segment") {
  // 1/x at x = 1e-200: finite value, overflowing derivative
  Expression inv_expr = [](Tape& t, std::span<const Tape::NodeId> p,
                           std::span<const double>) {
    return t.div(t.constant(1.0), p[0]);
  };
  ParamVector p = make_params({1e-200}, "weights");
  CHECK_THROWS_AS(diff::gradients(inv_expr, p, {}), NumericError);
  try {
    diff::gradients(inv_expr, p, {});
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("weights") != std::string::npos);
  }

  // non-finite forward value is also rejected
  Expression log_expr = [](Tape& t, std::span<const Tape::NodeId> p,
                           std::span<const double>) { return t.log_fn(p[0]); };
  CHECK_THROWS_AS(diff::gradients(log_expr, make_params({0.0}), {}), NumericError);
}

TEST_CASE("finite_diff_check: quadratic is exact") {
  CHECK(diff::finite_diff_check(square_expr, make_params({1.7}), {}, 1e-5) < 1e-8);
}

TEST_CASE("finite_diff_check: eps outside [1e-7, 1e-3] rejected") {
  CHECK_THROWS_AS(diff::finite_diff_check(square_expr, make_params({1.0}), {}, 1e-2),
                  ConfigError);
}

TEST_CASE("finite_diff_check: 2-layer tanh mlp") {
  nets::Mlp mlp("m", {3, 8, 1}, {nets::Act::Tanh, nets::Act::Tanh});
  Rng rng(7);
  ParamVector pv;
  pv.layout = diff::ParamLayout::build(mlp.segments());
  pv.values.assign(mlp.param_count(), 0.0);
  mlp.init_params(pv.values, rng);

  Expression expr = [&mlp](Tape& t, std::span<const Tape::NodeId> p,
                           std::span<const double> in) {
    return mlp.build(t, p, in)[0];
  };
  std::vector<double> input{0.3, -0.4, 1.1};
  CHECK(diff::finite_diff_check(expr, pv, input, 1e-5) < 1e-4);
}

TEST_CASE("finite_diff_check: ficnn away from kinks") {
  Rng rng(11);
  conj::FicnnParams fp = conj::FicnnParams::init(3, 16, rng, 0.3);
  ParamVector pv;
  pv.layout = fp.make_layout();
  pv.values = fp.values;

  Expression expr = [&fp](Tape& t, std::span<const Tape::NodeId> p,
                          std::span<const double> in) {
    return conj::build_fstar(fp, t, p, t.constant(in[0]));
  };
  int checked = 0;
  for (int i = 0; i < 40 && checked < 5; ++i) {
    double u = rng.uniform(-3.0, 3.0);
    if (conj::kink_margin(fp, u) < 1e-3) continue;
    std::vector<double> input{u};
    CHECK(diff::finite_diff_check(expr, pv, input, 1e-5) < 1e-4);
    ++checked;
  }
  CHECK(checked == 5);
}

TEST_CASE("tape forward value matches plain mlp forward") {
  nets::Mlp mlp("m", {4, 16, 16, 2}, {nets::Act::Tanh, nets::Act::Tanh, nets::Act::Linear});
  Rng rng(3);
  std::vector<double> params(mlp.param_count());
  mlp.init_params(params, rng);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> input(4);
    for (double& x : input) x = rng.uniform(-2.0, 2.0);
    std::vector<double> plain = mlp.forward(params, input);
    Tape t;
    std::vector<Tape::NodeId> ids;
    for (double v : params) ids.push_back(t.leaf(v));
    auto nodes = mlp.build(t, ids, input);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      CHECK(t.value(nodes[k]) == doctest::Approx(plain[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("tangent sweep computes directional derivatives") {
  // f(a, b) = a*b + tanh(a); df = [b + 1 - tanh(a)^2, a] . v
  Tape t;
  auto a = t.leaf(0.7);
  auto b = t.leaf(-1.3);
  auto out = t.add(t.mul(a, b), t.tanh_fn(a));
  std::vector<double> tan(t.size(), 0.0);
  tan[static_cast<std::size_t>(a)] = 2.0;
  tan[static_cast<std::size_t>(b)] = -1.0;
  t.tangent(tan);
  double th = std::tanh(0.7);
  double expect = (-1.3 + 1.0 - th * th) * 2.0 + 0.7 * (-1.0);
  CHECK(tan[static_cast<std::size_t>(out)] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("adam: first-step magnitude") {
  ParamVector p = make_params({0.0});
  diff::AdamConfig cfg;
  cfg.learning_rate = 1e-3;
  auto state = diff::AdamState::init(1, cfg);
  std::vector<double> grad{1.0};
  auto [p2, s2] = diff::adam_step(p, grad, state, diff::Direction::Descend);
  CHECK(p2.values[0] == doctest::Approx(-1e-3).epsilon(1e-6));
  CHECK(s2.step_count == 1);
}

TEST_CASE("adam: zero gradient leaves everything unchanged") {
  ParamVector p = make_params({0.5, -0.25});
  auto state = diff::AdamState::init(2);
  std::vector<double> grad{0.0, 0.0};
  auto [p2, s2] = diff::adam_step(p, grad, state, diff::Direction::Descend);
  CHECK(p2.values == p.values);
  CHECK(s2.first_moment == std::vector<double>{0.0, 0.0});
  CHECK(s2.second_moment == std::vector<double>{0.0, 0.0});
}

TEST_CASE("adam: ascend with g equals descend with -g") {
  ParamVector p = make_params({0.1, 0.2, 0.3});
  std::vector<double> grad{0.5, -1.5, 2.0};
  std::vector<double> neg_grad{-0.5, 1.5, -2.0};
  auto [pa, sa] = diff::adam_step(p, grad, diff::AdamState::init(3), diff::Direction::Ascend);
  auto [pd, sd] = diff::adam_step(p, neg_grad, diff::AdamState::init(3), diff::Direction::Descend);
  for (int i = 0; i < 3; ++i) CHECK(pa.values[i] == doctest::Approx(pd.values[i]).epsilon(1e-15));
}

TEST_CASE("adam: ascent increases a linear objective") {
  // f(p) = 3p; repeated ascent steps must strictly increase f
  ParamVector p = make_params({0.0});
  auto state = diff::AdamState::init(1);
  double prev = 0.0;
  std::vector<double> grad{3.0};
  for (int i = 0; i < 5; ++i) {
    auto [p2, s2] = diff::adam_step(p, grad, state, diff::Direction::Ascend);
    p = std::move(p2);
    state = std::move(s2);
    CHECK(3.0 * p.values[0] > prev);
    prev = 3.0 * p.values[0];
  }
}

TEST_CASE("adam: zero learning rate rejected") {
  ParamVector p = make_params({0.0});
  diff::AdamConfig cfg;
  cfg.learning_rate = 0.0;
  auto state = diff::AdamState::init(1, cfg);
  std::vector<double> grad{1.0};
  CHECK_THROWS_AS(diff::adam_step(p, grad, state, diff::Direction::Descend), ConfigError);
}

TEST_CASE("backward supports repeated passes over one build") {
  Tape t;
  auto a = t.leaf(2.0);
  auto b = t.leaf(5.0);
  auto out = t.mul(a, b);
  std::vector<double> adj;
  t.backward(out, adj);
  CHECK(adj[static_cast<std::size_t>(a)] == doctest::Approx(5.0));
  t.backward(out, adj);
  CHECK(adj[static_cast<std::size_t>(a)] == doctest::Approx(5.0));
  CHECK(adj[static_cast<std::size_t>(b)] == doctest::Approx(2.0));
}
