#include "fdiv/diffcore.hpp"

#include <cmath>

#include "fdiv/common.hpp"

namespace fdl::diff {

namespace {

Tape::NodeId build(const Expression& expr, Tape& tape, const ParamVector& params,
                   std::span<const double> inputs, std::vector<Tape::NodeId>& param_nodes) {
  param_nodes.clear();
  param_nodes.reserve(params.size());
  for (double v : params.values) param_nodes.push_back(tape.leaf(v));
  return expr(tape, param_nodes, inputs);
}

}  // namespace

double evaluate(const Expression& expr, const ParamVector& params,
                std::span<const double> inputs) {
  if (!all_finite(inputs)) throw ConfigError("evaluate: non-finite input");
  params.validate();
  Tape tape;
  std::vector<Tape::NodeId> param_nodes;
  Tape::NodeId out = build(expr, tape, params, inputs, param_nodes);
  return tape.value(out);
}

GradResult gradients(const Expression& expr, const ParamVector& params,
                     std::span<const double> inputs) {
  if (!all_finite(inputs)) throw ConfigError("gradients: non-finite input");
  params.validate();
  Tape tape;
  std::vector<Tape::NodeId> param_nodes;
  Tape::NodeId out = build(expr, tape, params, inputs, param_nodes);

  GradResult res;
  res.value = tape.value(out);
  if (!std::isfinite(res.value)) {
    throw NumericError("gradients: non-finite forward value");
  }
  std::vector<double> adj;
  tape.backward(out, adj);
  res.gradient.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    double g = adj[static_cast<std::size_t>(param_nodes[i])];
    if (!std::isfinite(g)) {
      throw NumericError("gradients: non-finite gradient in segment '" +
                         params.layout.segment_of(i) + "'");
    }
    res.gradient[i] = g;
  }
  return res;
}

double finite_diff_check(const Expression& expr, const ParamVector& params,
                         std::span<const double> inputs, double eps) {
  if (eps < 1e-7 || eps > 1e-3) {
    throw ConfigError("finite_diff_check: eps must lie in [1e-7, 1e-3]");
  }
  GradResult analytic = gradients(expr, params, inputs);
  ParamVector probe = params;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    double saved = probe.values[i];
    probe.values[i] = saved + eps;
    double up = evaluate(expr, probe, inputs);
    probe.values[i] = saved - eps;
    double down = evaluate(expr, probe, inputs);
    probe.values[i] = saved;
    double numeric = (up - down) / (2.0 * eps);
    double a = analytic.gradient[i];
    double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
    worst = std::max(worst, err);
  }
  return worst;
}

AdamState AdamState::init(std::size_t dim, AdamConfig cfg) {
  AdamState s;
  s.first_moment.assign(dim, 0.0);
  s.second_moment.assign(dim, 0.0);
  s.step_count = 0;
  s.config = cfg;
  return s;
}

void adam_step_inplace(std::span<double> params, std::span<const double> grad,
                       AdamState& state, Direction dir) {
  if (state.config.learning_rate <= 0.0) {
    throw ConfigError("adam_step: learning_rate must be positive");
  }
  if (grad.size() != params.size() || state.first_moment.size() != params.size()) {
    throw ConfigError("adam_step: gradient/state length mismatch");
  }
  if (!all_finite(grad)) throw NumericError("adam_step: non-finite gradient");

  const AdamConfig& c = state.config;
  state.step_count += 1;
  double t = static_cast<double>(state.step_count);
  double bc1 = 1.0 - std::pow(c.beta1, t);
  double bc2 = 1.0 - std::pow(c.beta2, t);
  double sign = dir == Direction::Descend ? -1.0 : 1.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    double g = grad[i];
    state.first_moment[i] = c.beta1 * state.first_moment[i] + (1.0 - c.beta1) * g;
    state.second_moment[i] = c.beta2 * state.second_moment[i] + (1.0 - c.beta2) * g * g;
    double mhat = state.first_moment[i] / bc1;
    double vhat = state.second_moment[i] / bc2;
    params[i] += sign * c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
  }
}

std::pair<ParamVector, AdamState> adam_step(const ParamVector& params,
                                            std::span<const double> grad,
                                            AdamState state, Direction dir) {
  ParamVector out = params;
  adam_step_inplace(out.span(), grad, state, dir);
  return {std::move(out), std::move(state)};
}

}  // namespace fdl::diff
