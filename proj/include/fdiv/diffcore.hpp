#pragma once

#include <functional>
#include <span>
#include <utility>

#include "fdiv/param.hpp"
#include "fdiv/tape.hpp"

namespace fdl::diff {

// A differentiable expression builds its graph on the tape given leaf nodes
// for the parameters and raw input values, and returns the output node.
using Expression =
    std::function<Tape::NodeId(Tape&, std::span<const Tape::NodeId> params,
                               std::span<const double> inputs)>;

// Deterministic forward value.
double evaluate(const Expression& expr, const ParamVector& params,
                std::span<const double> inputs);

// Forward value plus reverse-mode gradient over the parameter vector.
// Throws NumericError naming the offending segment on non-finite entries.
GradResult gradients(const Expression& expr, const ParamVector& params,
                     std::span<const double> inputs);

// Max over parameters of |analytic - central difference| / max(1, |analytic|).
double finite_diff_check(const Expression& expr, const ParamVector& params,
                         std::span<const double> inputs, double eps);

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  long step_count = 0;
  AdamConfig config;

  static AdamState init(std::size_t dim, AdamConfig cfg = {});
};

enum class Direction { Ascend, Descend };

// Standard Adam update with bias correction; state.step_count increments by 1.
std::pair<ParamVector, AdamState> adam_step(const ParamVector& params,
                                            std::span<const double> grad,
                                            AdamState state, Direction dir);

// Workhorse variant used by the training loops.
void adam_step_inplace(std::span<double> params, std::span<const double> grad,
                       AdamState& state, Direction dir);

}  // namespace fdl::diff
