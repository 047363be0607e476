#pragma once

#include "fdiv/diffcore.hpp"
#include "fdiv/env.hpp"
#include "fdiv/nets.hpp"

namespace fdl::train {

struct TrpoConfig {
  double max_kl = 0.01;
  int cg_iters = 10;
  double cg_damping = 0.1;
  int backtrack_steps = 10;
};

struct GaeConfig {
  double gamma = 0.99;
  double lambda = 0.95;
};

struct ValueFitConfig {
  double learning_rate = 1e-3;
  int epochs = 5;
  int minibatch = 64;
};

// A_t = sum_l (gamma*lambda)^l delta_{t+l},
// delta_t = r_t + gamma V(s_{t+1}) - V(s_t), V(terminal) = 0.
std::vector<double> gae_advantages(std::span<const double> rewards,
                                   std::span<const double> values, double gamma,
                                   double lambda);
std::vector<double> gae_advantages(const envs::Trajectory& traj,
                                   const nets::ValueNet& value, double gamma,
                                   double lambda,
                                   std::span<const double> per_step_rewards);

struct TrpoReport {
  bool accepted = false;
  bool cg_failed = false;
  double mean_kl = 0.0;
  double improvement = 0.0;
  int backtracks = 0;
  double mean_entropy = 0.0;  // entropy of the data-generating policy
};

// Natural-gradient step on the surrogate E[ratio * advantage] under a KL
// trust region, with backtracking line search; rejected steps leave the
// policy unchanged. Fisher-vector products come from a tangent sweep into
// the categorical Fisher followed by an adjoint sweep, all on one batch
// tape built at the old parameters. The value net is refit afterwards by
// Adam regression on the discounted empirical returns.
TrpoReport trpo_step(nets::PolicyNet& policy, nets::ValueNet& value,
                     diff::AdamState& value_adam,
                     const std::vector<envs::Trajectory>& trajectories,
                     const std::vector<std::vector<double>>& per_step_rewards,
                     const TrpoConfig& trpo, const GaeConfig& gae,
                     const ValueFitConfig& value_fit, Rng& rng);

}  // namespace fdl::train
