#pragma once

#include <utility>

#include "fdiv/divergence.hpp"
#include "fdiv/mlp.hpp"

namespace fdl::nets {

// state ++ one-hot(action); with num_actions == 0 the state passes through
// unchanged (1-d divergence benchmarking inputs).
std::vector<double> encode_state_action(std::span<const double> state, int action,
                                        int num_actions);

// Stochastic categorical policy: two tanh hidden layers, logit head.
struct PolicyNet {
  int obs_dim = 0;
  int num_actions = 0;
  Mlp mlp;
  diff::ParamVector params;

  static PolicyNet create(int obs_dim, int num_actions, Rng& rng,
                          std::vector<int> hidden = {100, 100});

  std::vector<double> logits(std::span<const double> state) const;
  std::vector<double> distribution(std::span<const double> state) const;
  std::pair<double, double> log_prob_and_entropy(std::span<const double> state,
                                                 int action) const;
  int sample_action(std::span<const double> state, Rng& rng) const;
};

// Scalar state-value head with the policy architecture.
struct ValueNet {
  int obs_dim = 0;
  Mlp mlp;
  diff::ParamVector params;

  static ValueNet create(int obs_dim, Rng& rng, std::vector<int> hidden = {100, 100});

  double value(std::span<const double> state) const;
};

// Reward signal T: three hidden layers, tanh on the first two, then a
// scalar output mapped through the divergence's final activation.
struct RewardNet {
  int obs_dim = 0;
  int num_actions = 0;
  divg::FinalActivation activation = divg::FinalActivation::Identity;
  Mlp mlp;
  diff::ParamVector params;

  static RewardNet create(int obs_dim, int num_actions,
                          divg::FinalActivation activation, Rng& rng,
                          std::vector<int> hidden = {100, 100, 100});

  int input_dim() const { return obs_dim + num_actions; }
  double raw_output(std::span<const double> encoded) const;
  // u = activation(raw); checked against the spec's conjugate domain.
  double signal(std::span<const double> state, int action,
                const divg::DivergenceSpec& spec) const;
  double signal_encoded(std::span<const double> encoded,
                        const divg::DivergenceSpec& spec) const;
};

std::vector<double> softmax(std::span<const double> logits);

}  // namespace fdl::nets
