#pragma once

#include <deque>
#include <functional>
#include <optional>

#include "fdiv/discriminator.hpp"
#include "fdiv/env.hpp"
#include "fdiv/trpo.hpp"

namespace fdl::train {

enum class Algorithm { Fgail, Gail, RklVim, Bc };

Algorithm algorithm_from_string(const std::string& name);
std::string to_string(Algorithm a);
divg::DivergenceKind divergence_of(Algorithm a);

struct TrainConfig {
  Algorithm algorithm = Algorithm::Fgail;
  int epochs = 300;
  int pairs_per_epoch = 200;  // demo batch matches the learner batch
  diff::AdamConfig adam_reward;
  diff::AdamConfig adam_ficnn;
  TrpoConfig trpo;
  GaeConfig gae;
  ValueFitConfig value_fit;
  conj::GapConfig gap;
  int ficnn_layers = 4;
  int ficnn_nodes = 100;
  double ficnn_init_scale = 1.0;
  double entropy_coeff = 1e-3;
  std::uint64_t seed = 0;
  int eval_episodes = 50;
  std::optional<double> stop_at_normalized;  // early stop once sustained

  // behavior cloning
  double bc_learning_rate = 1e-3;
  int bc_max_epochs = 500;
  int bc_patience = 10;
  int bc_minibatch = 64;
};

struct EpochReport {
  int epoch = 0;
  double objective_value = 0.0;  // divergence estimate mean_E[T] - mean_L[f*(T)]
  double mean_env_return = 0.0;
  double normalized_return = 0.0;
  double gap_delta = 0.0;  // pre-shift gap (constant min gap for baselines)
  double entropy = 0.0;

  bool operator==(const EpochReport&) const = default;
};

// Extra per-epoch data for metric sinks; pointers are valid only during
// the sink call.
struct EpochContext {
  const std::vector<std::vector<double>>* expert_batch = nullptr;
  const std::vector<std::vector<double>>* learner_batch = nullptr;
  const std::vector<double>* learner_u = nullptr;
  double u_tilde = 0.0;
  const Discriminator* discriminator = nullptr;
  const nets::PolicyNet* policy = nullptr;
};

using EpochSink = std::function<void(const EpochReport&, const EpochContext&)>;

struct ScoreRef {
  double expert_mean = 1.0;
  double random_mean = 0.0;
};

struct TrainResult {
  nets::PolicyNet policy;
  nets::ValueNet value;
  std::optional<Discriminator> discriminator;
  std::vector<EpochReport> reports;
  std::vector<double> final_u_pool;  // learner inputs from the last <= 5 epochs
  int final_u_epochs = 0;
  Interval observed_u_range{0.0, 0.0};
  int epochs_run = 0;
};

// Alternating loop: sample learner pairs, one discriminator ascent, the
// zero-gap shift (learned conjugate only), then the trust-region policy
// step on rewards f*(T(s,a)) plus the entropy bonus.
TrainResult train(const TrainConfig& config, const envs::Env& env,
                  const envs::DemoSet& demos, const ScoreRef& refs,
                  const EpochSink& sink = {});

struct BcReport {
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  int epochs_run = 0;
  bool degenerate = false;
  int train_trajectories = 0;
  int val_trajectories = 0;
};

// Max-likelihood fit on a 70/30 trajectory split with early stopping on
// the validation loss.
nets::PolicyNet train_bc(const TrainConfig& config, const envs::Env& env,
                         const envs::DemoSet& demos, std::uint64_t split_seed,
                         BcReport* report = nullptr);

// Plain TRPO on the environment reward (expert training path).
struct RlResult {
  nets::PolicyNet policy;
  nets::ValueNet value;
  std::vector<EpochReport> reports;
  int epochs_run = 0;
};

RlResult train_rl(const TrainConfig& config, const envs::Env& env,
                  std::optional<double> stop_at_return, const EpochSink& sink = {});

// Variational divergence estimation on 1-d sample sets: minibatch ascent
// of mean_P[T] - mean_Q[f*(T)], jointly over (T, f*) when the conjugate is
// learned (with the zero-gap shift after every step).
struct EstimatorConfig {
  divg::DivergenceKind kind = divg::DivergenceKind::KL;
  int steps = 2000;
  int minibatch = 256;
  double learning_rate = 1e-3;
  std::vector<int> t_hidden = {64, 64};
  int ficnn_layers = 4;
  int ficnn_nodes = 100;
  double ficnn_init_scale = 1.0;
  conj::GapConfig gap;
  std::uint64_t seed = 0;
};

struct EstimatorResult {
  double estimate = 0.0;        // full-sample objective after training
  double standard_error = 0.0;  // of the two sample means
  Discriminator discriminator;
};

EstimatorResult train_variational_estimator(std::span<const double> samples_p,
                                            std::span<const double> samples_q,
                                            const EstimatorConfig& config);

}  // namespace fdl::train
