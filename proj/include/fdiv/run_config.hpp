#pragma once

#include <string>

#include "json.hpp"

#include "fdiv/divergence.hpp"
#include "fdiv/trainer.hpp"

namespace fdl::cli {

struct DivbenchConfig {
  std::vector<std::string> specs = {"KL", "RKL", "JS_star", "learned"};
  std::string dist_kind = "gaussian";  // gaussian | discrete
  divg::GaussianSpec p{0.0, 1.0};
  divg::GaussianSpec q{1.0, 1.0};
  std::vector<double> p_table;
  std::vector<double> q_table;
  std::vector<int> sample_counts = {10000};
  int train_steps = 2000;
  int minibatch = 256;
  double learning_rate = 1e-3;
  std::vector<int> t_hidden = {64, 64};
};

// One JSON document per run; every field has a default so a minimal
// config is {"env_id": ..., "algorithm": ...}.
struct ExperimentConfig {
  std::string env_id = "gridworld";
  train::TrainConfig train;
  int demo_count = 10;
  int expert_epochs = 300;
  double expert_stop_return = 0.0;  // 0: env default
  int random_ref_episodes = 500;
  DivbenchConfig divbench;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json effective_json(const ExperimentConfig& cfg);

// FNV-1a over the canonical effective config; names run directories.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace fdl::cli
