#include "fdiv/run_config.hpp"

#include <fstream>

namespace fdl::cli {

namespace {

using nlohmann::json;

diff::AdamConfig parse_adam(const json& j, diff::AdamConfig defaults) {
  diff::AdamConfig out = defaults;
  out.learning_rate = j.value("lr", out.learning_rate);
  out.beta1 = j.value("beta1", out.beta1);
  out.beta2 = j.value("beta2", out.beta2);
  out.epsilon = j.value("epsilon", out.epsilon);
  return out;
}

json adam_json(const diff::AdamConfig& c) {
  return {{"lr", c.learning_rate},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"epsilon", c.epsilon}};
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  cfg.env_id = j.value("env_id", cfg.env_id);
  if (cfg.env_id != "gridworld" && cfg.env_id != "cartpole_lite") {
    throw ConfigError("config: unknown env_id '" + cfg.env_id + "'");
  }

  // environment-dependent defaults
  bool cartpole = cfg.env_id == "cartpole_lite";
  cfg.train.pairs_per_epoch = cartpole ? 2000 : 200;
  cfg.train.epochs = 300;

  cfg.train.algorithm =
      train::algorithm_from_string(j.value("algorithm", std::string("fgail")));
  cfg.train.epochs = j.value("epochs", cfg.train.epochs);
  cfg.train.pairs_per_epoch = j.value("pairs_per_epoch", cfg.train.pairs_per_epoch);
  cfg.train.entropy_coeff = j.value("entropy_coeff", cfg.train.entropy_coeff);
  cfg.train.seed = j.value("seed", cfg.train.seed);
  cfg.train.eval_episodes = j.value("eval_episodes", cfg.train.eval_episodes);
  if (j.contains("stop_at_normalized") && !j.at("stop_at_normalized").is_null()) {
    cfg.train.stop_at_normalized = j.at("stop_at_normalized").get<double>();
  }

  if (j.contains("adam_reward")) {
    cfg.train.adam_reward = parse_adam(j.at("adam_reward"), cfg.train.adam_reward);
  }
  if (j.contains("adam_ficnn")) {
    cfg.train.adam_ficnn = parse_adam(j.at("adam_ficnn"), cfg.train.adam_ficnn);
  }
  if (j.contains("trpo")) {
    const json& t = j.at("trpo");
    cfg.train.trpo.max_kl = t.value("max_kl", cfg.train.trpo.max_kl);
    cfg.train.trpo.cg_iters = t.value("cg_iters", cfg.train.trpo.cg_iters);
    cfg.train.trpo.cg_damping = t.value("cg_damping", cfg.train.trpo.cg_damping);
    cfg.train.trpo.backtrack_steps =
        t.value("backtrack_steps", cfg.train.trpo.backtrack_steps);
  }
  if (j.contains("gae")) {
    const json& g = j.at("gae");
    cfg.train.gae.gamma = g.value("gamma", cfg.train.gae.gamma);
    cfg.train.gae.lambda = g.value("lambda", cfg.train.gae.lambda);
    if (cfg.train.gae.gamma < 0.0 || cfg.train.gae.gamma > 1.0 ||
        cfg.train.gae.lambda < 0.0 || cfg.train.gae.lambda > 1.0) {
      throw ConfigError("config: gae gamma/lambda must lie in [0, 1]");
    }
  }
  if (j.contains("value_fit")) {
    const json& v = j.at("value_fit");
    cfg.train.value_fit.learning_rate =
        v.value("lr", cfg.train.value_fit.learning_rate);
    cfg.train.value_fit.epochs = v.value("epochs", cfg.train.value_fit.epochs);
    cfg.train.value_fit.minibatch = v.value("minibatch", cfg.train.value_fit.minibatch);
  }
  if (j.contains("gap")) {
    const json& g = j.at("gap");
    cfg.train.gap.eta = g.value("eta", cfg.train.gap.eta);
    cfg.train.gap.iterations = g.value("iterations", cfg.train.gap.iterations);
    cfg.train.gap.u0 = g.value("u0", cfg.train.gap.u0);
  }
  if (j.contains("ficnn")) {
    const json& f = j.at("ficnn");
    cfg.train.ficnn_layers = f.value("layers", cfg.train.ficnn_layers);
    cfg.train.ficnn_nodes = f.value("nodes", cfg.train.ficnn_nodes);
    cfg.train.ficnn_init_scale = f.value("init_scale", cfg.train.ficnn_init_scale);
    if (cfg.train.ficnn_layers < 1 || cfg.train.ficnn_nodes < 1) {
      throw ConfigError("config: ficnn layers/nodes must be >= 1");
    }
  }
  if (j.contains("bc")) {
    const json& b = j.at("bc");
    cfg.train.bc_learning_rate = b.value("lr", cfg.train.bc_learning_rate);
    cfg.train.bc_max_epochs = b.value("max_epochs", cfg.train.bc_max_epochs);
    cfg.train.bc_patience = b.value("patience", cfg.train.bc_patience);
    cfg.train.bc_minibatch = b.value("minibatch", cfg.train.bc_minibatch);
  }

  cfg.demo_count = j.value("demo_count", cfg.demo_count);
  if (cfg.demo_count < 1) throw ConfigError("config: demo_count must be >= 1");
  cfg.expert_epochs = j.value("expert_epochs", cfg.expert_epochs);
  cfg.expert_stop_return = j.value("expert_stop_return", cfg.expert_stop_return);
  cfg.random_ref_episodes = j.value("random_ref_episodes", cfg.random_ref_episodes);

  if (j.contains("divbench")) {
    const json& d = j.at("divbench");
    DivbenchConfig& db = cfg.divbench;
    db.specs = d.value("specs", db.specs);
    db.dist_kind = d.value("distribution", db.dist_kind);
    if (db.dist_kind != "gaussian" && db.dist_kind != "discrete") {
      throw ConfigError("config: divbench distribution must be gaussian or discrete");
    }
    if (d.contains("p")) {
      if (db.dist_kind == "gaussian") {
        db.p.mean = d.at("p").value("mean", 0.0);
        db.p.std_dev = d.at("p").value("std", 1.0);
      } else {
        db.p_table = d.at("p").get<std::vector<double>>();
      }
    }
    if (d.contains("q")) {
      if (db.dist_kind == "gaussian") {
        db.q.mean = d.at("q").value("mean", 1.0);
        db.q.std_dev = d.at("q").value("std", 1.0);
      } else {
        db.q_table = d.at("q").get<std::vector<double>>();
      }
    }
    db.sample_counts = d.value("sample_counts", db.sample_counts);
    db.train_steps = d.value("train_steps", db.train_steps);
    db.minibatch = d.value("minibatch", db.minibatch);
    db.learning_rate = d.value("lr", db.learning_rate);
    db.t_hidden = d.value("t_hidden", db.t_hidden);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json effective_json(const ExperimentConfig& cfg) {
  const train::TrainConfig& t = cfg.train;
  json j{
      {"env_id", cfg.env_id},
      {"algorithm", train::to_string(t.algorithm)},
      {"epochs", t.epochs},
      {"pairs_per_epoch", t.pairs_per_epoch},
      {"entropy_coeff", t.entropy_coeff},
      {"seed", t.seed},
      {"eval_episodes", t.eval_episodes},
      {"adam_reward", adam_json(t.adam_reward)},
      {"adam_ficnn", adam_json(t.adam_ficnn)},
      {"trpo",
       {{"max_kl", t.trpo.max_kl},
        {"cg_iters", t.trpo.cg_iters},
        {"cg_damping", t.trpo.cg_damping},
        {"backtrack_steps", t.trpo.backtrack_steps}}},
      {"gae", {{"gamma", t.gae.gamma}, {"lambda", t.gae.lambda}}},
      {"value_fit",
       {{"lr", t.value_fit.learning_rate},
        {"epochs", t.value_fit.epochs},
        {"minibatch", t.value_fit.minibatch}}},
      {"gap", {{"eta", t.gap.eta}, {"iterations", t.gap.iterations}, {"u0", t.gap.u0}}},
      {"ficnn",
       {{"layers", t.ficnn_layers},
        {"nodes", t.ficnn_nodes},
        {"init_scale", t.ficnn_init_scale}}},
      {"bc",
       {{"lr", t.bc_learning_rate},
        {"max_epochs", t.bc_max_epochs},
        {"patience", t.bc_patience},
        {"minibatch", t.bc_minibatch}}},
      {"demo_count", cfg.demo_count},
      {"expert_epochs", cfg.expert_epochs},
      {"expert_stop_return", cfg.expert_stop_return},
      {"random_ref_episodes", cfg.random_ref_episodes},
  };
  if (t.stop_at_normalized) j["stop_at_normalized"] = *t.stop_at_normalized;
  return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::string dump = effective_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf, 8);  // first 8 hex chars
}

}  // namespace fdl::cli
