// Command-line front end: expert training, demo generation, imitation
// training, evaluation, divergence benchmarking, and conjugate export.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "fdiv/checkpoint.hpp"
#include "fdiv/metrics.hpp"
#include "fdiv/run_config.hpp"
#include "fdiv/trainer.hpp"

#ifndef FDIV_GIT_DESCRIBE
#define FDIV_GIT_DESCRIBE "unknown"
#endif

namespace {

using namespace fdl;
using nlohmann::json;
namespace fs = std::filesystem;

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("FDIV_LOG");
  if (env == nullptr) return LogLevel::Info;
  std::string s(env);
  if (s == "error") return LogLevel::Error;
  if (s == "debug") return LogLevel::Debug;
  return LogLevel::Info;
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::Info) std::cerr << "[fdiv] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::Debug) std::cerr << "[fdiv:debug] " << msg << "\n";
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::string& header) : out_(path) {
    if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
    out_ << header << "\n";
    out_.flush();
  }

  void row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      if (!first) out_ << ",";
      out_ << fmt(v);
      first = false;
    }
    out_ << "\n";
    out_.flush();
  }

 private:
  std::ofstream out_;
};

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << "\n";
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
  return j;
}

struct PolicyHandle {
  std::unique_ptr<envs::Policy> policy;
  std::string env_id;
};

PolicyHandle load_policy_any(const std::string& path) {
  PolicyHandle h;
  std::string kind = io::checkpoint_kind(path);
  if (kind == "tabular") {
    auto table = io::load_tabular(path, &h.env_id);
    h.policy = std::make_unique<envs::TabularPolicy>(std::move(table));
  } else if (kind == "policy") {
    auto net = std::make_unique<nets::PolicyNet>(io::load_policy(path, &h.env_id));
    struct Owning : envs::Policy {
      std::unique_ptr<nets::PolicyNet> net;
      explicit Owning(std::unique_ptr<nets::PolicyNet> n) : net(std::move(n)) {}
      int act(std::span<const double> s, Rng& rng) const override {
        return net->sample_action(s, rng);
      }
    };
    h.policy = std::make_unique<Owning>(std::move(net));
  } else {
    throw ConfigError("checkpoint '" + path + "' holds kind '" + kind +
                      "', expected a policy");
  }
  return h;
}

// ---------------------------------------------------------------- expert --

int cmd_expert(const cli::ExperimentConfig& cfg, const std::string& out_dir) {
  auto env = envs::make_env(cfg.env_id);
  fs::create_directories(out_dir);
  fs::path ckpt = fs::path(out_dir) / "expert.json";
  std::uint64_t seed = cfg.train.seed;

  if (cfg.env_id == "gridworld") {
    envs::Gridworld gw;
    auto vi = envs::value_iteration(gw.tabular(), gw.gamma(), 1e-10);
    io::save_tabular(ckpt.string(), vi.policy, gw.id());
    log_info("gridworld expert solved by value iteration (" +
             std::to_string(vi.sweeps) + " sweeps)");
  } else {
    train::TrainConfig tc = cfg.train;
    tc.epochs = cfg.expert_epochs;
    tc.seed = seed;
    double stop = cfg.expert_stop_return > 0.0 ? cfg.expert_stop_return : 197.0;
    log_info("training cartpole expert (stop at mean return " + fmt(stop) + ")");
    auto rl = train::train_rl(tc, *env, stop);
    log_info("expert trained for " + std::to_string(rl.epochs_run) + " epochs");
    io::save_policy(ckpt.string(), rl.policy, env->id());
  }

  PolicyHandle h = load_policy_any(ckpt.string());
  envs::ReturnStats expert_stats =
      envs::evaluate_policy(*env, *h.policy, cfg.train.eval_episodes,
                            Rng::derive(seed, 101));
  envs::RandomPolicy rnd(env->num_actions());
  envs::ReturnStats random_stats = envs::evaluate_policy(
      *env, rnd, cfg.random_ref_episodes, Rng::derive(seed, 103));

  json score{{"env_id", env->id()},
             {"episodes", expert_stats.episodes},
             {"expert_mean", expert_stats.mean},
             {"expert_std", expert_stats.std_dev},
             {"expert_mean_discounted", expert_stats.mean_discounted},
             {"random_episodes", random_stats.episodes},
             {"random_mean", random_stats.mean},
             {"random_std", random_stats.std_dev}};
  write_json_file(fs::path(out_dir) / "expert_score.json", score);
  std::cout << "expert mean return " << fmt(expert_stats.mean) << " +- "
            << fmt(expert_stats.std_dev) << " over " << expert_stats.episodes
            << " episodes (random " << fmt(random_stats.mean) << ")\n";
  return 0;
}

// ----------------------------------------------------------------- demos --

int cmd_demos(const cli::ExperimentConfig& cfg, const std::string& expert_path,
              const std::string& out_path) {
  auto env = envs::make_env(cfg.env_id);
  PolicyHandle h = load_policy_any(expert_path);
  if (h.env_id != env->id()) {
    throw ConfigError("expert checkpoint is for '" + h.env_id + "', config says '" +
                      env->id() + "'");
  }
  envs::DemoSet demos;
  demos.env_id = env->id();
  demos.source_policy_id = expert_path;
  demos.trajectories = envs::sample_trajectories(*env, *h.policy, cfg.demo_count,
                                                 Rng::derive(cfg.train.seed, 202));
  envs::save_demos(out_path, demos);
  log_info("wrote " + std::to_string(demos.trajectories.size()) + " trajectories (" +
           std::to_string(demos.pair_count()) + " pairs) to " + out_path);
  return 0;
}

// ----------------------------------------------------------------- train --

train::ScoreRef resolve_refs(const cli::ExperimentConfig& cfg, const envs::Env& env,
                             const envs::DemoSet& demos, const std::string& ref_path) {
  if (!ref_path.empty()) {
    json j = read_json_file(ref_path);
    return {j.at("expert_mean").get<double>(), j.at("random_mean").get<double>()};
  }
  // fall back to the demos' own mean return as the expert reference
  double expert_mean = 0.0;
  for (const auto& t : demos.trajectories) expert_mean += t.total_reward();
  expert_mean /= static_cast<double>(demos.trajectories.size());
  envs::RandomPolicy rnd(env.num_actions());
  double random_mean = envs::evaluate_policy(env, rnd, cfg.random_ref_episodes,
                                             Rng::derive(cfg.train.seed, 103))
                           .mean;
  return {expert_mean, random_mean};
}

int cmd_train(const cli::ExperimentConfig& cfg, const std::string& demos_path,
              const std::string& out_dir, const std::string& ref_path) {
  auto wall_start = std::chrono::steady_clock::now();
  auto env = envs::make_env(cfg.env_id);
  envs::DemoSet demos = envs::load_demos(demos_path);
  if (!demos.env_id.empty() && demos.env_id != env->id()) {
    throw ConfigError("demos are from '" + demos.env_id + "', config says '" +
                      env->id() + "'");
  }

  fs::path run_dir = fs::path(out_dir) /
                     ("run_" + cli::config_hash(cfg) + "_s" +
                      std::to_string(cfg.train.seed));
  if (fs::exists(run_dir)) {
    throw IoError("run directory '" + run_dir.string() +
                  "' already exists; runs are never overwritten");
  }
  fs::create_directories(run_dir);
  log_info("run directory " + run_dir.string());

  json manifest;
  manifest["config"] = cli::effective_json(cfg);
  manifest["git_describe"] = FDIV_GIT_DESCRIBE;
  manifest["demo_file"] = demos_path;
  manifest["demo_trajectories"] = demos.trajectories.size();
  manifest["demo_pairs"] = demos.pair_count();

  try {
    train::ScoreRef refs = resolve_refs(cfg, *env, demos, ref_path);
    manifest["refs"] = {{"expert_mean", refs.expert_mean},
                        {"random_mean", refs.random_mean}};

    const bool bc = cfg.train.algorithm == train::Algorithm::Bc;
    if (bc) {
      train::BcReport bc_report;
      nets::PolicyNet policy =
          train::train_bc(cfg.train, *env, demos, cfg.train.seed, &bc_report);
      io::save_policy((run_dir / "policy.json").string(), policy, env->id());
      if (bc_report.degenerate) {
        log_info("warning: training demonstrations contain a single action class");
      }
      manifest["bc"] = {{"val_loss", bc_report.val_loss},
                        {"val_accuracy", bc_report.val_accuracy},
                        {"epochs_run", bc_report.epochs_run},
                        {"degenerate", bc_report.degenerate},
                        {"train_trajectories", bc_report.train_trajectories},
                        {"val_trajectories", bc_report.val_trajectories}};
      envs::NetPolicy np(policy);
      envs::ReturnStats eval = envs::evaluate_policy(
          *env, np, cfg.train.eval_episodes, Rng::derive(cfg.train.seed, 909));
      manifest["eval"] = {
          {"episodes", eval.episodes},
          {"mean_return", eval.mean},
          {"std_return", eval.std_dev},
          {"normalized_return",
           envs::normalized_return(eval.mean, refs.expert_mean, refs.random_mean)}};
    } else {
      CsvWriter reports(run_dir / "reports.csv",
                        "epoch,objective_value,mean_env_return,normalized_return,"
                        "gap_delta,entropy");
      CsvWriter stats(run_dir / "stats.csv", "epoch,mean,std,u_tilde,delta_u,combined");
      auto sink = [&](const train::EpochReport& rep, const train::EpochContext& ctx) {
        reports.row({static_cast<double>(rep.epoch), rep.objective_value,
                     rep.mean_env_return, rep.normalized_return, rep.gap_delta,
                     rep.entropy});
        if (ctx.learner_u != nullptr && ctx.learner_u->size() >= 30) {
          auto st = metrics::input_stats(*ctx.learner_u, ctx.u_tilde);
          stats.row({static_cast<double>(rep.epoch), st.mean, st.std_dev,
                     st.zero_gap_point, st.delta_u, st.combined});
        }
        log_debug("epoch " + std::to_string(rep.epoch) + " objective " +
                  fmt(rep.objective_value) + " return " + fmt(rep.mean_env_return));
      };
      train::TrainResult result = train::train(cfg.train, *env, demos, refs, sink);

      io::save_policy((run_dir / "policy.json").string(), result.policy, env->id());
      io::save_value((run_dir / "value.json").string(), result.value, env->id());
      io::save_reward((run_dir / "reward.json").string(),
                      result.discriminator->reward_net(), env->id());
      if (result.discriminator->ficnn() != nullptr) {
        io::save_ficnn((run_dir / "fstar.json").string(),
                       *result.discriminator->ficnn(), env->id(),
                       result.observed_u_range);
      }

      // conjugate curve over the observed input range extended by half
      {
        Interval r = result.observed_u_range;
        double w = std::max(1.0, r.width());
        Interval span{r.lo - w / 2.0, r.hi + w / 2.0};
        CsvWriter curve(run_dir / "fstar_curve.csv", "u,fstar_u,gap");
        int points = 512;
        for (int i = 0; i < points; ++i) {
          double u = span.lo + span.width() * static_cast<double>(i) /
                                   static_cast<double>(points - 1);
          double f = result.discriminator->fstar(u);
          curve.row({u, f, f - u});
        }
      }

      if (result.final_u_pool.size() >= 30) {
        double u_tilde;
        if (result.discriminator->learned()) {
          u_tilde = result.discriminator->min_gap(result.observed_u_range).argmin_u;
        } else {
          u_tilde = result.discriminator->kind() == divg::DivergenceKind::RKL
                        ? -1.0
                        : -std::log(2.0);
        }
        auto final_stats = metrics::input_stats(result.final_u_pool, u_tilde);
        CsvWriter density(run_dir / "density.csv", "grid,density");
        auto curve = metrics::kde(result.final_u_pool, 0.3,
                                  metrics::default_grid(result.final_u_pool, 0.3));
        for (std::size_t i = 0; i < curve.grid.size(); ++i) {
          density.row({curve.grid[i], curve.density[i]});
        }
        manifest["final_input_stats"] = {
            {"count", final_stats.count},
            {"epochs", result.final_u_epochs},
            {"mean", final_stats.mean},
            {"std", final_stats.std_dev},
            {"u_tilde", final_stats.zero_gap_point},
            {"delta_u", final_stats.delta_u},
            {"combined", final_stats.combined}};
      }

      envs::NetPolicy np(result.policy);
      envs::ReturnStats eval = envs::evaluate_policy(
          *env, np, cfg.train.eval_episodes, Rng::derive(cfg.train.seed, 909));
      manifest["eval"] = {
          {"episodes", eval.episodes},
          {"mean_return", eval.mean},
          {"std_return", eval.std_dev},
          {"normalized_return",
           envs::normalized_return(eval.mean, refs.expert_mean, refs.random_mean)}};
      manifest["epochs_run"] = result.epochs_run;
      manifest["final_objective"] = result.reports.back().objective_value;
    }

    auto wall_end = std::chrono::steady_clock::now();
    manifest["wall_seconds"] =
        std::chrono::duration<double>(wall_end - wall_start).count();
    write_json_file(run_dir / "manifest.json", manifest);
    std::cout << "run complete: " << run_dir.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    // keep partial CSVs, leave a machine-readable error marker
    json err{{"error", e.what()}};
    write_json_file(run_dir / "error.json", err);
    throw;
  }
}

// ------------------------------------------------------------------ eval --

int cmd_eval(const std::string& checkpoint, int episodes, std::uint64_t seed,
             const std::string& ref_path, const std::string& out_path) {
  PolicyHandle h = load_policy_any(checkpoint);
  auto env = envs::make_env(h.env_id);
  envs::ReturnStats stats =
      envs::evaluate_policy(*env, *h.policy, episodes, Rng::derive(seed, 909));
  json j{{"env_id", env->id()},
         {"checkpoint", checkpoint},
         {"episodes", stats.episodes},
         {"mean_return", stats.mean},
         {"std_return", stats.std_dev}};
  if (!ref_path.empty()) {
    json ref = read_json_file(ref_path);
    j["normalized_return"] =
        envs::normalized_return(stats.mean, ref.at("expert_mean").get<double>(),
                                ref.at("random_mean").get<double>());
  }
  if (!out_path.empty()) write_json_file(out_path, j);
  std::cout << j.dump(2) << "\n";
  return 0;
}

// --------------------------------------------------------------- divbench --

double js_star_gaussian_oracle(const divg::GaussianSpec& p,
                               const divg::GaussianSpec& q) {
  // trapezoid quadrature of the log4-shifted Jensen-Shannon divergence
  auto pdf = [](const divg::GaussianSpec& g, double x) {
    double z = (x - g.mean) / g.std_dev;
    return std::exp(-0.5 * z * z) /
           (g.std_dev * std::sqrt(2.0 * 3.14159265358979323846));
  };
  double lo = std::min(p.mean - 10.0 * p.std_dev, q.mean - 10.0 * q.std_dev);
  double hi = std::max(p.mean + 10.0 * p.std_dev, q.mean + 10.0 * q.std_dev);
  const int n = 20001;
  double h = (hi - lo) / (n - 1);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = lo + h * i;
    double px = pdf(p, x);
    double qx = pdf(q, x);
    double mx = 0.5 * (px + qx);
    double term = 0.0;
    if (px > 0.0 && mx > 0.0) term += 0.5 * px * std::log(px / mx);
    if (qx > 0.0 && mx > 0.0) term += 0.5 * qx * std::log(qx / mx);
    double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    acc += w * term;
  }
  return acc * h - std::log(4.0);
}

int cmd_divbench(const cli::ExperimentConfig& cfg, const std::string& out_path) {
  const cli::DivbenchConfig& db = cfg.divbench;
  std::uint64_t seed = cfg.train.seed;
  std::ofstream raw(out_path, std::ios::trunc);
  if (!raw) throw IoError("cannot open '" + out_path + "'");
  raw << "spec,n_samples,estimate,oracle,gap_to_oracle\n";

  for (int n : db.sample_counts) {
    // draw the sample sets once per size; all specs see the same data
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(n)));
    std::vector<double> sp, sq;
    sp.reserve(static_cast<std::size_t>(n));
    sq.reserve(static_cast<std::size_t>(n));
    if (db.dist_kind == "gaussian") {
      for (int i = 0; i < n; ++i) sp.push_back(db.p.mean + db.p.std_dev * rng.normal());
      for (int i = 0; i < n; ++i) sq.push_back(db.q.mean + db.q.std_dev * rng.normal());
    } else {
      divg::DiscreteDist::make(db.p_table);  // validation
      divg::DiscreteDist::make(db.q_table);
      auto draw = [&rng](const std::vector<double>& table) {
        double r = rng.uniform();
        double acc = 0.0;
        for (std::size_t k = 0; k < table.size(); ++k) {
          acc += table[k];
          if (r < acc) return static_cast<double>(k);
        }
        return static_cast<double>(table.size() - 1);
      };
      for (int i = 0; i < n; ++i) sp.push_back(draw(db.p_table));
      for (int i = 0; i < n; ++i) sq.push_back(draw(db.q_table));
    }

    for (const std::string& name : db.specs) {
      divg::DivergenceKind kind = divg::kind_from_string(name);
      train::EstimatorConfig ec;
      ec.kind = kind;
      ec.steps = db.train_steps;
      ec.minibatch = db.minibatch;
      ec.learning_rate = db.learning_rate;
      ec.t_hidden = db.t_hidden;
      ec.ficnn_layers = cfg.train.ficnn_layers;
      ec.ficnn_nodes = cfg.train.ficnn_nodes;
      ec.seed = Rng::derive(seed, static_cast<std::uint64_t>(n) * 131 +
                                      static_cast<std::uint64_t>(kind));
      log_info("divbench: " + name + " on " + std::to_string(n) + " samples");
      train::EstimatorResult res = train::train_variational_estimator(sp, sq, ec);

      double oracle = std::numeric_limits<double>::quiet_NaN();
      if (kind != divg::DivergenceKind::Learned) {
        if (db.dist_kind == "gaussian") {
          if (kind == divg::DivergenceKind::KL) {
            oracle = divg::gaussian_kl_oracle(db.p, db.q);
          } else if (kind == divg::DivergenceKind::RKL) {
            oracle = divg::gaussian_kl_oracle(db.q, db.p);
          } else {
            oracle = js_star_gaussian_oracle(db.p, db.q);
          }
        } else {
          oracle = divg::exact_divergence_discrete(
              divg::DiscreteDist::make(db.p_table),
              divg::DiscreteDist::make(db.q_table), divg::closed_form(kind));
        }
      }
      raw << name << "," << n << "," << fmt(res.estimate) << "," << fmt(oracle) << ","
          << fmt(res.estimate - oracle) << "\n";
      raw.flush();
    }
  }
  std::cout << "divbench written to " << out_path << "\n";
  return 0;
}

// ----------------------------------------------------------- export-fstar --

int cmd_export_fstar(const std::string& checkpoint, const std::string& spec_name,
                     double lo, double hi, int points, const std::string& out_path) {
  std::function<double(double)> fstar;
  Interval range{lo, hi};
  if (!checkpoint.empty()) {
    Interval observed{-1.0, 1.0};
    conj::FicnnParams p = io::load_ficnn(checkpoint, nullptr, &observed);
    fstar = [p](double u) { return conj::eval_fstar(p, u); };
    if (lo >= hi) {
      double w = std::max(1.0, observed.width());
      range = {observed.lo - w / 2.0, observed.hi + w / 2.0};
    }
  } else if (!spec_name.empty()) {
    auto spec = divg::closed_form(spec_name);
    fstar = spec.conjugate;
    if (lo >= hi) {
      range = {-8.0, spec.kind == divg::DivergenceKind::KL ? 8.0 : -1e-3};
    }
  } else {
    throw ConfigError("export-fstar needs --checkpoint or --spec");
  }
  CsvWriter csv(out_path, "u,fstar_u,gap");
  for (int i = 0; i < points; ++i) {
    double u = range.lo + range.width() * static_cast<double>(i) /
                              static_cast<double>(points - 1);
    double f = fstar(u);
    csv.row({u, f, f - u});
  }
  std::cout << "curve written to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"learnable f-divergence imitation learning toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // accept --config/--seed/--out after the subcommand

  std::string config_path;
  std::string out_dir = ".";
  std::string demos_path, expert_path, ref_path, checkpoint, spec_name, out_path;
  std::uint64_t seed_override = 0;
  int episodes = 50;
  double lo = 0.0, hi = 0.0;
  int points = 512;

  app.add_option("--config", config_path, "JSON experiment config");
  auto* seed_opt = app.add_option("--seed", seed_override, "seed override");
  app.add_option("--out", out_dir, "output directory");

  auto* expert = app.add_subcommand("expert", "train or solve the expert policy");
  auto* demos = app.add_subcommand("demos", "sample expert demonstrations");
  demos->add_option("--expert", expert_path, "expert checkpoint")->required();
  demos->add_option("--file", demos_path, "output demo file (default demos.jsonl)");
  auto* train_cmd = app.add_subcommand("train", "run imitation training");
  train_cmd->add_option("--demos", demos_path, "demo JSONL file")->required();
  train_cmd->add_option("--ref", ref_path, "expert_score.json for normalization");
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a policy checkpoint");
  eval_cmd->add_option("--checkpoint", checkpoint, "policy checkpoint")->required();
  eval_cmd->add_option("--episodes", episodes, "episode count");
  eval_cmd->add_option("--ref", ref_path, "expert_score.json for normalization");
  eval_cmd->add_option("--json", out_path, "write the report to this path");
  auto* divbench = app.add_subcommand("divbench", "benchmark variational estimates");
  divbench->add_option("--file", out_path, "output CSV (default divbench.csv)");
  auto* exportf = app.add_subcommand("export-fstar", "export a conjugate curve");
  exportf->add_option("--checkpoint", checkpoint, "learned conjugate checkpoint");
  exportf->add_option("--spec", spec_name, "closed-form spec name");
  exportf->add_option("--lo", lo, "grid lower bound");
  exportf->add_option("--hi", hi, "grid upper bound");
  exportf->add_option("--points", points, "grid size");
  exportf->add_option("--file", out_path, "output CSV (default fstar_curve.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    cli::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = cli::load_config(config_path);
    if (seed_opt->count() > 0) cfg.train.seed = seed_override;

    if (app.got_subcommand(expert)) return cmd_expert(cfg, out_dir);
    if (app.got_subcommand(demos)) {
      std::string file = demos_path.empty()
                             ? (fs::path(out_dir) / "demos.jsonl").string()
                             : demos_path;
      fs::create_directories(out_dir);
      return cmd_demos(cfg, expert_path, file);
    }
    if (app.got_subcommand(train_cmd)) {
      return cmd_train(cfg, demos_path, out_dir, ref_path);
    }
    if (app.got_subcommand(eval_cmd)) {
      return cmd_eval(checkpoint, episodes, cfg.train.seed, ref_path, out_path);
    }
    if (app.got_subcommand(divbench)) {
      std::string file = out_path.empty()
                             ? (fs::path(out_dir) / "divbench.csv").string()
                             : out_path;
      fs::create_directories(out_dir);
      return cmd_divbench(cfg, file);
    }
    if (app.got_subcommand(exportf)) {
      std::string file = out_path.empty()
                             ? (fs::path(out_dir) / "fstar_curve.csv").string()
                             : out_path;
      fs::create_directories(out_dir);
      return cmd_export_fstar(checkpoint, spec_name, lo, hi, points, file);
    }
    throw ConfigError("no subcommand given");
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
