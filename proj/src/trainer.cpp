#include "fdiv/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fdl::train {

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "fgail") return Algorithm::Fgail;
  if (name == "gail") return Algorithm::Gail;
  if (name == "rkl_vim") return Algorithm::RklVim;
  if (name == "bc") return Algorithm::Bc;
  throw ConfigError("unknown algorithm '" + name + "'");
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Fgail: return "fgail";
    case Algorithm::Gail: return "gail";
    case Algorithm::RklVim: return "rkl_vim";
    case Algorithm::Bc: return "bc";
  }
  return "?";
}

divg::DivergenceKind divergence_of(Algorithm a) {
  switch (a) {
    case Algorithm::Fgail: return divg::DivergenceKind::Learned;
    case Algorithm::Gail: return divg::DivergenceKind::JsStar;
    case Algorithm::RklVim: return divg::DivergenceKind::RKL;
    case Algorithm::Bc: break;
  }
  throw ConfigError("behavior cloning has no discriminator");
}

namespace {

// Rollout loop collecting whole trajectories until the pair quota is met;
// per-trajectory seeds are derived by counter.
std::vector<envs::Trajectory> collect_pairs(const envs::Env& env,
                                            const nets::PolicyNet& policy,
                                            int quota, std::uint64_t seed) {
  envs::NetPolicy net_policy(policy);
  std::vector<envs::Trajectory> out;
  std::size_t pairs = 0;
  std::uint64_t k = 0;
  while (pairs < static_cast<std::size_t>(quota)) {
    envs::Trajectory traj;
    traj.seed = Rng::derive(seed, k++);
    Rng rng(traj.seed);
    std::vector<double> state = env.reset(rng);
    for (int t = 0; t < env.horizon(); ++t) {
      int action = net_policy.act(state, rng);
      envs::StepOut step = env.step(state, action, rng);
      traj.transitions.push_back({state, action, step.reward, step.done});
      state = std::move(step.next_state);
      if (step.done) break;
    }
    pairs += traj.size();
    out.push_back(std::move(traj));
  }
  return out;
}

std::vector<std::vector<double>> encode_trajectories(
    const std::vector<envs::Trajectory>& trajs, int num_actions) {
  std::vector<std::vector<double>> out;
  for (const auto& traj : trajs) {
    for (const auto& tr : traj.transitions) {
      out.push_back(nets::encode_state_action(tr.state, tr.action, num_actions));
    }
  }
  return out;
}

double mean_return(const std::vector<envs::Trajectory>& trajs) {
  double sum = 0.0;
  for (const auto& t : trajs) sum += t.total_reward();
  return sum / static_cast<double>(trajs.size());
}

Interval spread_range(std::span<const double> us) {
  double lo = us[0];
  double hi = us[0];
  for (double u : us) {
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  double width = std::max(1.0, hi - lo);
  return {lo - width / 2.0, hi + width / 2.0};
}

struct UtilDeque {
  std::deque<std::vector<double>> epochs;
  void push(std::vector<double> us) {
    epochs.push_back(std::move(us));
    if (epochs.size() > 5) epochs.pop_front();
  }
  std::vector<double> pooled() const {
    std::vector<double> out;
    for (const auto& e : epochs) out.insert(out.end(), e.begin(), e.end());
    return out;
  }
};

}  // namespace

TrainResult train(const TrainConfig& config, const envs::Env& env,
                  const envs::DemoSet& demos, const ScoreRef& refs,
                  const EpochSink& sink) {
  if (config.algorithm == Algorithm::Bc) {
    throw ConfigError("train: use train_bc for behavior cloning");
  }
  if (demos.trajectories.empty()) {
    throw ConfigError("train: imitation learning needs demonstrations");
  }
  if (config.epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (!demos.env_id.empty() && demos.env_id != env.id()) {
    throw ConfigError("train: demos come from '" + demos.env_id + "', env is '" +
                      env.id() + "'");
  }

  Rng init_rng(Rng::derive(config.seed, 1));
  Rng batch_rng(Rng::derive(config.seed, 2));
  Rng value_rng(Rng::derive(config.seed, 3));

  TrainResult result;
  result.policy = nets::PolicyNet::create(env.obs_dim(), env.num_actions(), init_rng);
  result.value = nets::ValueNet::create(env.obs_dim(), init_rng);
  diff::AdamState value_adam = diff::AdamState::init(
      result.value.params.size(), {config.value_fit.learning_rate, 0.9, 0.999, 1e-8});

  DiscriminatorConfig dc;
  dc.kind = divergence_of(config.algorithm);
  dc.adam_reward = config.adam_reward;
  dc.adam_ficnn = config.adam_ficnn;
  dc.ficnn_layers = config.ficnn_layers;
  dc.ficnn_nodes = config.ficnn_nodes;
  dc.ficnn_init_scale = config.ficnn_init_scale;
  dc.gap = config.gap;
  result.discriminator = Discriminator::create(env.obs_dim(), env.num_actions(), dc,
                                               init_rng);
  Discriminator& disc = *result.discriminator;

  // demo pair pool, sampled with replacement into per-epoch batches
  std::vector<std::vector<double>> demo_pool =
      encode_trajectories(demos.trajectories, env.num_actions());

  // constant gap diagnostics for the fixed conjugates
  double fixed_gap = 0.0;
  double fixed_u_tilde = 0.0;
  if (!disc.learned()) {
    Interval domain = disc.kind() == divg::DivergenceKind::JsStar ||
                              disc.kind() == divg::DivergenceKind::RKL
                          ? Interval{-8.0, -1e-6}
                          : Interval{-8.0, 8.0};
    conj::GapEstimate est = conj::estimate_min_gap(
        disc.fstar_fn(), domain.lo / 2.0, config.gap.eta, config.gap.iterations, domain);
    fixed_gap = est.delta;
    fixed_u_tilde = est.argmin_u;
  }

  UtilDeque u_pool;
  int stop_streak = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<envs::Trajectory> trajs =
        collect_pairs(env, result.policy, config.pairs_per_epoch,
                      Rng::derive(config.seed, 1000 + static_cast<std::uint64_t>(epoch)));
    std::vector<std::vector<double>> learner_batch =
        encode_trajectories(trajs, env.num_actions());

    std::vector<std::vector<double>> expert_batch;
    expert_batch.reserve(learner_batch.size());
    for (std::size_t i = 0; i < learner_batch.size(); ++i) {
      expert_batch.push_back(
          demo_pool[static_cast<std::size_t>(batch_rng.uniform_int(
              static_cast<int>(demo_pool.size())))]);
    }

    try {
      disc.ascent_step(expert_batch, learner_batch);
    } catch (const NumericError& e) {
      throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what());
    }

    // conjugate inputs under the updated reward signal
    std::vector<double> learner_u(learner_batch.size());
    for (std::size_t i = 0; i < learner_batch.size(); ++i) {
      learner_u[i] = disc.signal(learner_batch[i]);
    }
    Interval u_range = spread_range(learner_u);
    result.observed_u_range = u_range;

    double gap_delta = fixed_gap;
    double u_tilde = fixed_u_tilde;
    if (disc.learned()) {
      Discriminator::ShiftOutcome shift = disc.shift_to_zero_gap(u_range);
      gap_delta = shift.pre_shift_delta;
      u_tilde = shift.u_tilde;
    }

    // policy rewards f*(T(s,a)) + entropy bonus, per trajectory
    std::vector<std::vector<double>> rewards(trajs.size());
    {
      std::size_t flat = 0;
      for (std::size_t i = 0; i < trajs.size(); ++i) {
        rewards[i].resize(trajs[i].size());
        for (std::size_t t = 0; t < trajs[i].size(); ++t, ++flat) {
          double r = disc.fstar(learner_u[flat]);
          if (config.entropy_coeff != 0.0) {
            auto [logp, ent] = result.policy.log_prob_and_entropy(
                trajs[i].transitions[t].state, trajs[i].transitions[t].action);
            r += config.entropy_coeff * (-logp);
          }
          rewards[i][t] = r;
        }
      }
    }

    TrpoReport trpo_report =
        trpo_step(result.policy, result.value, value_adam, trajs, rewards,
                  config.trpo, config.gae, config.value_fit, value_rng);

    EpochReport report;
    report.epoch = epoch;
    report.objective_value = disc.objective(expert_batch, learner_batch);
    report.mean_env_return = mean_return(trajs);
    report.normalized_return = envs::normalized_return(
        report.mean_env_return, refs.expert_mean, refs.random_mean);
    report.gap_delta = gap_delta;
    report.entropy = trpo_report.mean_entropy;
    result.reports.push_back(report);

    u_pool.push(learner_u);

    if (sink) {
      EpochContext ctx;
      ctx.expert_batch = &expert_batch;
      ctx.learner_batch = &learner_batch;
      ctx.learner_u = &learner_u;
      ctx.u_tilde = u_tilde;
      ctx.discriminator = &disc;
      ctx.policy = &result.policy;
      sink(report, ctx);
    }

    result.epochs_run = epoch + 1;
    if (config.stop_at_normalized) {
      stop_streak = report.normalized_return >= *config.stop_at_normalized
                        ? stop_streak + 1
                        : 0;
      if (stop_streak >= 3) break;
    }
  }

  result.final_u_pool = u_pool.pooled();
  result.final_u_epochs = static_cast<int>(u_pool.epochs.size());
  return result;
}

nets::PolicyNet train_bc(const TrainConfig& config, const envs::Env& env,
                         const envs::DemoSet& demos, std::uint64_t split_seed,
                         BcReport* report) {
  if (demos.trajectories.size() < 2) {
    throw ConfigError("train_bc: need at least two trajectories for the split");
  }
  if (!demos.env_id.empty() && demos.env_id != env.id()) {
    throw ConfigError("train_bc: demo/environment mismatch");
  }

  // 70/30 split at trajectory granularity
  std::vector<std::size_t> idx(demos.trajectories.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng split_rng(Rng::derive(split_seed, 17));
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(split_rng.uniform_int(static_cast<int>(i)));
    std::swap(idx[i - 1], idx[j]);
  }
  std::size_t n_train = static_cast<std::size_t>(
      0.7 * static_cast<double>(idx.size()) + 1e-9);
  n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);

  struct Pair {
    const std::vector<double>* state;
    int action;
  };
  std::vector<Pair> train_pairs, val_pairs;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto& traj = demos.trajectories[idx[k]];
    auto& dst = k < n_train ? train_pairs : val_pairs;
    for (const auto& tr : traj.transitions) dst.push_back({&tr.state, tr.action});
  }
  if (train_pairs.empty() || val_pairs.empty()) {
    throw ConfigError("train_bc: empty split");
  }

  bool degenerate = true;
  for (const Pair& p : train_pairs) {
    if (p.action != train_pairs.front().action) {
      degenerate = false;
      break;
    }
  }

  Rng init_rng(Rng::derive(split_seed, 29));
  nets::PolicyNet policy =
      nets::PolicyNet::create(env.obs_dim(), env.num_actions(), init_rng);
  diff::AdamState adam = diff::AdamState::init(
      policy.params.size(), {config.bc_learning_rate, 0.9, 0.999, 1e-8});

  auto val_loss = [&]() {
    double loss = 0.0;
    for (const Pair& p : val_pairs) {
      loss -= policy.log_prob_and_entropy(*p.state, p.action).first;
    }
    return loss / static_cast<double>(val_pairs.size());
  };

  Rng shuffle_rng(Rng::derive(split_seed, 31));
  diff::Tape tape;
  std::vector<diff::Tape::NodeId> nodes;
  std::vector<diff::Tape::NodeId> logps;
  std::vector<double> adj;
  std::vector<double> grad(policy.params.size());
  std::vector<std::size_t> order(train_pairs.size());
  std::iota(order.begin(), order.end(), 0);

  double best_loss = val_loss();
  std::vector<double> best_params = policy.params.values;
  int since_best = 0;
  int epochs_run = 0;
  for (int epoch = 0; epoch < config.bc_max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(shuffle_rng.uniform_int(static_cast<int>(i)));
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.bc_minibatch)) {
      std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(config.bc_minibatch));
      tape.clear();
      nodes.clear();
      for (double v : policy.params.values) nodes.push_back(tape.leaf(v));
      logps.clear();
      for (std::size_t k = start; k < stop; ++k) {
        const Pair& p = train_pairs[order[k]];
        auto logits = policy.mlp.build(tape, nodes, *p.state);
        auto lse = tape.log_sum_exp(logits);
        logps.push_back(tape.sub(logits[static_cast<std::size_t>(p.action)], lse));
      }
      auto loss = tape.neg(tape.mean(logps));
      tape.backward(loss, adj);
      for (std::size_t i = 0; i < grad.size(); ++i) {
        grad[i] = adj[static_cast<std::size_t>(nodes[i])];
      }
      diff::adam_step_inplace(policy.params.span(), grad, adam,
                              diff::Direction::Descend);
    }
    epochs_run = epoch + 1;
    double loss = val_loss();
    if (loss < best_loss - 1e-6) {
      best_loss = loss;
      best_params = policy.params.values;
      since_best = 0;
    } else {
      since_best += 1;
      if (since_best >= config.bc_patience) break;
    }
  }
  policy.params.values = best_params;

  if (report != nullptr) {
    report->val_loss = best_loss;
    report->epochs_run = epochs_run;
    report->degenerate = degenerate;
    report->train_trajectories = static_cast<int>(n_train);
    report->val_trajectories = static_cast<int>(idx.size() - n_train);
    int correct = 0;
    for (const Pair& p : val_pairs) {
      auto probs = policy.distribution(*p.state);
      int best = 0;
      for (std::size_t a = 1; a < probs.size(); ++a) {
        if (probs[a] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(a);
      }
      if (best == p.action) ++correct;
    }
    report->val_accuracy =
        static_cast<double>(correct) / static_cast<double>(val_pairs.size());
  }
  return policy;
}

RlResult train_rl(const TrainConfig& config, const envs::Env& env,
                  std::optional<double> stop_at_return, const EpochSink& sink) {
  Rng init_rng(Rng::derive(config.seed, 11));
  Rng value_rng(Rng::derive(config.seed, 13));

  RlResult result;
  result.policy = nets::PolicyNet::create(env.obs_dim(), env.num_actions(), init_rng);
  result.value = nets::ValueNet::create(env.obs_dim(), init_rng);
  diff::AdamState value_adam = diff::AdamState::init(
      result.value.params.size(), {config.value_fit.learning_rate, 0.9, 0.999, 1e-8});

  int stop_streak = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<envs::Trajectory> trajs =
        collect_pairs(env, result.policy, config.pairs_per_epoch,
                      Rng::derive(config.seed, 5000 + static_cast<std::uint64_t>(epoch)));

    std::vector<std::vector<double>> rewards(trajs.size());
    for (std::size_t i = 0; i < trajs.size(); ++i) {
      rewards[i].resize(trajs[i].size());
      for (std::size_t t = 0; t < trajs[i].size(); ++t) {
        double r = trajs[i].transitions[t].reward;
        if (config.entropy_coeff != 0.0) {
          auto [logp, ent] = result.policy.log_prob_and_entropy(
              trajs[i].transitions[t].state, trajs[i].transitions[t].action);
          r += config.entropy_coeff * (-logp);
        }
        rewards[i][t] = r;
      }
    }

    TrpoReport trpo_report =
        trpo_step(result.policy, result.value, value_adam, trajs, rewards,
                  config.trpo, config.gae, config.value_fit, value_rng);

    EpochReport report;
    report.epoch = epoch;
    report.mean_env_return = mean_return(trajs);
    report.normalized_return = report.mean_env_return;
    report.entropy = trpo_report.mean_entropy;
    result.reports.push_back(report);
    result.epochs_run = epoch + 1;

    if (sink) {
      EpochContext ctx;
      ctx.policy = &result.policy;
      sink(report, ctx);
    }
    if (stop_at_return) {
      stop_streak = report.mean_env_return >= *stop_at_return ? stop_streak + 1 : 0;
      if (stop_streak >= 3) break;
    }
  }
  return result;
}

EstimatorResult train_variational_estimator(std::span<const double> samples_p,
                                            std::span<const double> samples_q,
                                            const EstimatorConfig& config) {
  if (samples_p.empty() || samples_q.empty()) {
    throw ConfigError("estimator: empty sample set");
  }
  Rng init_rng(Rng::derive(config.seed, 41));
  Rng batch_rng(Rng::derive(config.seed, 43));

  DiscriminatorConfig dc;
  dc.kind = config.kind;
  dc.adam_reward.learning_rate = config.learning_rate;
  dc.adam_ficnn.learning_rate = config.learning_rate;
  dc.ficnn_layers = config.ficnn_layers;
  dc.ficnn_nodes = config.ficnn_nodes;
  dc.ficnn_init_scale = config.ficnn_init_scale;
  dc.gap = config.gap;
  dc.reward_hidden = config.t_hidden;
  EstimatorResult result{0.0, 0.0, Discriminator::create(1, 0, dc, init_rng)};
  Discriminator& d = result.discriminator;

  const int m = config.minibatch;
  std::vector<std::vector<double>> batch_p(static_cast<std::size_t>(m)),
      batch_q(static_cast<std::size_t>(m));
  for (int step = 0; step < config.steps; ++step) {
    for (int i = 0; i < m; ++i) {
      batch_p[static_cast<std::size_t>(i)] = {
          samples_p[static_cast<std::size_t>(batch_rng.uniform_int(
              static_cast<int>(samples_p.size())))]};
      batch_q[static_cast<std::size_t>(i)] = {
          samples_q[static_cast<std::size_t>(batch_rng.uniform_int(
              static_cast<int>(samples_q.size())))]};
    }
    d.ascent_step(batch_p, batch_q);
    if (d.learned()) {
      double lo = d.signal(batch_q[0]);
      double hi = lo;
      for (const auto& enc : batch_q) {
        double u = d.signal(enc);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
      }
      double width = std::max(1.0, hi - lo);
      d.shift_to_zero_gap(Interval{lo - width / 2.0, hi + width / 2.0});
    }
  }

  // full-sample estimate through the spec interface
  divg::DivergenceSpec spec =
      d.learned() ? learned_stub_spec() : divg::closed_form(config.kind);
  if (d.learned()) {
    conj::FicnnParams snapshot = *d.ficnn();
    spec.conjugate = [snapshot](double u) { return conj::eval_fstar(snapshot, u); };
  }
  auto T = [&d](double x) {
    std::vector<double> enc{x};
    return d.signal(enc);
  };
  result.estimate = divg::variational_estimate(samples_p, samples_q, T, spec);
  result.standard_error =
      divg::variational_standard_error(samples_p, samples_q, T, spec);
  return result;
}

}  // namespace fdl::train
