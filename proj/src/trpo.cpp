#include "fdiv/trpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fdl::train {

std::vector<double> gae_advantages(std::span<const double> rewards,
                                   std::span<const double> values, double gamma,
                                   double lambda) {
  if (rewards.size() != values.size()) {
    throw ConfigError("gae: rewards and values must align");
  }
  std::vector<double> adv(rewards.size(), 0.0);
  double running = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    double next_v = t + 1 < values.size() ? values[t + 1] : 0.0;
    double delta = rewards[t] + gamma * next_v - values[t];
    running = delta + gamma * lambda * running;
    adv[t] = running;
  }
  return adv;
}

std::vector<double> gae_advantages(const envs::Trajectory& traj,
                                   const nets::ValueNet& value, double gamma,
                                   double lambda,
                                   std::span<const double> per_step_rewards) {
  if (per_step_rewards.size() != traj.size()) {
    throw ConfigError("gae: per-step rewards must match trajectory length");
  }
  std::vector<double> values(traj.size());
  for (std::size_t t = 0; t < traj.size(); ++t) {
    values[t] = value.value(traj.transitions[t].state);
  }
  return gae_advantages(per_step_rewards, values, gamma, lambda);
}

namespace {

struct FlatBatch {
  std::vector<const std::vector<double>*> states;
  std::vector<int> actions;
  std::vector<double> advantages;
  std::vector<double> returns;
};

FlatBatch flatten(const std::vector<envs::Trajectory>& trajectories,
                  const std::vector<std::vector<double>>& rewards,
                  const nets::ValueNet& value, const GaeConfig& gae) {
  FlatBatch batch;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto& traj = trajectories[i];
    std::vector<double> adv =
        gae_advantages(traj, value, gae.gamma, gae.lambda, rewards[i]);
    // discounted returns-to-go as value targets
    std::vector<double> ret(traj.size());
    double acc = 0.0;
    for (std::size_t t = traj.size(); t-- > 0;) {
      acc = rewards[i][t] + gae.gamma * acc;
      ret[t] = acc;
    }
    for (std::size_t t = 0; t < traj.size(); ++t) {
      batch.states.push_back(&traj.transitions[t].state);
      batch.actions.push_back(traj.transitions[t].action);
      batch.advantages.push_back(adv[t]);
      batch.returns.push_back(ret[t]);
    }
  }
  return batch;
}

void standardize(std::vector<double>& xs) {
  if (xs.empty()) return;
  double mean = std::accumulate(xs.begin(), xs.end(), 0.0) /
                static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  double sd = std::sqrt(var);
  if (sd < 1e-8) return;  // keeps all-zero advantages at zero
  for (double& x : xs) x = (x - mean) / sd;
}

void refit_value(nets::ValueNet& value, diff::AdamState& value_adam,
                 const FlatBatch& batch, const ValueFitConfig& cfg, Rng& rng) {
  const std::size_t n = batch.states.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  diff::Tape tape;
  std::vector<diff::Tape::NodeId> nodes;
  std::vector<diff::Tape::NodeId> losses;
  std::vector<double> adj;
  std::vector<double> grad(value.params.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with the trainer rng
    for (std::size_t i = n; i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)));
      std::swap(idx[i - 1], idx[j]);
    }
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.minibatch)) {
      std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.minibatch));
      tape.clear();
      nodes.clear();
      for (double v : value.params.values) nodes.push_back(tape.leaf(v));
      losses.clear();
      for (std::size_t k = start; k < stop; ++k) {
        auto out = value.mlp.build(tape, nodes, *batch.states[idx[k]]);
        losses.push_back(tape.square(tape.add_const(out[0], -batch.returns[idx[k]])));
      }
      auto loss = tape.mean(losses);
      tape.backward(loss, adj);
      for (std::size_t i = 0; i < grad.size(); ++i) {
        grad[i] = adj[static_cast<std::size_t>(nodes[i])];
      }
      diff::adam_step_inplace(value.params.span(), grad, value_adam,
                              diff::Direction::Descend);
    }
  }
}

}  // namespace

TrpoReport trpo_step(nets::PolicyNet& policy, nets::ValueNet& value,
                     diff::AdamState& value_adam,
                     const std::vector<envs::Trajectory>& trajectories,
                     const std::vector<std::vector<double>>& per_step_rewards,
                     const TrpoConfig& trpo, const GaeConfig& gae,
                     const ValueFitConfig& value_fit, Rng& rng) {
  using NodeId = diff::Tape::NodeId;
  if (trajectories.size() != per_step_rewards.size()) {
    throw ConfigError("trpo_step: rewards must align with trajectories");
  }
  TrpoReport report;
  FlatBatch batch = flatten(trajectories, per_step_rewards, value, gae);
  const std::size_t n = batch.states.size();
  if (n == 0) throw ConfigError("trpo_step: empty batch");
  standardize(batch.advantages);

  const int num_actions = policy.num_actions;
  const std::size_t theta_n = policy.params.size();

  // One tape for the whole batch at the old parameters; repeated adjoint
  // and tangent sweeps implement the gradient and Fisher-vector products.
  diff::Tape tape;
  std::vector<NodeId> theta;
  theta.reserve(theta_n);
  for (double v : policy.params.values) theta.push_back(tape.leaf(v));

  std::vector<std::vector<NodeId>> logit_nodes(n);
  std::vector<NodeId> logp_nodes(n);
  std::vector<std::vector<double>> old_probs(n);
  std::vector<double> old_logp(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto logits = policy.mlp.build(tape, theta, *batch.states[i]);
    NodeId lse = tape.log_sum_exp(logits);
    logp_nodes[i] = tape.sub(logits[static_cast<std::size_t>(batch.actions[i])], lse);
    old_logp[i] = tape.value(logp_nodes[i]);
    std::vector<double> raw(logits.size());
    for (std::size_t a = 0; a < logits.size(); ++a) raw[a] = tape.value(logits[a]);
    old_probs[i] = nets::softmax(raw);
    logit_nodes[i] = std::move(logits);
    double ent = 0.0;
    for (double pa : old_probs[i]) {
      if (pa > 0.0) ent -= pa * std::log(pa);
    }
    report.mean_entropy += ent;
  }
  report.mean_entropy /= static_cast<double>(n);

  // policy gradient of the surrogate at theta_old
  std::vector<std::pair<NodeId, double>> seeds;
  seeds.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    seeds.push_back({logp_nodes[i], batch.advantages[i] / static_cast<double>(n)});
  }
  std::vector<double> adj;
  tape.backward(seeds, adj);
  std::vector<double> g(theta_n);
  double gnorm = 0.0;
  for (std::size_t i = 0; i < theta_n; ++i) {
    g[i] = adj[static_cast<std::size_t>(theta[i])];
    gnorm += g[i] * g[i];
  }
  if (!std::isfinite(gnorm)) {
    report.cg_failed = true;
    refit_value(value, value_adam, batch, value_fit, rng);
    return report;
  }
  if (gnorm < 1e-24) {
    // zero advantages: nothing to do
    refit_value(value, value_adam, batch, value_fit, rng);
    return report;
  }

  std::vector<double> tan(tape.size());
  std::vector<std::pair<NodeId, double>> fisher_seeds;
  auto fvp = [&](const std::vector<double>& v, std::vector<double>& out) {
    std::fill(tan.begin(), tan.end(), 0.0);
    for (std::size_t i = 0; i < theta_n; ++i) {
      tan[static_cast<std::size_t>(theta[i])] = v[i];
    }
    tape.tangent(tan);
    fisher_seeds.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = old_probs[i];
      const auto& lids = logit_nodes[i];
      double dot = 0.0;
      for (std::size_t a = 0; a < p.size(); ++a) {
        dot += p[a] * tan[static_cast<std::size_t>(lids[a])];
      }
      for (std::size_t a = 0; a < p.size(); ++a) {
        double w = p[a] * (tan[static_cast<std::size_t>(lids[a])] - dot);
        fisher_seeds.push_back({lids[a], w / static_cast<double>(n)});
      }
    }
    tape.backward(fisher_seeds, adj);
    for (std::size_t i = 0; i < theta_n; ++i) {
      out[i] = adj[static_cast<std::size_t>(theta[i])] + trpo.cg_damping * v[i];
    }
  };

  // conjugate gradient on F x = g
  std::vector<double> x(theta_n, 0.0), r = g, p = g, fp(theta_n);
  double rdotr = gnorm;
  for (int it = 0; it < trpo.cg_iters && rdotr > 1e-12; ++it) {
    fvp(p, fp);
    double pfp = 0.0;
    for (std::size_t i = 0; i < theta_n; ++i) pfp += p[i] * fp[i];
    if (!std::isfinite(pfp) || pfp <= 0.0) {
      report.cg_failed = true;
      break;
    }
    double alpha = rdotr / pfp;
    double new_rdotr = 0.0;
    for (std::size_t i = 0; i < theta_n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * fp[i];
      new_rdotr += r[i] * r[i];
    }
    double beta = new_rdotr / rdotr;
    for (std::size_t i = 0; i < theta_n; ++i) p[i] = r[i] + beta * p[i];
    rdotr = new_rdotr;
    if (!std::isfinite(rdotr)) {
      report.cg_failed = true;
      break;
    }
  }
  if (report.cg_failed) {
    refit_value(value, value_adam, batch, value_fit, rng);
    return report;
  }

  fvp(x, fp);
  double shs = 0.0;
  for (std::size_t i = 0; i < theta_n; ++i) shs += x[i] * fp[i];
  if (!std::isfinite(shs) || shs <= 0.0) {
    report.cg_failed = true;
    refit_value(value, value_adam, batch, value_fit, rng);
    return report;
  }
  double step_scale = std::sqrt(2.0 * trpo.max_kl / shs);

  auto evaluate_candidate = [&](const std::vector<double>& params, double* kl_out) {
    double improvement = 0.0;
    double kl = 0.0;
    std::vector<double> logits(static_cast<std::size_t>(num_actions));
    for (std::size_t i = 0; i < n; ++i) {
      policy.mlp.forward(params, *batch.states[i], logits);
      double m = logits[0];
      for (double l : logits) m = std::max(m, l);
      double z = 0.0;
      for (double l : logits) z += std::exp(l - m);
      double lse = m + std::log(z);
      double new_logp = logits[static_cast<std::size_t>(batch.actions[i])] - lse;
      improvement += (std::exp(new_logp - old_logp[i]) - 1.0) * batch.advantages[i];
      const auto& pold = old_probs[i];
      for (std::size_t a = 0; a < pold.size(); ++a) {
        if (pold[a] > 0.0) {
          kl += pold[a] * (std::log(pold[a]) - (logits[a] - lse));
        }
      }
    }
    *kl_out = kl / static_cast<double>(n);
    return improvement / static_cast<double>(n);
  };

  std::vector<double> candidate(theta_n);
  double alpha = 1.0;
  for (int bt = 0; bt < trpo.backtrack_steps; ++bt, alpha *= 0.5) {
    for (std::size_t i = 0; i < theta_n; ++i) {
      candidate[i] = policy.params.values[i] + alpha * step_scale * x[i];
    }
    double kl = 0.0;
    double improvement = evaluate_candidate(candidate, &kl);
    if (std::isfinite(improvement) && std::isfinite(kl) && improvement > 0.0 &&
        kl <= trpo.max_kl) {
      policy.params.values = candidate;
      report.accepted = true;
      report.mean_kl = kl;
      report.improvement = improvement;
      report.backtracks = bt;
      break;
    }
  }

  refit_value(value, value_adam, batch, value_fit, rng);
  return report;
}

}  // namespace fdl::train
