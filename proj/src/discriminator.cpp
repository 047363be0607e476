#include "fdiv/discriminator.hpp"

#include <cmath>
#include <limits>

namespace fdl::train {

divg::DivergenceSpec learned_stub_spec() {
  divg::DivergenceSpec s;
  s.kind = divg::DivergenceKind::Learned;
  s.name = "learned";
  s.conjugate_domain = {-std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::infinity()};
  s.final_activation = divg::FinalActivation::Identity;
  return s;
}

Discriminator Discriminator::create(int obs_dim, int num_actions,
                                    const DiscriminatorConfig& cfg, Rng& rng) {
  Discriminator d;
  d.kind_ = cfg.kind;
  d.gap_ = cfg.gap;
  if (cfg.kind == divg::DivergenceKind::Learned) {
    d.spec_ = learned_stub_spec();
  } else {
    d.spec_ = divg::closed_form(cfg.kind);
  }
  d.reward_ = nets::RewardNet::create(obs_dim, num_actions, d.spec_.final_activation,
                                      rng, cfg.reward_hidden);
  d.adam_w_ = diff::AdamState::init(d.reward_.params.size(), cfg.adam_reward);
  if (cfg.kind == divg::DivergenceKind::Learned) {
    d.ficnn_ = conj::FicnnParams::init(cfg.ficnn_layers, cfg.ficnn_nodes, rng,
                                       cfg.ficnn_init_scale);
    d.adam_phi_ = diff::AdamState::init(d.ficnn_->values.size(), cfg.adam_ficnn);
    // training must start from a valid divergence; anchor the first shift
    // around the scale of fresh reward-net outputs
    d.shift_to_zero_gap(Interval{-2.0, 2.0});
  }
  return d;
}

double Discriminator::signal(std::span<const double> encoded) const {
  return reward_.signal_encoded(encoded, spec_);
}

double Discriminator::fstar(double u) const {
  if (ficnn_) return conj::eval_fstar(*ficnn_, u);
  return spec_.conjugate(u);
}

conj::ScalarFn Discriminator::fstar_fn() const {
  if (ficnn_) return conj::make_scalar_fn(*ficnn_);
  return conj::ScalarFn{spec_.conjugate, spec_.conjugate_deriv};
}

double Discriminator::objective(const std::vector<std::vector<double>>& expert,
                                const std::vector<std::vector<double>>& learner) const {
  if (expert.empty() || learner.empty()) {
    throw ConfigError("discriminator objective: empty batch");
  }
  double mean_e = 0.0;
  for (const auto& enc : expert) mean_e += signal(enc);
  mean_e /= static_cast<double>(expert.size());
  double mean_l = 0.0;
  for (const auto& enc : learner) mean_l += fstar(signal(enc));
  mean_l /= static_cast<double>(learner.size());
  return mean_e - mean_l;
}

void Discriminator::ascent_step(const std::vector<std::vector<double>>& expert,
                                const std::vector<std::vector<double>>& learner) {
  if (expert.size() != learner.size()) {
    throw ConfigError("discriminator step: batches must have the same size");
  }
  using NodeId = diff::Tape::NodeId;
  tape_.clear();

  std::vector<NodeId> w_nodes;
  w_nodes.reserve(reward_.params.size());
  for (double v : reward_.params.values) w_nodes.push_back(tape_.leaf(v));
  std::vector<NodeId> phi_nodes;
  if (ficnn_) {
    phi_nodes.reserve(ficnn_->values.size());
    for (double v : ficnn_->values) phi_nodes.push_back(tape_.leaf(v));
  }

  std::vector<std::pair<NodeId, double>> seeds;
  seeds.reserve(expert.size() + learner.size());
  const double we = 1.0 / static_cast<double>(expert.size());
  for (const auto& enc : expert) {
    NodeId v = reward_.mlp.build(tape_, w_nodes, enc)[0];
    NodeId u = divg::build_final_activation(tape_, reward_.activation, v);
    seeds.push_back({u, we});
  }
  const double wl = -1.0 / static_cast<double>(learner.size());
  for (const auto& enc : learner) {
    NodeId v = reward_.mlp.build(tape_, w_nodes, enc)[0];
    NodeId u = divg::build_final_activation(tape_, reward_.activation, v);
    NodeId fs = ficnn_ ? conj::build_fstar(*ficnn_, tape_, phi_nodes, u)
                       : divg::build_conjugate(tape_, kind_, u);
    seeds.push_back({fs, wl});
  }

  std::vector<double> adj;
  tape_.backward(seeds, adj);

  std::vector<double> grad_w(reward_.params.size());
  for (std::size_t i = 0; i < grad_w.size(); ++i) {
    grad_w[i] = adj[static_cast<std::size_t>(w_nodes[i])];
  }
  diff::adam_step_inplace(reward_.params.span(), grad_w, adam_w_,
                          diff::Direction::Ascend);

  if (ficnn_) {
    std::vector<double> grad_phi(ficnn_->values.size());
    for (std::size_t i = 0; i < grad_phi.size(); ++i) {
      grad_phi[i] = adj[static_cast<std::size_t>(phi_nodes[i])];
    }
    std::span<double> phi_span(ficnn_->values.data(), ficnn_->values.size());
    diff::adam_step_inplace(phi_span, grad_phi, adam_phi_, diff::Direction::Ascend);
    conj::project_nonneg_inplace(*ficnn_);
  }
}

Discriminator::ShiftOutcome Discriminator::shift_to_zero_gap(
    std::optional<Interval> hint) {
  if (!ficnn_) throw ConfigError("shift_to_zero_gap: conjugate is fixed");
  conj::GapEstimate first =
      conj::estimate_min_gap(fstar_fn(), gap_.u0, gap_.eta, gap_.iterations, hint);
  ficnn_ = conj::apply_shift(std::move(*ficnn_), first.delta);

  ShiftOutcome out;
  out.pre_shift_delta = first.delta;
  conj::GapEstimate re =
      conj::estimate_min_gap(fstar_fn(), gap_.u0, gap_.eta, gap_.iterations, hint);
  for (int round = 0; round < 2 && std::abs(re.delta) > 1e-3; ++round) {
    ficnn_ = conj::apply_shift(std::move(*ficnn_), re.delta);
    re = conj::estimate_min_gap(fstar_fn(), gap_.u0, gap_.eta, gap_.iterations, hint);
  }
  out.u_tilde = re.argmin_u;
  out.residual = re.delta;
  return out;
}

conj::GapEstimate Discriminator::min_gap(std::optional<Interval> hint) const {
  return conj::estimate_min_gap(fstar_fn(), gap_.u0, gap_.eta, gap_.iterations, hint);
}

}  // namespace fdl::train
