#pragma once

#include <optional>

#include "fdiv/diffcore.hpp"
#include "fdiv/divergence.hpp"
#include "fdiv/ficnn.hpp"
#include "fdiv/gap.hpp"
#include "fdiv/nets.hpp"

namespace fdl::train {

struct DiscriminatorConfig {
  divg::DivergenceKind kind = divg::DivergenceKind::Learned;
  diff::AdamConfig adam_reward;
  diff::AdamConfig adam_ficnn;
  int ficnn_layers = 4;
  int ficnn_nodes = 100;
  double ficnn_init_scale = 1.0;
  conj::GapConfig gap;
  std::vector<int> reward_hidden = {100, 100, 100};
};

// Reward signal T plus the conjugate f*: a fixed closed form for the
// baselines, a learnable convex network otherwise. Both halves update in
// one backward pass over a shared tape; inner weights are reprojected and
// the zero-gap shift applied after every step.
class Discriminator {
 public:
  static Discriminator create(int obs_dim, int num_actions,
                              const DiscriminatorConfig& cfg, Rng& rng);

  divg::DivergenceKind kind() const { return kind_; }
  bool learned() const { return ficnn_.has_value(); }
  const nets::RewardNet& reward_net() const { return reward_; }
  const conj::FicnnParams* ficnn() const { return ficnn_ ? &*ficnn_ : nullptr; }
  const divg::DivergenceSpec& spec() const { return spec_; }

  // u = T(s,a) on an encoded state-action pair.
  double signal(std::span<const double> encoded) const;
  double fstar(double u) const;
  conj::ScalarFn fstar_fn() const;

  // mean_E[T] - mean_L[f*(T)] (the divergence estimate).
  double objective(const std::vector<std::vector<double>>& expert,
                   const std::vector<std::vector<double>>& learner) const;

  // Single Adam ascent on the objective: omega always, phi when learned,
  // followed by the nonnegativity projection on phi.
  void ascent_step(const std::vector<std::vector<double>>& expert,
                   const std::vector<std::vector<double>>& learner);

  // Gap estimate + bias shift; re-estimates and re-shifts (at most twice)
  // if the residual exceeds the tolerance. Returns the pre-shift gap and
  // the zero-gap input point of the shifted conjugate.
  struct ShiftOutcome {
    double pre_shift_delta = 0.0;
    double u_tilde = 0.0;
    double residual = 0.0;
  };
  ShiftOutcome shift_to_zero_gap(std::optional<Interval> hint);

  // Min-gap location for fixed conjugates (reporting path).
  conj::GapEstimate min_gap(std::optional<Interval> hint) const;

  nets::RewardNet& mutable_reward() { return reward_; }
  conj::FicnnParams& mutable_ficnn() { return *ficnn_; }

 private:
  divg::DivergenceKind kind_ = divg::DivergenceKind::Learned;
  divg::DivergenceSpec spec_;
  nets::RewardNet reward_;
  std::optional<conj::FicnnParams> ficnn_;
  diff::AdamState adam_w_;
  diff::AdamState adam_phi_;
  conj::GapConfig gap_;
  diff::Tape tape_;
};

// Spec stub for the learned conjugate: identity final activation over the
// whole real line.
divg::DivergenceSpec learned_stub_spec();

}  // namespace fdl::train
