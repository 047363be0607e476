#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fdiv/trainer.hpp"

using namespace fdl;
using train::Algorithm;
using train::Discriminator;
using train::DiscriminatorConfig;
using train::TrainConfig;

namespace {

envs::DemoSet gridworld_demos(int count, std::uint64_t seed) {
  envs::Gridworld gw;
  auto vi = envs::value_iteration(gw.tabular(), gw.gamma(), 1e-10);
  envs::TabularPolicy expert(vi.policy);
  envs::DemoSet demos;
  demos.env_id = gw.id();
  demos.source_policy_id = "value-iteration";
  demos.trajectories = envs::sample_trajectories(gw, expert, count, seed);
  return demos;
}

std::vector<std::vector<double>> random_batch(int obs, int actions, int n,
                                              std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> out;
  for (int i = 0; i < n; ++i) {
    std::vector<double> s(static_cast<std::size_t>(obs));
    for (double& x : s) x = rng.uniform(-1.0, 1.0);
    out.push_back(nets::encode_state_action(s, rng.uniform_int(actions), actions));
  }
  return out;
}

train::ScoreRef gridworld_refs() {
  envs::Gridworld gw;
  envs::RandomPolicy rnd(gw.num_actions());
  double random_mean = envs::evaluate_policy(gw, rnd, 500, 424242).mean;
  return {1.0, random_mean};
}

}  // namespace

TEST_CASE("gae: hand-expanded values") {
  // single step, V = 0, r = 1
  std::vector<double> r1{1.0}, v1{0.0};
  auto a1 = train::gae_advantages(r1, v1, 0.99, 0.95);
  CHECK(a1[0] == doctest::Approx(1.0));

  // two steps, V = 0, r = 1 each: A_0 = 1 + 0.99*0.95
  std::vector<double> r2{1.0, 1.0}, v2{0.0, 0.0};
  auto a2 = train::gae_advantages(r2, v2, 0.99, 0.95);
  CHECK(a2[0] == doctest::Approx(1.9405));
  CHECK(a2[1] == doctest::Approx(1.0));

  // all-zero rewards and values -> all-zero advantages
  std::vector<double> r3(5, 0.0), v3(5, 0.0);
  auto a3 = train::gae_advantages(r3, v3, 0.99, 0.95);
  for (double a : a3) CHECK(a == doctest::Approx(0.0));
}

TEST_CASE("gae: value net wrapper bootstraps terminals with zero") {
  envs::Trajectory traj;
  traj.transitions = {{{0.0}, 0, 1.0, false}, {{1.0}, 0, 1.0, true}};
  Rng rng(3);
  nets::ValueNet v = nets::ValueNet::create(1, rng, {8});
  std::vector<double> rewards{1.0, 1.0};
  auto adv = train::gae_advantages(traj, v, 0.5, 1.0, rewards);
  double v0 = v.value(std::vector<double>{0.0});
  double v1 = v.value(std::vector<double>{1.0});
  double d1 = 1.0 - v1;               // terminal: no continuation
  double d0 = 1.0 + 0.5 * v1 - v0;
  CHECK(adv[1] == doctest::Approx(d1));
  CHECK(adv[0] == doctest::Approx(d0 + 0.5 * d1));
}

TEST_CASE("discriminator: ascent does not decrease the objective (10 seeds)") {
  int passes = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed + 1);
    DiscriminatorConfig cfg;
    cfg.kind = divg::DivergenceKind::Learned;
    cfg.adam_reward.learning_rate = 1e-4;
    cfg.adam_ficnn.learning_rate = 1e-4;
    cfg.ficnn_layers = 2;
    cfg.ficnn_nodes = 16;
    cfg.reward_hidden = {16, 16, 16};
    Discriminator d = Discriminator::create(3, 2, cfg, rng);
    auto expert = random_batch(3, 2, 64, seed * 2 + 100);
    auto learner = random_batch(3, 2, 64, seed * 2 + 101);
    double before = d.objective(expert, learner);
    d.ascent_step(expert, learner);
    double after = d.objective(expert, learner);
    if (after >= before - 1e-12) ++passes;
  }
  CHECK(passes >= 9);
}

TEST_CASE("discriminator: equal batches with constant T reduce to the scaled mean gradient") {
  Rng rng(5);
  DiscriminatorConfig cfg;
  cfg.kind = divg::DivergenceKind::Learned;
  cfg.ficnn_layers = 2;
  cfg.ficnn_nodes = 8;
  cfg.reward_hidden = {8, 8, 8};
  Discriminator d = Discriminator::create(2, 2, cfg, rng);

  // zero the reward net, then set the output bias: T == c everywhere
  const double c = 0.4;
  auto& reward = d.mutable_reward();
  std::fill(reward.params.values.begin(), reward.params.values.end(), 0.0);
  reward.params.segment("reward/l3/b")[0] = c;

  auto batch = random_batch(2, 2, 32, 77);

  // gradient of mean T over the batch
  diff::Expression mean_T = [&](diff::Tape& t, std::span<const diff::Tape::NodeId> p,
                                std::span<const double>) {
    std::vector<diff::Tape::NodeId> outs;
    for (const auto& enc : batch) outs.push_back(reward.mlp.build(t, p, enc)[0]);
    return t.mean(outs);
  };
  auto base = diff::gradients(mean_T, reward.params, {});

  // analytic direction: (1 - f*'(c)) * grad mean T
  double h = 1e-6;
  double fprime = (d.fstar(c + h) - d.fstar(c - h)) / (2.0 * h);

  // discriminator gradient via a probe step with plain SGD-like Adam is
  // awkward; instead rebuild the same objective on a tape and read the seeds
  diff::Tape tape;
  std::vector<diff::Tape::NodeId> w_nodes;
  for (double v : reward.params.values) w_nodes.push_back(tape.leaf(v));
  std::vector<diff::Tape::NodeId> phi_nodes;
  for (double v : d.ficnn()->values) phi_nodes.push_back(tape.leaf(v));
  std::vector<std::pair<diff::Tape::NodeId, double>> seeds;
  double we = 1.0 / static_cast<double>(batch.size());
  for (const auto& enc : batch) {
    seeds.push_back({reward.mlp.build(tape, w_nodes, enc)[0], we});
  }
  for (const auto& enc : batch) {
    auto u = reward.mlp.build(tape, w_nodes, enc)[0];
    seeds.push_back({conj::build_fstar(*d.ficnn(), tape, phi_nodes, u), -we});
  }
  std::vector<double> adj;
  tape.backward(seeds, adj);
  for (std::size_t i = 0; i < reward.params.size(); ++i) {
    double got = adj[static_cast<std::size_t>(w_nodes[i])];
    double expect = (1.0 - fprime) * base.gradient[i];
    CHECK(got == doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("discriminator: inner weights stay nonnegative after steps") {
  Rng rng(9);
  DiscriminatorConfig cfg;
  cfg.kind = divg::DivergenceKind::Learned;
  cfg.ficnn_layers = 3;
  cfg.ficnn_nodes = 12;
  cfg.reward_hidden = {12, 12, 12};
  cfg.adam_reward.learning_rate = 1e-2;
  cfg.adam_ficnn.learning_rate = 1e-2;
  Discriminator d = Discriminator::create(2, 2, cfg, rng);
  for (int step = 0; step < 5; ++step) {
    d.ascent_step(random_batch(2, 2, 32, step * 2 + 1000),
                  random_batch(2, 2, 32, step * 2 + 1001));
  }
  const conj::FicnnParams& p = *d.ficnn();
  for (int layer = 1; layer < p.layer_count; ++layer) {
    std::size_t n = static_cast<std::size_t>(p.rows(layer)) *
                    static_cast<std::size_t>(p.rows(layer - 1));
    const double* wz = p.values.data() + p.wz_offset(layer);
    for (std::size_t k = 0; k < n; ++k) CHECK(wz[k] >= 0.0);
  }
}

TEST_CASE("zero-gap step: near-idempotent, tiny bias change when already shifted") {
  Rng rng(15);
  DiscriminatorConfig cfg;
  cfg.kind = divg::DivergenceKind::Learned;
  cfg.ficnn_layers = 4;
  cfg.ficnn_nodes = 25;
  cfg.reward_hidden = {8, 8, 8};
  Discriminator d = Discriminator::create(2, 2, cfg, rng);
  Interval hint{-4.0, 4.0};
  d.shift_to_zero_gap(hint);
  double bs_before = d.ficnn()->shared_bias();
  auto outcome = d.shift_to_zero_gap(hint);
  CHECK(std::abs(d.ficnn()->shared_bias() - bs_before) <= 5e-4);
  CHECK(std::abs(outcome.pre_shift_delta) <= 1e-3);
  CHECK(std::abs(outcome.residual) <= 1e-3);
}

TEST_CASE("trpo: zero advantages leave the policy unchanged") {
  envs::Gridworld gw;
  Rng rng(1);
  nets::PolicyNet policy = nets::PolicyNet::create(gw.obs_dim(), gw.num_actions(), rng,
                                                   {16, 16});
  nets::ValueNet value = nets::ValueNet::create(gw.obs_dim(), rng, {16, 16});
  std::fill(value.params.values.begin(), value.params.values.end(), 0.0);
  diff::AdamState vadam = diff::AdamState::init(value.params.size());
  envs::RandomPolicy rnd(gw.num_actions());
  auto trajs = envs::sample_trajectories(gw, rnd, 4, 3);
  std::vector<std::vector<double>> rewards(trajs.size());
  for (std::size_t i = 0; i < trajs.size(); ++i) rewards[i].assign(trajs[i].size(), 0.0);
  auto before = policy.params.values;
  Rng step_rng(2);
  auto report = train::trpo_step(policy, value, vadam, trajs, rewards, {}, {}, {},
                                 step_rng);
  CHECK_FALSE(report.accepted);
  CHECK(policy.params.values == before);
}

TEST_CASE("trpo: accepted steps respect the KL trust region") {
  envs::Gridworld gw;
  Rng rng(11);
  nets::PolicyNet policy = nets::PolicyNet::create(gw.obs_dim(), gw.num_actions(), rng,
                                                   {32, 32});
  nets::ValueNet value = nets::ValueNet::create(gw.obs_dim(), rng, {32, 32});
  diff::AdamState vadam = diff::AdamState::init(value.params.size());
  train::TrpoConfig trpo;  // max_kl = 0.01
  Rng step_rng(7);
  int accepted = 0;
  for (int step = 0; step < 10; ++step) {
    envs::NetPolicy np(policy);
    auto trajs = envs::sample_trajectories(gw, np, 8, 100 + step);
    std::vector<std::vector<double>> rewards(trajs.size());
    for (std::size_t i = 0; i < trajs.size(); ++i) {
      rewards[i].resize(trajs[i].size());
      for (std::size_t t = 0; t < trajs[i].size(); ++t) {
        rewards[i][t] = trajs[i].transitions[t].reward;  // oracle env reward
      }
    }
    auto report = train::trpo_step(policy, value, vadam, trajs, rewards, trpo, {},
                                   {}, step_rng);
    if (report.accepted) {
      ++accepted;
      CHECK(report.mean_kl <= trpo.max_kl + 1e-6);
      CHECK(report.improvement > 0.0);
    }
  }
  CHECK(accepted >= 5);
}

TEST_CASE("trpo: oracle reward solves gridworld" * doctest::timeout(600)) {
  envs::Gridworld gw;
  TrainConfig cfg;
  cfg.epochs = 100;
  cfg.pairs_per_epoch = 200;
  cfg.entropy_coeff = 0.0;
  cfg.seed = 5;
  auto refs = gridworld_refs();
  auto result = train::train_rl(cfg, gw, std::nullopt);
  nets::PolicyNet& policy = result.policy;
  envs::NetPolicy np(policy);
  double mean = envs::evaluate_policy(gw, np, 50, 999).mean;
  double norm = envs::normalized_return(mean, refs.expert_mean, refs.random_mean);
  CHECK(norm >= 0.9);
}

TEST_CASE("train: objective consistency and determinism on a short run") {
  envs::Gridworld gw;
  envs::DemoSet demos = gridworld_demos(5, 42);
  TrainConfig cfg;
  cfg.algorithm = Algorithm::Fgail;
  cfg.epochs = 4;
  cfg.pairs_per_epoch = 80;
  cfg.ficnn_layers = 2;
  cfg.ficnn_nodes = 16;
  cfg.seed = 9;
  train::ScoreRef refs{1.0, 0.4};

  std::vector<double> recomputed;
  auto sink = [&recomputed](const train::EpochReport& rep,
                            const train::EpochContext& ctx) {
    // recompute mean_E[T] - mean_L[f*(T)] from the stored batches
    double me = 0.0;
    for (const auto& enc : *ctx.expert_batch) me += ctx.discriminator->signal(enc);
    me /= static_cast<double>(ctx.expert_batch->size());
    double ml = 0.0;
    for (const auto& enc : *ctx.learner_batch) {
      ml += ctx.discriminator->fstar(ctx.discriminator->signal(enc));
    }
    ml /= static_cast<double>(ctx.learner_batch->size());
    recomputed.push_back(me - ml);
  };

  auto r1 = train::train(cfg, gw, demos, refs, sink);
  REQUIRE(r1.reports.size() == 4);
  for (std::size_t i = 0; i < r1.reports.size(); ++i) {
    CHECK(std::abs(r1.reports[i].objective_value - recomputed[i]) <= 1e-9);
    CHECK(std::isfinite(r1.reports[i].entropy));
    CHECK(std::isfinite(r1.reports[i].gap_delta));
  }

  auto r2 = train::train(cfg, gw, demos, refs);
  REQUIRE(r2.reports.size() == r1.reports.size());
  for (std::size_t i = 0; i < r1.reports.size(); ++i) {
    CHECK(r1.reports[i] == r2.reports[i]);
  }
}

TEST_CASE("train: fgail keeps a valid divergence every epoch") {
  envs::Gridworld gw;
  envs::DemoSet demos = gridworld_demos(5, 21);
  TrainConfig cfg;
  cfg.algorithm = Algorithm::Fgail;
  cfg.epochs = 6;
  cfg.pairs_per_epoch = 60;
  cfg.ficnn_layers = 2;
  cfg.ficnn_nodes = 16;
  cfg.seed = 10;
  train::ScoreRef refs{1.0, 0.4};

  auto sink = [](const train::EpochReport&, const train::EpochContext& ctx) {
    REQUIRE(ctx.discriminator->ficnn() != nullptr);
    double lo = *std::min_element(ctx.learner_u->begin(), ctx.learner_u->end());
    double hi = *std::max_element(ctx.learner_u->begin(), ctx.learner_u->end());
    double w = std::max(1.0, hi - lo);
    Interval range{lo - w / 2.0, hi + w / 2.0};
    auto re = conj::estimate_min_gap(
        conj::make_scalar_fn(*ctx.discriminator->ficnn()), 0.0, 0.05, 200, range);
    CHECK(std::abs(re.delta) <= 1e-3);
    CHECK(conj::convexity_probe(*ctx.discriminator->ficnn(), range, 2000, 3) <= 1e-6);
  };
  train::train(cfg, gw, demos, refs, sink);
}

TEST_CASE("train: identity sanity — self-demos keep the objective near zero") {
  envs::Gridworld gw;
  TrainConfig cfg;
  cfg.algorithm = Algorithm::Fgail;
  cfg.epochs = 25;
  cfg.pairs_per_epoch = 100;
  cfg.ficnn_layers = 2;
  cfg.ficnn_nodes = 25;
  cfg.seed = 33;
  train::ScoreRef refs{1.0, 0.4};

  // demos drawn from the same freshly initialized policy the run starts with
  Rng init_rng(Rng::derive(cfg.seed, 1));
  nets::PolicyNet self = nets::PolicyNet::create(gw.obs_dim(), gw.num_actions(), init_rng);
  envs::NetPolicy np(self);
  envs::DemoSet demos;
  demos.env_id = gw.id();
  demos.trajectories = envs::sample_trajectories(gw, np, 20, 555);

  auto result = train::train(cfg, gw, demos, refs);
  for (const auto& rep : result.reports) {
    CHECK(rep.objective_value <= 0.05);
  }
}

TEST_CASE("train: gail and rkl_vim run with frozen conjugates") {
  envs::Gridworld gw;
  envs::DemoSet demos = gridworld_demos(5, 77);
  train::ScoreRef refs{1.0, 0.4};
  for (auto algo : {Algorithm::Gail, Algorithm::RklVim}) {
    TrainConfig cfg;
    cfg.algorithm = algo;
    cfg.epochs = 3;
    cfg.pairs_per_epoch = 60;
    cfg.seed = 3;
    auto result = train::train(cfg, gw, demos, refs);
    CHECK(result.reports.size() == 3);
    CHECK(result.discriminator->ficnn() == nullptr);
    // gap_delta reports the fixed conjugate's constant minimum gap
    double expect = algo == Algorithm::Gail ? 2.0 * std::log(2.0) : 0.0;
    for (const auto& rep : result.reports) {
      CHECK(rep.gap_delta == doctest::Approx(expect).epsilon(1e-3));
    }
  }
}

TEST_CASE("train: bad inputs") {
  envs::Gridworld gw;
  envs::DemoSet empty;
  empty.env_id = gw.id();
  TrainConfig cfg;
  train::ScoreRef refs{1.0, 0.0};
  CHECK_THROWS_AS(train::train(cfg, gw, empty, refs), ConfigError);

  cfg.algorithm = Algorithm::Bc;
  envs::DemoSet demos = gridworld_demos(3, 1);
  CHECK_THROWS_AS(train::train(cfg, gw, demos, refs), ConfigError);

  envs::DemoSet wrong = gridworld_demos(3, 1);
  wrong.env_id = "cartpole_lite";
  cfg.algorithm = Algorithm::Fgail;
  CHECK_THROWS_AS(train::train(cfg, gw, wrong, refs), ConfigError);
}

TEST_CASE("train_bc: split sizes, accuracy, and errors") {
  envs::Gridworld gw;
  TrainConfig cfg;

  envs::DemoSet demos = gridworld_demos(10, 3);
  train::BcReport report;
  nets::PolicyNet policy = train::train_bc(cfg, gw, demos, 12, &report);
  CHECK(report.train_trajectories == 7);
  CHECK(report.val_trajectories == 3);
  CHECK(report.val_accuracy >= 0.95);
  CHECK_FALSE(report.degenerate);

  envs::DemoSet empty;
  empty.env_id = gw.id();
  CHECK_THROWS_AS(train::train_bc(cfg, gw, empty, 1), ConfigError);
  envs::DemoSet one = gridworld_demos(1, 5);
  CHECK_THROWS_AS(train::train_bc(cfg, gw, one, 1), ConfigError);
}

TEST_CASE("train_bc: single-class demos fit with a warning") {
  envs::Gridworld gw;
  // synthetic demos that always move right
  envs::DemoSet demos;
  demos.env_id = gw.id();
  Rng rng(4);
  for (int k = 0; k < 4; ++k) {
    envs::Trajectory t;
    t.seed = static_cast<std::uint64_t>(k);
    auto state = gw.encode(k * 5);
    for (int step = 0; step < 4; ++step) {
      auto out = gw.step(state, 3, rng);
      t.transitions.push_back({state, 3, out.reward, out.done});
      state = out.next_state;
      if (out.done) break;
    }
    demos.trajectories.push_back(std::move(t));
  }
  TrainConfig cfg;
  cfg.bc_max_epochs = 20;
  train::BcReport report;
  train::train_bc(cfg, gw, demos, 2, &report);
  CHECK(report.degenerate);
  CHECK(report.val_accuracy == doctest::Approx(1.0));
}
