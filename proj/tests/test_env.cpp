#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>

#include "fdiv/env.hpp"

using namespace fdl;
using envs::Gridworld;
using envs::TabularMdp;
using envs::Trajectory;

TEST_CASE("gridworld: deterministic moves, boundaries, absorbing goal") {
  Gridworld gw;
  Rng rng(0);

  // (2,2) + right -> (2,3), no reward
  auto s = gw.encode(2 * 5 + 2);
  auto out = gw.step(s, 3, rng);
  CHECK(gw.state_index(out.next_state) == 2 * 5 + 3);
  CHECK(out.reward == doctest::Approx(0.0));
  CHECK_FALSE(out.done);

  // edge: moving off-grid keeps the cell
  auto corner = gw.encode(0);
  auto stay = gw.step(corner, 0, rng);  // up from row 0
  CHECK(gw.state_index(stay.next_state) == 0);

  // at the goal: absorbing, rewarded, done
  auto goal = gw.encode(gw.goal_index());
  auto g = gw.step(goal, 1, rng);
  CHECK(g.done);
  CHECK(g.reward == doctest::Approx(1.0));
  CHECK(gw.state_index(g.next_state) == gw.goal_index());

  // stepping into the goal is rewarded and terminal
  auto before = gw.encode(gw.goal_index() - 1);
  auto in = gw.step(before, 3, rng);
  CHECK(in.done);
  CHECK(in.reward == doctest::Approx(1.0));

  CHECK_THROWS_AS(gw.step(s, 7, rng), ConfigError);
}

TEST_CASE("value_iteration: three-state chain") {
  // s0 -> s1 -> s2(goal, +1); action 0 advances, action 1 stays
  TabularMdp mdp;
  mdp.num_states = 3;
  mdp.num_actions = 2;
  mdp.outcomes = {
      {{{1, 1.0, 0.0, false}}, {{0, 1.0, 0.0, false}}},
      {{{2, 1.0, 1.0, true}}, {{1, 1.0, 0.0, false}}},
      {{{2, 1.0, 0.0, true}}, {{2, 1.0, 0.0, true}}},
  };
  auto res = envs::value_iteration(mdp, 0.9, 1e-10);
  CHECK(res.values[1] == doctest::Approx(1.0));
  CHECK(res.values[0] == doctest::Approx(0.9));
  CHECK(res.policy[0] == 0);
  CHECK(res.policy[1] == 0);

  // gamma = 0: myopic values
  auto myopic = envs::value_iteration(mdp, 0.0, 1e-10);
  CHECK(myopic.values[0] == doctest::Approx(0.0));
  CHECK(myopic.values[1] == doctest::Approx(1.0));

  // non-finite reward rejected
  mdp.outcomes[0][0][0].reward = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(envs::value_iteration(mdp, 0.9, 1e-10), ConfigError);
}

TEST_CASE("gridworld tabular rows are stochastic") {
  Gridworld gw;
  TabularMdp mdp = gw.tabular();
  for (const auto& per_state : mdp.outcomes) {
    for (const auto& outs : per_state) {
      double total = 0.0;
      for (const auto& o : outs) total += o.prob;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("gridworld expert reaches the goal from every start") {
  Gridworld gw;
  auto vi = envs::value_iteration(gw.tabular(), gw.gamma(), 1e-10);
  envs::TabularPolicy expert(vi.policy);
  auto trajs = envs::sample_trajectories(gw, expert, 60, 17);
  for (const auto& t : trajs) {
    CHECK(t.total_reward() == doctest::Approx(1.0));
    CHECK(t.transitions.back().done);
  }
}

TEST_CASE("gridworld expert dominates random policies") {
  Gridworld gw;
  auto vi = envs::value_iteration(gw.tabular(), gw.gamma(), 1e-10);
  envs::TabularPolicy expert(vi.policy);
  double expert_mean = envs::evaluate_policy(gw, expert, 50, 3).mean;
  Rng seeds(88);
  // spec-scale run (10^3 policies x 50 episodes) lives in the acceptance
  // suite; a 100-policy slice keeps this suite quick
  for (int i = 0; i < 100; ++i) {
    envs::RandomPolicy rnd(gw.num_actions());
    double mean = envs::evaluate_policy(gw, rnd, 50, seeds.next_u64()).mean;
    CHECK(expert_mean >= mean);
  }
}

TEST_CASE("sample_trajectories: determinism and horizon bound") {
  Gridworld gw;
  envs::RandomPolicy rnd(gw.num_actions());
  auto a = envs::sample_trajectories(gw, rnd, 10, 42);
  auto b = envs::sample_trajectories(gw, rnd, 10, 42);
  CHECK(a == b);

  std::size_t pairs = 0;
  for (const auto& t : a) {
    CHECK(t.size() <= static_cast<std::size_t>(gw.horizon()));
    pairs += t.size();
    // done only at the final transition
    for (std::size_t i = 0; i + 1 < t.transitions.size(); ++i) {
      CHECK_FALSE(t.transitions[i].done);
    }
  }
  CHECK(pairs <= 500);

  auto c = envs::sample_trajectories(gw, rnd, 10, 43);
  CHECK(a != c);
}

TEST_CASE("cartpole: physics sanity and termination") {
  envs::CartpoleLite cp;
  Rng rng(1);
  auto s = cp.reset(rng);
  CHECK(s.size() == 4);
  for (double x : s) CHECK(std::abs(x) <= 0.05);

  // constant-left policy falls over well before the horizon
  auto out = cp.step(s, 0, rng);
  CHECK(out.reward == doctest::Approx(1.0));
  int steps = 0;
  auto state = s;
  bool done = false;
  while (!done && steps < cp.horizon()) {
    auto o = cp.step(state, 0, rng);
    state = o.next_state;
    done = o.done;
    ++steps;
  }
  CHECK(done);
  CHECK(steps < 100);

  CHECK_THROWS_AS(cp.step(s, 2, rng), ConfigError);
}

TEST_CASE("normalized_return: caption definition") {
  CHECK(envs::normalized_return(10.0, 10.0, 2.0) == doctest::Approx(1.0));
  CHECK(envs::normalized_return(2.0, 10.0, 2.0) == doctest::Approx(0.0));
  CHECK(envs::normalized_return(6.0, 10.0, 2.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(envs::normalized_return(1.0, 5.0, 5.0), ConfigError);
}

TEST_CASE("demo jsonl round-trip is exact") {
  Gridworld gw;
  auto vi = envs::value_iteration(gw.tabular(), gw.gamma(), 1e-10);
  envs::TabularPolicy expert(vi.policy);
  envs::DemoSet demos;
  demos.env_id = gw.id();
  demos.source_policy_id = "expert";
  demos.trajectories = envs::sample_trajectories(gw, expert, 10, 7);

  auto path = std::filesystem::temp_directory_path() / "fdl_demo_roundtrip.jsonl";
  envs::save_demos(path.string(), demos);
  auto loaded = envs::load_demos(path.string());
  CHECK(loaded.env_id == demos.env_id);
  REQUIRE(loaded.trajectories.size() == demos.trajectories.size());
  for (std::size_t i = 0; i < demos.trajectories.size(); ++i) {
    CHECK(loaded.trajectories[i] == demos.trajectories[i]);
  }
  std::filesystem::remove(path);

  CHECK_THROWS_AS(envs::load_demos("/nonexistent/path.jsonl"), IoError);
}

TEST_CASE("make_env rejects unknown ids") {
  CHECK_THROWS_AS(envs::make_env("mujoco_halfcheetah"), ConfigError);
  CHECK(envs::make_env("gridworld")->id() == "gridworld");
  CHECK(envs::make_env("cartpole_lite")->id() == "cartpole_lite");
}
