#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fdiv/common.hpp"
#include "fdiv/nets.hpp"

namespace fdl::envs {

struct Transition {
  std::vector<double> state;
  int action = 0;
  double reward = 0.0;
  bool done = false;

  bool operator==(const Transition&) const = default;
};

// Equality covers the interchange-format content (states, actions, rewards,
// done flags, seed), which is what the bit-exact round-trip contract is
// about. Successor states are the following transition's state; advantage
// estimation bootstraps terminal values with 0.
struct Trajectory {
  std::vector<Transition> transitions;
  std::uint64_t seed = 0;

  std::size_t size() const { return transitions.size(); }
  double total_reward() const;

  bool operator==(const Trajectory&) const = default;
};

struct DemoSet {
  std::vector<Trajectory> trajectories;
  std::string source_policy_id;
  std::string env_id;

  std::size_t pair_count() const;
};

struct StepOut {
  std::vector<double> next_state;
  double reward = 0.0;
  bool done = false;
};

// Stateless environment description: step is a pure function of
// (state, action, rng).
class Env {
 public:
  virtual ~Env() = default;
  virtual std::string id() const = 0;
  virtual int obs_dim() const = 0;
  virtual int num_actions() const = 0;
  virtual int horizon() const = 0;
  virtual double gamma() const = 0;
  virtual std::vector<double> reset(Rng& rng) const = 0;
  virtual StepOut step(std::span<const double> state, int action, Rng& rng) const = 0;
};

// Finite MDP view for exact planning.
struct TabularMdp {
  struct Outcome {
    int next = 0;
    double prob = 1.0;
    double reward = 0.0;
    bool done = false;
  };
  int num_states = 0;
  int num_actions = 0;
  // outcomes[s][a] -> list of (next, prob, reward, done)
  std::vector<std::vector<std::vector<Outcome>>> outcomes;
};

struct ValueIterationResult {
  std::vector<int> policy;   // greedy action per state
  std::vector<double> values;
  int sweeps = 0;
};

// Terminal transitions contribute no continuation value.
ValueIterationResult value_iteration(const TabularMdp& mdp, double gamma,
                                     double tolerance);

// 5x5 grid, deterministic moves, absorbing goal in the far corner worth +1,
// uniform starts over non-goal cells, one-hot observations.
class Gridworld : public Env {
 public:
  Gridworld() = default;

  std::string id() const override { return "gridworld"; }
  int obs_dim() const override { return kSize * kSize; }
  int num_actions() const override { return 4; }
  int horizon() const override { return 50; }
  double gamma() const override { return 0.99; }
  std::vector<double> reset(Rng& rng) const override;
  StepOut step(std::span<const double> state, int action, Rng& rng) const override;

  static constexpr int kSize = 5;
  int goal_index() const { return kSize * kSize - 1; }
  int state_index(std::span<const double> state) const;
  std::vector<double> encode(int index) const;
  TabularMdp tabular() const;
};

// Classic cart-pole balancing dynamics: 4-d state, two actions, +1 per
// surviving step, 200-step horizon.
class CartpoleLite : public Env {
 public:
  CartpoleLite() = default;

  std::string id() const override { return "cartpole_lite"; }
  int obs_dim() const override { return 4; }
  int num_actions() const override { return 2; }
  int horizon() const override { return 200; }
  double gamma() const override { return 0.99; }
  std::vector<double> reset(Rng& rng) const override;
  StepOut step(std::span<const double> state, int action, Rng& rng) const override;
};

std::unique_ptr<Env> make_env(const std::string& id);

class Policy {
 public:
  virtual ~Policy() = default;
  virtual int act(std::span<const double> state, Rng& rng) const = 0;
};

class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(int num_actions) : num_actions_(num_actions) {}
  int act(std::span<const double>, Rng& rng) const override {
    return rng.uniform_int(num_actions_);
  }

 private:
  int num_actions_;
};

// Greedy table over one-hot observations.
class TabularPolicy : public Policy {
 public:
  explicit TabularPolicy(std::vector<int> actions) : actions_(std::move(actions)) {}
  int act(std::span<const double> state, Rng&) const override;
  const std::vector<int>& table() const { return actions_; }

 private:
  std::vector<int> actions_;
};

class NetPolicy : public Policy {
 public:
  explicit NetPolicy(const nets::PolicyNet& net) : net_(&net) {}
  int act(std::span<const double> state, Rng& rng) const override {
    return net_->sample_action(state, rng);
  }

 private:
  const nets::PolicyNet* net_;
};

// Deterministic in (env, policy, count, seed); per-trajectory seeds are
// derived by counter so rollouts could fan out without changing results.
std::vector<Trajectory> sample_trajectories(const Env& env, const Policy& policy,
                                            int count, std::uint64_t seed);

// (raw - random_mean) / (expert_mean - random_mean)
double normalized_return(double raw, double expert_mean, double random_mean);

struct ReturnStats {
  double mean = 0.0;
  double std_dev = 0.0;
  double mean_discounted = 0.0;
  int episodes = 0;
};

ReturnStats evaluate_policy(const Env& env, const Policy& policy, int episodes,
                            std::uint64_t seed);

// JSON-lines demo persistence, one trajectory per line:
// {"env_id":..., "seed":..., "transitions":[{"s":[...],"a":..,"r":..,"done":..}]}
void save_demos(const std::string& path, const DemoSet& demos);
DemoSet load_demos(const std::string& path);

}  // namespace fdl::envs
