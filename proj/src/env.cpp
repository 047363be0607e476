#include "fdiv/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace fdl::envs {

double Trajectory::total_reward() const {
  double r = 0.0;
  for (const Transition& t : transitions) r += t.reward;
  return r;
}

std::size_t DemoSet::pair_count() const {
  std::size_t n = 0;
  for (const Trajectory& t : trajectories) n += t.size();
  return n;
}

ValueIterationResult value_iteration(const TabularMdp& mdp, double gamma,
                                     double tolerance) {
  if (tolerance <= 0.0) throw ConfigError("value_iteration: tolerance must be positive");
  for (const auto& per_state : mdp.outcomes) {
    for (const auto& outs : per_state) {
      for (const auto& o : outs) {
        if (!std::isfinite(o.reward)) {
          throw ConfigError("value_iteration: non-finite reward");
        }
      }
    }
  }
  ValueIterationResult res;
  res.values.assign(static_cast<std::size_t>(mdp.num_states), 0.0);
  std::vector<double> next(res.values.size(), 0.0);
  double residual = tolerance + 1.0;
  while (residual >= tolerance) {
    residual = 0.0;
    for (int s = 0; s < mdp.num_states; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < mdp.num_actions; ++a) {
        double q = 0.0;
        for (const auto& o : mdp.outcomes[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]) {
          double cont = o.done ? 0.0 : gamma * res.values[static_cast<std::size_t>(o.next)];
          q += o.prob * (o.reward + cont);
        }
        best = std::max(best, q);
      }
      next[static_cast<std::size_t>(s)] = best;
      residual = std::max(residual, std::abs(best - res.values[static_cast<std::size_t>(s)]));
    }
    res.values.swap(next);
    res.sweeps += 1;
    if (res.sweeps > 100000) throw NumericError("value_iteration did not converge");
  }
  res.policy.assign(static_cast<std::size_t>(mdp.num_states), 0);
  for (int s = 0; s < mdp.num_states; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    int best_a = 0;
    for (int a = 0; a < mdp.num_actions; ++a) {
      double q = 0.0;
      for (const auto& o : mdp.outcomes[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]) {
        double cont = o.done ? 0.0 : gamma * res.values[static_cast<std::size_t>(o.next)];
        q += o.prob * (o.reward + cont);
      }
      if (q > best) {
        best = q;
        best_a = a;
      }
    }
    res.policy[static_cast<std::size_t>(s)] = best_a;
  }
  return res;
}

int Gridworld::state_index(std::span<const double> state) const {
  if (static_cast<int>(state.size()) != obs_dim()) {
    throw ConfigError("gridworld: bad observation size");
  }
  int best = 0;
  for (int i = 1; i < obs_dim(); ++i) {
    if (state[static_cast<std::size_t>(i)] > state[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

std::vector<double> Gridworld::encode(int index) const {
  std::vector<double> out(static_cast<std::size_t>(obs_dim()), 0.0);
  out[static_cast<std::size_t>(index)] = 1.0;
  return out;
}

std::vector<double> Gridworld::reset(Rng& rng) const {
  int idx = rng.uniform_int(obs_dim() - 1);  // uniform over non-goal cells
  return encode(idx);
}

StepOut Gridworld::step(std::span<const double> state, int action, Rng&) const {
  if (action < 0 || action >= num_actions()) {
    throw ConfigError("gridworld: invalid action index");
  }
  int idx = state_index(state);
  if (idx == goal_index()) {
    return {encode(idx), 1.0, true};  // absorbing goal
  }
  int row = idx / kSize;
  int col = idx % kSize;
  switch (action) {
    case 0: row = std::max(0, row - 1); break;          // up
    case 1: row = std::min(kSize - 1, row + 1); break;  // down
    case 2: col = std::max(0, col - 1); break;          // left
    case 3: col = std::min(kSize - 1, col + 1); break;  // right
  }
  int next = row * kSize + col;
  bool at_goal = next == goal_index();
  return {encode(next), at_goal ? 1.0 : 0.0, at_goal};
}

TabularMdp Gridworld::tabular() const {
  TabularMdp mdp;
  mdp.num_states = obs_dim();
  mdp.num_actions = num_actions();
  mdp.outcomes.assign(static_cast<std::size_t>(mdp.num_states), {});
  Rng dummy(0);
  for (int s = 0; s < mdp.num_states; ++s) {
    auto& row = mdp.outcomes[static_cast<std::size_t>(s)];
    row.resize(static_cast<std::size_t>(mdp.num_actions));
    for (int a = 0; a < mdp.num_actions; ++a) {
      StepOut out = step(encode(s), a, dummy);
      row[static_cast<std::size_t>(a)] = {
          {state_index(out.next_state), 1.0, out.reward, out.done}};
    }
  }
  return mdp;
}

std::vector<double> CartpoleLite::reset(Rng& rng) const {
  std::vector<double> s(4);
  for (double& x : s) x = rng.uniform(-0.05, 0.05);
  return s;
}

StepOut CartpoleLite::step(std::span<const double> state, int action, Rng&) const {
  if (action != 0 && action != 1) {
    throw ConfigError("cartpole: invalid action index");
  }
  constexpr double kGravity = 9.8;
  constexpr double kMassCart = 1.0;
  constexpr double kMassPole = 0.1;
  constexpr double kTotalMass = kMassCart + kMassPole;
  constexpr double kLength = 0.5;  // half pole length
  constexpr double kPoleMassLength = kMassPole * kLength;
  constexpr double kForce = 10.0;
  constexpr double kTau = 0.02;
  constexpr double kThetaLimit = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
  constexpr double kXLimit = 2.4;

  double x = state[0];
  double x_dot = state[1];
  double theta = state[2];
  double theta_dot = state[3];

  double force = action == 1 ? kForce : -kForce;
  double cos_t = std::cos(theta);
  double sin_t = std::sin(theta);
  double temp = (force + kPoleMassLength * theta_dot * theta_dot * sin_t) / kTotalMass;
  double theta_acc = (kGravity * sin_t - cos_t * temp) /
                     (kLength * (4.0 / 3.0 - kMassPole * cos_t * cos_t / kTotalMass));
  double x_acc = temp - kPoleMassLength * theta_acc * cos_t / kTotalMass;

  x += kTau * x_dot;
  x_dot += kTau * x_acc;
  theta += kTau * theta_dot;
  theta_dot += kTau * theta_acc;

  bool done = std::abs(x) > kXLimit || std::abs(theta) > kThetaLimit;
  return {{x, x_dot, theta, theta_dot}, 1.0, done};
}

std::unique_ptr<Env> make_env(const std::string& id) {
  if (id == "gridworld") return std::make_unique<Gridworld>();
  if (id == "cartpole_lite") return std::make_unique<CartpoleLite>();
  throw ConfigError("unknown env_id '" + id + "'");
}

int TabularPolicy::act(std::span<const double> state, Rng&) const {
  int best = 0;
  for (std::size_t i = 1; i < state.size(); ++i) {
    if (state[i] > state[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return actions_[static_cast<std::size_t>(best)];
}

std::vector<Trajectory> sample_trajectories(const Env& env, const Policy& policy,
                                            int count, std::uint64_t seed) {
  if (count < 1) throw ConfigError("sample_trajectories: count must be >= 1");
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    Trajectory traj;
    traj.seed = Rng::derive(seed, static_cast<std::uint64_t>(k));
    Rng rng(traj.seed);
    std::vector<double> state = env.reset(rng);
    for (int t = 0; t < env.horizon(); ++t) {
      int action = policy.act(state, rng);
      StepOut step = env.step(state, action, rng);
      traj.transitions.push_back({state, action, step.reward, step.done});
      state = std::move(step.next_state);
      if (step.done) break;
    }
    out.push_back(std::move(traj));
  }
  return out;
}

double normalized_return(double raw, double expert_mean, double random_mean) {
  double denom = expert_mean - random_mean;
  if (std::abs(denom) < 1e-12) {
    throw ConfigError("normalized_return: expert and random means coincide");
  }
  return (raw - random_mean) / denom;
}

ReturnStats evaluate_policy(const Env& env, const Policy& policy, int episodes,
                            std::uint64_t seed) {
  std::vector<Trajectory> trajs = sample_trajectories(env, policy, episodes, seed);
  ReturnStats stats;
  stats.episodes = episodes;
  std::vector<double> returns;
  returns.reserve(trajs.size());
  for (const Trajectory& t : trajs) {
    returns.push_back(t.total_reward());
    double disc = 0.0;
    double g = 1.0;
    for (const Transition& tr : t.transitions) {
      disc += g * tr.reward;
      g *= env.gamma();
    }
    stats.mean_discounted += disc;
  }
  stats.mean_discounted /= static_cast<double>(episodes);
  for (double r : returns) stats.mean += r;
  stats.mean /= static_cast<double>(episodes);
  for (double r : returns) stats.std_dev += (r - stats.mean) * (r - stats.mean);
  stats.std_dev = std::sqrt(stats.std_dev / static_cast<double>(episodes));
  return stats;
}

void save_demos(const std::string& path, const DemoSet& demos) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const Trajectory& traj : demos.trajectories) {
    nlohmann::json line;
    line["env_id"] = demos.env_id;
    line["seed"] = traj.seed;
    nlohmann::json transitions = nlohmann::json::array();
    for (const Transition& t : traj.transitions) {
      transitions.push_back({{"s", t.state}, {"a", t.action}, {"r", t.reward}, {"done", t.done}});
    }
    line["transitions"] = std::move(transitions);
    out << line.dump() << "\n";
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

DemoSet load_demos(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  DemoSet demos;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("demo file line " + std::to_string(line_no) + ": " + e.what());
    }
    std::string env_id = j.at("env_id").get<std::string>();
    if (demos.env_id.empty()) {
      demos.env_id = env_id;
    } else if (demos.env_id != env_id) {
      throw ConfigError("demo file mixes environments");
    }
    Trajectory traj;
    traj.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& t : j.at("transitions")) {
      Transition tr;
      tr.state = t.at("s").get<std::vector<double>>();
      tr.action = t.at("a").get<int>();
      tr.reward = t.at("r").get<double>();
      tr.done = t.at("done").get<bool>();
      traj.transitions.push_back(std::move(tr));
    }
    demos.trajectories.push_back(std::move(traj));
  }
  return demos;
}

}  // namespace fdl::envs
