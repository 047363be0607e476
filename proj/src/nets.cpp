#include "fdiv/nets.hpp"

#include <cmath>

namespace fdl::nets {

std::vector<double> encode_state_action(std::span<const double> state, int action,
                                        int num_actions) {
  std::vector<double> out(state.begin(), state.end());
  if (num_actions > 0) {
    if (action < 0 || action >= num_actions) {
      throw ConfigError("encode_state_action: action index out of range");
    }
    out.resize(state.size() + static_cast<std::size_t>(num_actions), 0.0);
    out[state.size() + static_cast<std::size_t>(action)] = 1.0;
  }
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  double m = logits[0];
  for (double l : logits) m = std::max(m, l);
  std::vector<double> out(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    z += out[i];
  }
  for (double& p : out) p /= z;
  return out;
}

namespace {

diff::ParamVector init_vector(const Mlp& mlp, Rng& rng) {
  diff::ParamVector pv;
  pv.layout = diff::ParamLayout::build(mlp.segments());
  pv.values.assign(mlp.param_count(), 0.0);
  mlp.init_params(pv.values, rng);
  return pv;
}

}  // namespace

PolicyNet PolicyNet::create(int obs_dim, int num_actions, Rng& rng,
                            std::vector<int> hidden) {
  if (num_actions < 2) throw ConfigError("policy: need at least two actions");
  PolicyNet net;
  net.obs_dim = obs_dim;
  net.num_actions = num_actions;
  std::vector<int> dims{obs_dim};
  std::vector<Act> acts;
  for (int h : hidden) {
    dims.push_back(h);
    acts.push_back(Act::Tanh);
  }
  dims.push_back(num_actions);
  acts.push_back(Act::Linear);
  net.mlp = Mlp("policy", std::move(dims), std::move(acts));
  net.params = init_vector(net.mlp, rng);
  return net;
}

std::vector<double> PolicyNet::logits(std::span<const double> state) const {
  if (static_cast<int>(state.size()) != obs_dim) {
    throw ConfigError("policy: state dimension mismatch");
  }
  return mlp.forward(params.values, state);
}

std::vector<double> PolicyNet::distribution(std::span<const double> state) const {
  return softmax(logits(state));
}

std::pair<double, double> PolicyNet::log_prob_and_entropy(
    std::span<const double> state, int action) const {
  if (action < 0 || action >= num_actions) {
    throw ConfigError("policy: action index out of range");
  }
  std::vector<double> l = logits(state);
  double m = l[0];
  for (double x : l) m = std::max(m, x);
  double z = 0.0;
  for (double x : l) z += std::exp(x - m);
  double lse = m + std::log(z);
  double log_p = l[static_cast<std::size_t>(action)] - lse;
  double entropy = 0.0;
  for (double x : l) {
    double lp = x - lse;
    entropy -= std::exp(lp) * lp;
  }
  return {log_p, std::max(0.0, entropy)};
}

int PolicyNet::sample_action(std::span<const double> state, Rng& rng) const {
  std::vector<double> p = distribution(state);
  double r = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (r < acc) return static_cast<int>(i);
  }
  return num_actions - 1;
}

ValueNet ValueNet::create(int obs_dim, Rng& rng, std::vector<int> hidden) {
  ValueNet net;
  net.obs_dim = obs_dim;
  std::vector<int> dims{obs_dim};
  std::vector<Act> acts;
  for (int h : hidden) {
    dims.push_back(h);
    acts.push_back(Act::Tanh);
  }
  dims.push_back(1);
  acts.push_back(Act::Linear);
  net.mlp = Mlp("value", std::move(dims), std::move(acts));
  net.params = init_vector(net.mlp, rng);
  return net;
}

double ValueNet::value(std::span<const double> state) const {
  return mlp.forward(params.values, state)[0];
}

RewardNet RewardNet::create(int obs_dim, int num_actions,
                            divg::FinalActivation activation, Rng& rng,
                            std::vector<int> hidden) {
  RewardNet net;
  net.obs_dim = obs_dim;
  net.num_actions = num_actions;
  net.activation = activation;
  std::vector<int> dims{obs_dim + num_actions};
  std::vector<Act> acts;
  // tanh on the first two hidden layers, linear afterwards
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    dims.push_back(hidden[i]);
    acts.push_back(i < 2 ? Act::Tanh : Act::Linear);
  }
  dims.push_back(1);
  acts.push_back(Act::Linear);
  net.mlp = Mlp("reward", std::move(dims), std::move(acts));
  net.params = init_vector(net.mlp, rng);
  return net;
}

double RewardNet::raw_output(std::span<const double> encoded) const {
  return mlp.forward(params.values, encoded)[0];
}

double RewardNet::signal_encoded(std::span<const double> encoded,
                                 const divg::DivergenceSpec& spec) const {
  double v = raw_output(encoded);
  double u = divg::apply_final_activation(activation, v);
  if (!std::isfinite(u) || !spec.in_domain(u)) {
    throw NumericError("reward signal " + std::to_string(u) +
                       " left the conjugate domain (activation mismatch)");
  }
  return u;
}

double RewardNet::signal(std::span<const double> state, int action,
                         const divg::DivergenceSpec& spec) const {
  return signal_encoded(encode_state_action(state, action, num_actions), spec);
}

}  // namespace fdl::nets
