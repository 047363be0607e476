#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace fdl::diff {

// Record of one forward computation: node values plus local-derivative
// edges, all evaluated at build time. A single build supports any number
// of reverse (adjoint) and forward (tangent) sweeps, which is what the
// trust-region solver needs for repeated Fisher-vector products.
//
// Nodes are created in topological order by construction; edges of node i
// are stored contiguously before node i+1 is created.
class Tape {
 public:
  using NodeId = std::int32_t;

  Tape() = default;

  void clear() {
    values_.clear();
    starts_.clear();
    parents_.clear();
    partials_.clear();
    pending_start_ = 0;
  }

  std::size_t size() const { return values_.size(); }
  std::size_t edge_count() const { return parents_.size(); }
  double value(NodeId id) const { return values_[static_cast<std::size_t>(id)]; }

  // Leaves carry no edges; their adjoints/tangents are the sweep endpoints.
  NodeId leaf(double v) { return push(v); }
  NodeId constant(double v) { return push(v); }

  NodeId add(NodeId a, NodeId b) {
    edge(a, 1.0);
    edge(b, 1.0);
    return push(values_[a] + values_[b]);
  }
  NodeId sub(NodeId a, NodeId b) {
    edge(a, 1.0);
    edge(b, -1.0);
    return push(values_[a] - values_[b]);
  }
  NodeId mul(NodeId a, NodeId b) {
    edge(a, values_[b]);
    edge(b, values_[a]);
    return push(values_[a] * values_[b]);
  }
  NodeId div(NodeId a, NodeId b) {
    double inv = 1.0 / values_[b];
    edge(a, inv);
    edge(b, -values_[a] * inv * inv);
    return push(values_[a] * inv);
  }
  NodeId neg(NodeId a) {
    edge(a, -1.0);
    return push(-values_[a]);
  }
  NodeId add_const(NodeId a, double c) {
    edge(a, 1.0);
    return push(values_[a] + c);
  }
  NodeId mul_const(NodeId a, double c) {
    edge(a, c);
    return push(values_[a] * c);
  }
  NodeId square(NodeId a) {
    edge(a, 2.0 * values_[a]);
    return push(values_[a] * values_[a]);
  }
  // Subgradient at the kink is 0 by convention.
  NodeId relu(NodeId a) {
    double v = values_[a];
    edge(a, v > 0.0 ? 1.0 : 0.0);
    return push(v > 0.0 ? v : 0.0);
  }
  NodeId tanh_fn(NodeId a) {
    double t = std::tanh(values_[a]);
    edge(a, 1.0 - t * t);
    return push(t);
  }
  NodeId exp_fn(NodeId a) {
    double e = std::exp(values_[a]);
    edge(a, e);
    return push(e);
  }
  NodeId log_fn(NodeId a) {
    edge(a, 1.0 / values_[a]);
    return push(std::log(values_[a]));
  }
  NodeId sigmoid(NodeId a) {
    double s = stable_sigmoid(values_[a]);
    edge(a, s * (1.0 - s));
    return push(s);
  }
  // log(1 + e^x), evaluated in the overflow-safe form.
  NodeId softplus(NodeId a) {
    double x = values_[a];
    edge(a, stable_sigmoid(x));
    return push(stable_softplus(x));
  }
  // log(sigmoid(x)) = -softplus(-x)
  NodeId log_sigmoid(NodeId a) {
    double x = values_[a];
    edge(a, 1.0 - stable_sigmoid(x));
    return push(-stable_softplus(-x));
  }

  // dot(weights, xs) + bias where both factors are differentiable nodes.
  NodeId affine(std::span<const NodeId> weights, std::span<const NodeId> xs, NodeId bias) {
    double acc = values_[bias];
    for (std::size_t i = 0; i < weights.size(); ++i) {
      double w = values_[weights[i]];
      double x = values_[xs[i]];
      edge(weights[i], x);
      edge(xs[i], w);
      acc += w * x;
    }
    edge(bias, 1.0);
    return push(acc);
  }

  // dot(weights, xs) + bias with constant inputs (e.g. observations);
  // halves the edge count on first layers.
  NodeId affine_input(std::span<const NodeId> weights, std::span<const double> xs, NodeId bias) {
    double acc = values_[bias];
    for (std::size_t i = 0; i < weights.size(); ++i) {
      edge(weights[i], xs[i]);
      acc += values_[weights[i]] * xs[i];
    }
    edge(bias, 1.0);
    return push(acc);
  }

  NodeId sum(std::span<const NodeId> xs) {
    double acc = 0.0;
    for (NodeId x : xs) {
      edge(x, 1.0);
      acc += values_[x];
    }
    return push(acc);
  }

  NodeId mean(std::span<const NodeId> xs) {
    double w = 1.0 / static_cast<double>(xs.size());
    double acc = 0.0;
    for (NodeId x : xs) {
      edge(x, w);
      acc += values_[x];
    }
    return push(acc * w);
  }

  // Max-shifted log-sum-exp; partials are the softmax probabilities.
  NodeId log_sum_exp(std::span<const NodeId> xs) {
    double m = values_[xs[0]];
    for (NodeId x : xs) m = std::max(m, values_[x]);
    double z = 0.0;
    for (NodeId x : xs) z += std::exp(values_[x] - m);
    for (NodeId x : xs) edge(x, std::exp(values_[x] - m) / z);
    return push(m + std::log(z));
  }

  // Adjoint sweep. `adj` is resized to size() and zeroed.
  void backward(NodeId root, std::vector<double>& adj) const {
    std::pair<NodeId, double> seed{root, 1.0};
    backward({&seed, 1}, adj);
  }

  void backward(std::span<const std::pair<NodeId, double>> seeds, std::vector<double>& adj) const {
    adj.assign(values_.size(), 0.0);
    for (const auto& [id, w] : seeds) adj[static_cast<std::size_t>(id)] += w;
    for (std::size_t i = values_.size(); i-- > 0;) {
      double a = adj[i];
      if (a == 0.0) continue;
      std::size_t b = starts_[i];
      std::size_t e = edge_end(i);
      for (std::size_t k = b; k < e; ++k) {
        adj[static_cast<std::size_t>(parents_[k])] += a * partials_[k];
      }
    }
  }

  // Tangent sweep: caller sets tan[leaf] seeds (others are overwritten).
  // `tan` must have size() entries.
  void tangent(std::vector<double>& tan) const {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      std::size_t b = starts_[i];
      std::size_t e = edge_end(i);
      if (b == e) continue;  // leaf or constant: keep the seed
      double t = 0.0;
      for (std::size_t k = b; k < e; ++k) {
        t += partials_[k] * tan[static_cast<std::size_t>(parents_[k])];
      }
      tan[i] = t;
    }
  }

 private:
  void edge(NodeId parent, double partial) {
    parents_.push_back(parent);
    partials_.push_back(partial);
  }

  NodeId push(double v) {
    // Edges for this node were pushed since the previous node's end.
    starts_.push_back(pending_start_);
    pending_start_ = parents_.size();
    values_.push_back(v);
    return static_cast<NodeId>(values_.size() - 1);
  }

  std::size_t edge_end(std::size_t i) const {
    return i + 1 < starts_.size() ? starts_[i + 1] : parents_.size();
  }

  static double stable_sigmoid(double x) {
    if (x >= 0.0) {
      double e = std::exp(-x);
      return 1.0 / (1.0 + e);
    }
    double e = std::exp(x);
    return e / (1.0 + e);
  }

  static double stable_softplus(double x) {
    double ax = x > 0.0 ? x : 0.0;
    return ax + std::log1p(std::exp(-std::abs(x)));
  }

  std::vector<double> values_;
  std::vector<std::size_t> starts_;
  std::size_t pending_start_ = 0;
  std::vector<NodeId> parents_;
  std::vector<double> partials_;
};

}  // namespace fdl::diff
