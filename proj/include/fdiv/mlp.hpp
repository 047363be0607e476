#pragma once

#include <span>
#include <string>
#include <vector>

#include "fdiv/common.hpp"
#include "fdiv/param.hpp"
#include "fdiv/tape.hpp"

namespace fdl::nets {

enum class Act { Linear, Tanh, Relu };

// Dense feedforward net over a flat parameter slice. The same description
// drives plain forward passes (rollouts, line search) and tape builds
// (gradients); a unit test pins the two paths to each other.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::string name, std::vector<int> dims, std::vector<Act> acts);

  const std::string& name() const { return name_; }
  const std::vector<int>& dims() const { return dims_; }
  std::size_t param_count() const { return total_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }

  std::vector<diff::Segment> segments(std::size_t base = 0) const;

  // uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) on weights and biases
  void init_params(std::span<double> out, Rng& rng) const;

  void forward(std::span<const double> params, std::span<const double> input,
               std::span<double> out) const;
  std::vector<double> forward(std::span<const double> params,
                              std::span<const double> input) const;

  // Builds the graph with constant inputs; returns output nodes.
  std::vector<diff::Tape::NodeId> build(diff::Tape& tape,
                                        std::span<const diff::Tape::NodeId> params,
                                        std::span<const double> input) const;

 private:
  std::size_t weight_offset(std::size_t layer) const;
  std::size_t bias_offset(std::size_t layer) const;

  std::string name_;
  std::vector<int> dims_;
  std::vector<Act> acts_;
  std::vector<std::size_t> offsets_;  // per layer: start of [W | b]
  std::size_t total_ = 0;
};

}  // namespace fdl::nets
