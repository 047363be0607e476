#include "fdiv/mlp.hpp"

#include <cmath>

namespace fdl::nets {

Mlp::Mlp(std::string name, std::vector<int> dims, std::vector<Act> acts)
    : name_(std::move(name)), dims_(std::move(dims)), acts_(std::move(acts)) {
  if (dims_.size() < 2 || acts_.size() != dims_.size() - 1) {
    throw ConfigError("mlp: need activations for every layer");
  }
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    offsets_.push_back(off);
    off += static_cast<std::size_t>(dims_[l]) * static_cast<std::size_t>(dims_[l + 1]) +
           static_cast<std::size_t>(dims_[l + 1]);
  }
  total_ = off;
}

std::size_t Mlp::weight_offset(std::size_t layer) const { return offsets_[layer]; }

std::size_t Mlp::bias_offset(std::size_t layer) const {
  return offsets_[layer] +
         static_cast<std::size_t>(dims_[layer]) * static_cast<std::size_t>(dims_[layer + 1]);
}

std::vector<diff::Segment> Mlp::segments(std::size_t base) const {
  std::vector<diff::Segment> segs;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    std::size_t nw = static_cast<std::size_t>(dims_[l]) * static_cast<std::size_t>(dims_[l + 1]);
    segs.push_back({name_ + "/l" + std::to_string(l) + "/W", base + weight_offset(l), nw});
    segs.push_back({name_ + "/l" + std::to_string(l) + "/b", base + bias_offset(l),
                    static_cast<std::size_t>(dims_[l + 1])});
  }
  return segs;
}

void Mlp::init_params(std::span<double> out, Rng& rng) const {
  if (out.size() != total_) throw ConfigError("mlp init: size mismatch");
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    double bound = 1.0 / std::sqrt(static_cast<double>(dims_[l]));
    std::size_t n = static_cast<std::size_t>(dims_[l]) * static_cast<std::size_t>(dims_[l + 1]) +
                    static_cast<std::size_t>(dims_[l + 1]);
    double* dst = out.data() + weight_offset(l);
    for (std::size_t i = 0; i < n; ++i) dst[i] = rng.uniform(-bound, bound);
  }
}

void Mlp::forward(std::span<const double> params, std::span<const double> input,
                  std::span<double> out) const {
  if (static_cast<int>(input.size()) != dims_.front()) {
    throw ConfigError("mlp forward: input dim mismatch for '" + name_ + "'");
  }
  std::vector<double> cur(input.begin(), input.end());
  std::vector<double> next;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    int in_n = dims_[l];
    int out_n = dims_[l + 1];
    const double* w = params.data() + weight_offset(l);
    const double* b = params.data() + bias_offset(l);
    next.assign(static_cast<std::size_t>(out_n), 0.0);
    for (int r = 0; r < out_n; ++r) {
      const double* row = w + static_cast<std::size_t>(r) * in_n;
      double acc = b[r];
      for (int c = 0; c < in_n; ++c) acc += row[c] * cur[static_cast<std::size_t>(c)];
      switch (acts_[l]) {
        case Act::Linear: break;
        case Act::Tanh: acc = std::tanh(acc); break;
        case Act::Relu: acc = acc > 0.0 ? acc : 0.0; break;
      }
      next[static_cast<std::size_t>(r)] = acc;
    }
    cur.swap(next);
  }
  for (std::size_t i = 0; i < cur.size(); ++i) out[i] = cur[i];
}

std::vector<double> Mlp::forward(std::span<const double> params,
                                 std::span<const double> input) const {
  std::vector<double> out(static_cast<std::size_t>(dims_.back()));
  forward(params, input, out);
  return out;
}

std::vector<diff::Tape::NodeId> Mlp::build(diff::Tape& tape,
                                           std::span<const diff::Tape::NodeId> params,
                                           std::span<const double> input) const {
  using NodeId = diff::Tape::NodeId;
  if (static_cast<int>(input.size()) != dims_.front()) {
    throw ConfigError("mlp build: input dim mismatch for '" + name_ + "'");
  }
  std::vector<NodeId> cur, next;
  std::vector<NodeId> ws;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    int in_n = dims_[l];
    int out_n = dims_[l + 1];
    std::size_t w_off = weight_offset(l);
    std::size_t b_off = bias_offset(l);
    next.clear();
    for (int r = 0; r < out_n; ++r) {
      ws.clear();
      for (int c = 0; c < in_n; ++c) {
        ws.push_back(params[w_off + static_cast<std::size_t>(r) * in_n +
                            static_cast<std::size_t>(c)]);
      }
      NodeId bias = params[b_off + static_cast<std::size_t>(r)];
      NodeId pre = l == 0 ? tape.affine_input(ws, input, bias)
                          : tape.affine(ws, cur, bias);
      switch (acts_[l]) {
        case Act::Linear: break;
        case Act::Tanh: pre = tape.tanh_fn(pre); break;
        case Act::Relu: pre = tape.relu(pre); break;
      }
      next.push_back(pre);
    }
    cur.swap(next);
  }
  return cur;
}

}  // namespace fdl::nets
