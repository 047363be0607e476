#include "fdiv/ficnn.hpp"

#include <cmath>
#include <string>

namespace fdl::conj {

namespace {

// Per-layer flat sizes: Wu (rows), Wz (rows * prev, layer >= 1), b (rows).
std::size_t layer_size(const FicnnParams& p, int layer) {
  std::size_t rows = static_cast<std::size_t>(p.rows(layer));
  std::size_t wz = layer == 0 ? 0 : rows * static_cast<std::size_t>(p.rows(layer - 1));
  return rows + wz + rows;
}

std::size_t layer_offset(const FicnnParams& p, int layer) {
  std::size_t off = 0;
  for (int i = 0; i < layer; ++i) off += layer_size(p, i);
  return off;
}

}  // namespace

std::size_t FicnnParams::wu_offset(int layer) const {
  return layer_offset(*this, layer);
}

std::size_t FicnnParams::wz_offset(int layer) const {
  return layer_offset(*this, layer) + static_cast<std::size_t>(rows(layer));
}

std::size_t FicnnParams::bias_offset(int layer) const {
  std::size_t rows_n = static_cast<std::size_t>(rows(layer));
  std::size_t wz = layer == 0 ? 0 : rows_n * static_cast<std::size_t>(rows(layer - 1));
  return layer_offset(*this, layer) + rows_n + wz;
}

std::size_t FicnnParams::param_count() const {
  return layer_offset(*this, layer_count) + 1;  // + shared bias
}

diff::ParamLayout FicnnParams::make_layout() const {
  std::vector<diff::Segment> segs;
  for (int i = 0; i < layer_count; ++i) {
    std::size_t rows_n = static_cast<std::size_t>(rows(i));
    segs.push_back({"fstar/l" + std::to_string(i) + "/Wu", wu_offset(i), rows_n});
    if (i > 0) {
      segs.push_back({"fstar/l" + std::to_string(i) + "/Wz", wz_offset(i),
                      rows_n * static_cast<std::size_t>(rows(i - 1))});
    }
    segs.push_back({"fstar/l" + std::to_string(i) + "/b", bias_offset(i), rows_n});
  }
  segs.push_back({"fstar/bs", layer_offset(*this, layer_count), 1});
  return diff::ParamLayout::build(std::move(segs));
}

void calibrate_slopes(FicnnParams& p, Rng& rng);

FicnnParams FicnnParams::init(int layers, int nodes, Rng& rng, double scale) {
  if (layers < 1 || nodes < 1) {
    throw ConfigError("ficnn: layer_count and nodes_per_layer must be >= 1");
  }
  FicnnParams p;
  p.layer_count = layers;
  p.nodes_per_layer = nodes;
  p.values.assign(p.param_count(), 0.0);
  for (int i = 0; i < layers; ++i) {
    std::size_t rows_n = static_cast<std::size_t>(p.rows(i));
    int prev = i == 0 ? 0 : p.rows(i - 1);
    // per-block fan-in bounds: shortcut weights see a scalar input, inner
    // weights see the previous layer; spread biases place the relu kinks
    // at distinct input locations
    double wu_bound = scale;
    double wz_bound = prev > 0 ? scale / std::sqrt(static_cast<double>(prev)) : 0.0;
    double b_bound = prev > 0 ? scale / std::sqrt(static_cast<double>(prev)) : scale;
    double* wu = p.values.data() + p.wu_offset(i);
    for (std::size_t r = 0; r < rows_n; ++r) wu[r] = rng.uniform(-wu_bound, wu_bound);
    if (i > 0) {
      std::size_t n = rows_n * static_cast<std::size_t>(prev);
      double* wz = p.values.data() + p.wz_offset(i);
      for (std::size_t r = 0; r < n; ++r) wz[r] = rng.uniform(-wz_bound, wz_bound);
    }
    double* b = p.values.data() + p.bias_offset(i);
    for (std::size_t r = 0; r < rows_n; ++r) b[r] = rng.uniform(-b_bound, b_bound);
  }
  project_nonneg_inplace(p);
  calibrate_slopes(p, rng);
  return p;
}

// Normalizes a fresh draw so its derivative range straddles 1 with margin,
// the way every closed-form conjugate's does. A conjugate whose slope never
// crosses 1 has no finite minimum gap, which parks the shift at the edge of
// any working range and starves the policy of reward gradient. All
// adjustments act on the output unit's preactivation (its relu is kept
// active over the working region), so convexity and the inner kink
// structure survive.
void calibrate_slopes(FicnnParams& p, Rng& rng) {
  const int out = p.layer_count - 1;
  const std::size_t b_out = p.bias_offset(out);
  if (p.layer_count == 1) {
    // single relu unit: slopes are {0, Wu}; normalize the magnitude so a
    // positive draw straddles 1 (a negative draw caps at slope 0, an
    // expressiveness floor of the one-layer architecture)
    double& w = p.values[p.wu_offset(0)];
    if (std::abs(w) < 0.02) w = w < 0.0 ? -0.02 : 0.02;
    double t = 2.0 / std::abs(w);
    w *= t;
    p.values[b_out] *= t;
    return;
  }
  // preactivation of the output unit (bias lifted so its relu is active)
  auto preact = [&p, b_out](double u, double* d) {
    double saved = p.values[b_out];
    p.values[b_out] = saved + 1e6;
    double v = eval_fstar_grad(p, u, d) - p.shared_bias() - 1e6;
    p.values[b_out] = saved;
    return v;
  };
  auto scale_output = [&p, out](double t) {
    double* wu = p.values.data() + p.wu_offset(out);
    for (int r = 0; r < p.rows(out); ++r) wu[r] *= t;
    double* b = p.values.data() + p.bias_offset(out);
    for (int r = 0; r < p.rows(out); ++r) b[r] *= t;
    if (out > 0) {
      std::size_t n = static_cast<std::size_t>(p.rows(out)) *
                      static_cast<std::size_t>(p.rows(out - 1));
      double* wz = p.values.data() + p.wz_offset(out);
      for (std::size_t k = 0; k < n; ++k) wz[k] *= t;
    }
  };

  for (int attempt = 0; attempt < 20; ++attempt) {
    double dl = 0.0, dr = 0.0;
    preact(-4.0, &dl);
    preact(4.0, &dr);
    double spread = dr - dl;  // nonnegative by convexity
    if (spread < 0.02) {
      // degenerate draw (output unit nearly affine); redraw its weights
      double* wu = p.values.data() + p.wu_offset(out);
      for (int r = 0; r < p.rows(out); ++r) wu[r] = rng.uniform(-1.0, 1.0);
      if (out > 0) {
        int prev = p.rows(out - 1);
        double bound = 1.0 / std::sqrt(static_cast<double>(prev));
        double* wz = p.values.data() + p.wz_offset(out);
        std::size_t n = static_cast<std::size_t>(p.rows(out)) *
                        static_cast<std::size_t>(prev);
        for (std::size_t k = 0; k < n; ++k) {
          wz[k] = std::max(0.0, rng.uniform(-bound, bound));
        }
      }
      continue;
    }
    scale_output(std::clamp(2.0 / spread, 0.02, 100.0));
    // recenter the slope interval around 1 through the direct shortcut
    preact(-4.0, &dl);
    preact(4.0, &dr);
    p.values[p.wu_offset(out)] += 1.0 - 0.5 * (dl + dr);
    // keep the output unit active across the working region
    double h0 = preact(0.0, nullptr);
    if (h0 < 12.0) p.values[b_out] += 12.0 - h0;
    break;
  }
}

double eval_fstar(const FicnnParams& p, double u) {
  return eval_fstar_grad(p, u, nullptr);
}

double eval_fstar_grad(const FicnnParams& p, double u, double* dfdu) {
  const double bs = p.shared_bias();
  const double z0 = u + bs;
  std::vector<double> z{z0}, dz{1.0}, next, dnext;
  for (int i = 0; i < p.layer_count; ++i) {
    int rows_n = p.rows(i);
    const double* wu = p.values.data() + p.wu_offset(i);
    const double* b = p.values.data() + p.bias_offset(i);
    const double* wz = i > 0 ? p.values.data() + p.wz_offset(i) : nullptr;
    int prev = static_cast<int>(z.size());
    next.assign(static_cast<std::size_t>(rows_n), 0.0);
    dnext.assign(static_cast<std::size_t>(rows_n), 0.0);
    for (int r = 0; r < rows_n; ++r) {
      double pre = wu[r] * z0 + b[r];
      double dpre = wu[r];
      if (wz != nullptr) {
        const double* row = wz + static_cast<std::size_t>(r) * prev;
        for (int c = 0; c < prev; ++c) {
          pre += row[c] * z[static_cast<std::size_t>(c)];
          dpre += row[c] * dz[static_cast<std::size_t>(c)];
        }
      }
      next[static_cast<std::size_t>(r)] = pre > 0.0 ? pre : 0.0;
      dnext[static_cast<std::size_t>(r)] = pre > 0.0 ? dpre : 0.0;
    }
    z.swap(next);
    dz.swap(dnext);
  }
  double out = z[0] + bs;
  if (!std::isfinite(out)) throw NumericError("ficnn: non-finite output");
  if (dfdu != nullptr) *dfdu = dz[0];
  return out;
}

void eval_fstar_batch(const FicnnParams& p, std::span<const double> us,
                      std::span<double> out) {
  const std::size_t n = us.size();
  const double bs = p.shared_bias();
  // Activations stored sample-major per layer: z[r * n + j].
  std::vector<double> z0(n), z, next;
  for (std::size_t j = 0; j < n; ++j) z0[j] = us[j] + bs;
  z = z0;
  std::size_t prev = 1;
  for (int i = 0; i < p.layer_count; ++i) {
    std::size_t rows_n = static_cast<std::size_t>(p.rows(i));
    const double* wu = p.values.data() + p.wu_offset(i);
    const double* b = p.values.data() + p.bias_offset(i);
    const double* wz = i > 0 ? p.values.data() + p.wz_offset(i) : nullptr;
    next.assign(rows_n * n, 0.0);
    for (std::size_t r = 0; r < rows_n; ++r) {
      double* dst = next.data() + r * n;
      for (std::size_t j = 0; j < n; ++j) dst[j] = wu[r] * z0[j] + b[r];
      if (wz != nullptr) {
        const double* row = wz + r * prev;
        for (std::size_t c = 0; c < prev; ++c) {
          const double w = row[c];
          if (w == 0.0) continue;
          const double* src = z.data() + c * n;
          for (std::size_t j = 0; j < n; ++j) dst[j] += w * src[j];
        }
      }
      for (std::size_t j = 0; j < n; ++j) dst[j] = dst[j] > 0.0 ? dst[j] : 0.0;
    }
    z.swap(next);
    prev = rows_n;
  }
  for (std::size_t j = 0; j < n; ++j) out[j] = z[j] + bs;
}

double kink_margin(const FicnnParams& p, double u) {
  const double bs = p.shared_bias();
  const double z0 = u + bs;
  std::vector<double> z{z0}, next;
  double margin = std::abs(z0) + 1.0;  // input itself is not a kink
  for (int i = 0; i < p.layer_count; ++i) {
    int rows_n = p.rows(i);
    const double* wu = p.values.data() + p.wu_offset(i);
    const double* b = p.values.data() + p.bias_offset(i);
    const double* wz = i > 0 ? p.values.data() + p.wz_offset(i) : nullptr;
    int prev = static_cast<int>(z.size());
    next.assign(static_cast<std::size_t>(rows_n), 0.0);
    for (int r = 0; r < rows_n; ++r) {
      double pre = wu[r] * z0 + b[r];
      if (wz != nullptr) {
        const double* row = wz + static_cast<std::size_t>(r) * prev;
        for (int c = 0; c < prev; ++c) pre += row[c] * z[static_cast<std::size_t>(c)];
      }
      margin = std::min(margin, std::abs(pre));
      next[static_cast<std::size_t>(r)] = pre > 0.0 ? pre : 0.0;
    }
    z.swap(next);
  }
  return margin;
}

void project_nonneg_inplace(FicnnParams& p) {
  for (int i = 1; i < p.layer_count; ++i) {
    std::size_t n = static_cast<std::size_t>(p.rows(i)) *
                    static_cast<std::size_t>(p.rows(i - 1));
    double* wz = p.values.data() + p.wz_offset(i);
    for (std::size_t k = 0; k < n; ++k) {
      if (wz[k] < 0.0) wz[k] = 0.0;
    }
  }
}

FicnnParams project_nonneg(FicnnParams p) {
  project_nonneg_inplace(p);
  return p;
}

FicnnParams apply_shift(FicnnParams p, double delta) {
  if (!std::isfinite(delta)) throw NumericError("apply_shift: non-finite delta");
  p.values.back() -= delta / 2.0;
  return p;
}

diff::Tape::NodeId build_fstar(const FicnnParams& p, diff::Tape& tape,
                               std::span<const diff::Tape::NodeId> phi,
                               diff::Tape::NodeId u_node) {
  using NodeId = diff::Tape::NodeId;
  NodeId bs = phi[p.values.size() - 1];
  NodeId z0 = tape.add(u_node, bs);
  std::vector<NodeId> z{z0}, next;
  for (int i = 0; i < p.layer_count; ++i) {
    int rows_n = p.rows(i);
    std::size_t wu_off = p.wu_offset(i);
    std::size_t wz_off = i > 0 ? p.wz_offset(i) : 0;
    std::size_t b_off = p.bias_offset(i);
    int prev = static_cast<int>(z.size());
    next.clear();
    for (int r = 0; r < rows_n; ++r) {
      std::vector<NodeId> ws{phi[wu_off + static_cast<std::size_t>(r)]};
      std::vector<NodeId> xs{z0};
      if (i > 0) {
        std::size_t row = wz_off + static_cast<std::size_t>(r) * prev;
        for (int c = 0; c < prev; ++c) {
          ws.push_back(phi[row + static_cast<std::size_t>(c)]);
          xs.push_back(z[static_cast<std::size_t>(c)]);
        }
      }
      NodeId pre = tape.affine(ws, xs, phi[b_off + static_cast<std::size_t>(r)]);
      next.push_back(tape.relu(pre));
    }
    z.swap(next);
  }
  return tape.add(z[0], bs);
}

}  // namespace fdl::conj
