#pragma once

#include <span>
#include <vector>

#include "fdiv/common.hpp"
#include "fdiv/param.hpp"
#include "fdiv/tape.hpp"

namespace fdl::conj {

// Fully input-convex network over a scalar input u, with shortcut weights
// from the input to every layer and a shared bias applied to both the input
// and the output:
//
//   z_0 = u + b_s
//   z_{i+1} = relu(Wz_i z_i + Wu_i z_0 + b_i)     (Wz_0 = 0, not stored)
//   fstar(u) = z_k + b_s
//
// Convexity in u holds for any parameters with nonnegative Wz, since each
// layer composes a convex nondecreasing activation with a nonnegative
// combination of convex functions plus an affine shortcut.
//
// Shifting b_s by -delta/2 realizes fstar(u - delta/2) - delta/2 exactly,
// which is how the zero-gap constraint is enforced.
struct FicnnParams {
  int layer_count = 4;
  int nodes_per_layer = 100;
  std::vector<double> values;  // flat, layout given by make_layout()

  static FicnnParams init(int layers, int nodes, Rng& rng, double scale = 1.0);

  diff::ParamLayout make_layout() const;
  std::size_t param_count() const;

  int rows(int layer) const {
    return layer + 1 == layer_count ? 1 : nodes_per_layer;
  }

  double shared_bias() const { return values.back(); }

  // Offsets into `values` (layer data is stored Wu, Wz, b per layer).
  std::size_t wu_offset(int layer) const;
  std::size_t wz_offset(int layer) const;  // layer >= 1
  std::size_t bias_offset(int layer) const;
};

// Forward evaluation of fstar(u).
double eval_fstar(const FicnnParams& p, double u);

// Forward plus derivative in u (tangent sweep; relu kink derivative is 0).
double eval_fstar_grad(const FicnnParams& p, double u, double* dfdu);

// Vectorized forward over many inputs (layer-major loops; used by the
// convexity probe and grid scans where per-call overhead dominates).
void eval_fstar_batch(const FicnnParams& p, std::span<const double> us,
                      std::span<double> out);

// Smallest |preactivation| over all relu units, used by gradient-check
// harnesses to keep probe points away from kinks.
double kink_margin(const FicnnParams& p, double u);

// Clamp every inner weight to be at least 0; shortcut weights and biases
// are untouched. Applied after every optimizer update.
FicnnParams project_nonneg(FicnnParams p);
void project_nonneg_inplace(FicnnParams& p);

// b_s' = b_s - delta/2; realizes the gap-removing translation.
FicnnParams apply_shift(FicnnParams p, double delta);

// Graph construction for training (gradients w.r.t. all parameters flow
// through the same tape as the reward network).
diff::Tape::NodeId build_fstar(const FicnnParams& p, diff::Tape& tape,
                               std::span<const diff::Tape::NodeId> phi,
                               diff::Tape::NodeId u_node);

}  // namespace fdl::conj
