#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fdiv/common.hpp"
#include "fdiv/tape.hpp"

namespace fdl::divg {

enum class DivergenceKind { KL, RKL, JsStar, Learned };

DivergenceKind kind_from_string(const std::string& name);
std::string to_string(DivergenceKind kind);

// Last layer of the reward-signal network; maps the raw output v into the
// conjugate's domain.
enum class FinalActivation { Identity, Sigmoid, NegExp, LogSigmoid };

double apply_final_activation(FinalActivation act, double v);
diff::Tape::NodeId build_final_activation(diff::Tape& tape, FinalActivation act,
                                          diff::Tape::NodeId v);

// A named f-divergence: generator f on (0, inf), convex conjugate f*, the
// conjugate's domain and the activation that keeps reward-net outputs
// inside it.
struct DivergenceSpec {
  DivergenceKind kind = DivergenceKind::KL;
  std::string name;
  std::function<double(double)> generator;       // f(v), v > 0
  double generator_at_zero = 0.0;                // lim_{v->0+} f(v)
  double generator_slope_at_inf = 0.0;           // lim_{v->inf} f(v)/v
  std::function<double(double)> conjugate;       // f*(u)
  std::function<double(double)> conjugate_deriv; // f*'(u)
  Interval conjugate_domain{-1e300, 1e300};
  FinalActivation final_activation = FinalActivation::Identity;

  bool in_domain(double u) const {
    return u > conjugate_domain.lo && u < conjugate_domain.hi;
  }
};

// Closed-form specs: KL, RKL, JS_star. The JS_star conjugate is the
// log4-shifted Jensen-Shannon form, so its recovered generator satisfies
// f(1) = -log 4 rather than 0.
DivergenceSpec closed_form(DivergenceKind kind);
DivergenceSpec closed_form(const std::string& name);

// Graph construction of f*(u) for the closed forms (training path).
diff::Tape::NodeId build_conjugate(diff::Tape& tape, DivergenceKind kind,
                                   diff::Tape::NodeId u);

struct DiscreteDist {
  std::vector<double> probs;

  static DiscreteDist make(std::vector<double> probs);  // validates
};

struct GaussianSpec {
  double mean = 0.0;
  double std_dev = 1.0;
};

// sum_x q(x) f(p(x)/q(x)); 0*f(0/0) = 0, and mass where q = 0 < p
// contributes p * lim f(v)/v (returns +inf for KL-type generators).
double exact_divergence_discrete(const DiscreteDist& p, const DiscreteDist& q,
                                 const DivergenceSpec& spec);

// log(sq/sp) + (sp^2 + (mp-mq)^2) / (2 sq^2) - 1/2
double gaussian_kl_oracle(const GaussianSpec& p, const GaussianSpec& q);

// mean_P[T(x)] - mean_Q[f*(T(x))] over 1-d sample sets; the variational
// lower bound objective for a fixed T.
double variational_estimate(std::span<const double> samples_p,
                            std::span<const double> samples_q,
                            const std::function<double(double)>& T,
                            const DivergenceSpec& spec);

// Standard error of the two sample means entering the estimate; used by
// the oracle-bound checks.
double variational_standard_error(std::span<const double> samples_p,
                                  std::span<const double> samples_q,
                                  const std::function<double(double)>& T,
                                  const DivergenceSpec& spec);

}  // namespace fdl::divg
