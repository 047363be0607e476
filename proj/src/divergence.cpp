#include "fdiv/divergence.hpp"

#include <cmath>
#include <limits>

namespace fdl::divg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  double ax = x > 0.0 ? x : 0.0;
  return ax + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace

DivergenceKind kind_from_string(const std::string& name) {
  if (name == "KL") return DivergenceKind::KL;
  if (name == "RKL") return DivergenceKind::RKL;
  if (name == "JS_star") return DivergenceKind::JsStar;
  if (name == "learned") return DivergenceKind::Learned;
  throw ConfigError("unknown divergence '" + name + "'");
}

std::string to_string(DivergenceKind kind) {
  switch (kind) {
    case DivergenceKind::KL: return "KL";
    case DivergenceKind::RKL: return "RKL";
    case DivergenceKind::JsStar: return "JS_star";
    case DivergenceKind::Learned: return "learned";
  }
  return "?";
}

double apply_final_activation(FinalActivation act, double v) {
  switch (act) {
    case FinalActivation::Identity: return v;
    case FinalActivation::Sigmoid: return stable_sigmoid(v);
    case FinalActivation::NegExp: return -std::exp(v);
    case FinalActivation::LogSigmoid: return -stable_softplus(-v);
  }
  return v;
}

diff::Tape::NodeId build_final_activation(diff::Tape& tape, FinalActivation act,
                                          diff::Tape::NodeId v) {
  switch (act) {
    case FinalActivation::Identity: return v;
    case FinalActivation::Sigmoid: return tape.sigmoid(v);
    case FinalActivation::NegExp: return tape.neg(tape.exp_fn(v));
    case FinalActivation::LogSigmoid: return tape.log_sigmoid(v);
  }
  return v;
}

DivergenceSpec closed_form(DivergenceKind kind) {
  DivergenceSpec s;
  s.kind = kind;
  s.name = to_string(kind);
  switch (kind) {
    case DivergenceKind::KL:
      s.generator = [](double v) { return v * std::log(v); };
      s.generator_at_zero = 0.0;
      s.generator_slope_at_inf = kInf;
      s.conjugate = [](double u) { return std::exp(u - 1.0); };
      s.conjugate_deriv = [](double u) { return std::exp(u - 1.0); };
      s.conjugate_domain = {-kInf, kInf};
      s.final_activation = FinalActivation::Identity;
      break;
    case DivergenceKind::RKL:
      s.generator = [](double v) { return -std::log(v); };
      s.generator_at_zero = kInf;
      s.generator_slope_at_inf = 0.0;
      s.conjugate = [](double u) { return -1.0 - std::log(-u); };
      s.conjugate_deriv = [](double u) { return -1.0 / u; };
      s.conjugate_domain = {-kInf, 0.0};
      s.final_activation = FinalActivation::NegExp;
      break;
    case DivergenceKind::JsStar:
      s.generator = [](double v) {
        return v * std::log(v) - (v + 1.0) * std::log(v + 1.0);
      };
      s.generator_at_zero = 0.0;
      s.generator_slope_at_inf = 0.0;
      s.conjugate = [](double u) { return -std::log(-std::expm1(u)); };
      s.conjugate_deriv = [](double u) {
        // e^u / (1 - e^u)
        return std::exp(u) / (-std::expm1(u));
      };
      s.conjugate_domain = {-kInf, 0.0};
      s.final_activation = FinalActivation::LogSigmoid;
      break;
    case DivergenceKind::Learned:
      throw ConfigError("closed_form: 'learned' has no closed-form spec");
  }
  return s;
}

DivergenceSpec closed_form(const std::string& name) {
  return closed_form(kind_from_string(name));
}

diff::Tape::NodeId build_conjugate(diff::Tape& tape, DivergenceKind kind,
                                   diff::Tape::NodeId u) {
  switch (kind) {
    case DivergenceKind::KL:
      return tape.exp_fn(tape.add_const(u, -1.0));
    case DivergenceKind::RKL:
      return tape.add_const(tape.neg(tape.log_fn(tape.neg(u))), -1.0);
    case DivergenceKind::JsStar: {
      // -log(1 - e^u)
      auto one_minus = tape.add_const(tape.neg(tape.exp_fn(u)), 1.0);
      return tape.neg(tape.log_fn(one_minus));
    }
    case DivergenceKind::Learned:
      throw ConfigError("build_conjugate: learned conjugate is a network");
  }
  throw ConfigError("build_conjugate: bad kind");
}

DiscreteDist DiscreteDist::make(std::vector<double> probs) {
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw ConfigError("discrete distribution has negative mass");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("discrete distribution does not sum to 1");
  }
  return DiscreteDist{std::move(probs)};
}

double exact_divergence_discrete(const DiscreteDist& p, const DiscreteDist& q,
                                 const DivergenceSpec& spec) {
  if (p.probs.size() != q.probs.size()) {
    throw ConfigError("exact_divergence_discrete: length mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < p.probs.size(); ++i) {
    double pi = p.probs[i];
    double qi = q.probs[i];
    if (qi > 0.0) {
      if (pi == 0.0) {
        if (std::isinf(spec.generator_at_zero)) return kInf;
        total += qi * spec.generator_at_zero;
      } else {
        total += qi * spec.generator(pi / qi);
      }
    } else if (pi > 0.0) {
      if (std::isinf(spec.generator_slope_at_inf)) return kInf;
      total += pi * spec.generator_slope_at_inf;
    }
    // pi == qi == 0 contributes nothing
  }
  return total;
}

double gaussian_kl_oracle(const GaussianSpec& p, const GaussianSpec& q) {
  if (p.std_dev <= 0.0 || q.std_dev <= 0.0) {
    throw ConfigError("gaussian_kl_oracle: std must be positive");
  }
  double dm = p.mean - q.mean;
  return std::log(q.std_dev / p.std_dev) +
         (p.std_dev * p.std_dev + dm * dm) / (2.0 * q.std_dev * q.std_dev) - 0.5;
}

double variational_estimate(std::span<const double> samples_p,
                            std::span<const double> samples_q,
                            const std::function<double(double)>& T,
                            const DivergenceSpec& spec) {
  if (samples_p.empty() || samples_q.empty()) {
    throw ConfigError("variational_estimate: empty sample set");
  }
  double mean_p = 0.0;
  for (double x : samples_p) mean_p += T(x);
  mean_p /= static_cast<double>(samples_p.size());

  double mean_q = 0.0;
  for (std::size_t i = 0; i < samples_q.size(); ++i) {
    double u = T(samples_q[i]);
    if (!spec.in_domain(u)) {
      throw NumericError("variational_estimate: T output " + std::to_string(u) +
                         " outside conjugate domain at sample " + std::to_string(i));
    }
    mean_q += spec.conjugate(u);
  }
  mean_q /= static_cast<double>(samples_q.size());
  return mean_p - mean_q;
}

double variational_standard_error(std::span<const double> samples_p,
                                  std::span<const double> samples_q,
                                  const std::function<double(double)>& T,
                                  const DivergenceSpec& spec) {
  auto var_of = [](const std::vector<double>& xs) {
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    return v / static_cast<double>(xs.size());
  };
  std::vector<double> tp, fq;
  tp.reserve(samples_p.size());
  fq.reserve(samples_q.size());
  for (double x : samples_p) tp.push_back(T(x));
  for (double x : samples_q) fq.push_back(spec.conjugate(T(x)));
  return std::sqrt(var_of(tp) / static_cast<double>(tp.size()) +
                   var_of(fq) / static_cast<double>(fq.size()));
}

}  // namespace fdl::divg
