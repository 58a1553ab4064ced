#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <string>
#include <vector>

#include "fracfield/domain.hpp"
#include "fracfield/spectral.hpp"

namespace fracfield {

/// h, its primitive H and derivative h' as scalar maps.
template <class T>
concept Nonlinearity = requires(const T& nl, double s) {
  { nl.h(s) } -> std::convertible_to<double>;
  { nl.H(s) } -> std::convertible_to<double>;
  { nl.dh(s) } -> std::convertible_to<double>;
};

/// Nonlinearities that are positively homogeneous, h(ts) = t^p h(s) for
/// t > 0; the Nehari scale then has a closed form.
template <class T>
concept HomogeneousNonlinearity = Nonlinearity<T> && requires(const T& nl) {
  { nl.homogeneity() } -> std::convertible_to<double>;
};

/// Critical Sobolev exponent 2N/(N - 2 alpha) for N = 2.
inline double critical_exponent(double alpha) {
  return 2.0 * kSpatialDim / (kSpatialDim - 2.0 * alpha);
}

/// h(s) = (s^+)^p with the growth exponent q and Ambrosetti-Rabinowitz
/// constant theta carried along for the hypothesis checks.
struct PowerNonlinearity {
  double p = 2.0;
  double theta = 3.0;
  double q = 3.5;
  double alpha = 0.5;

  double h(double s) const { return s > 0.0 ? std::pow(s, p) : 0.0; }
  double H(double s) const { return s > 0.0 ? std::pow(s, p + 1.0) / (p + 1.0) : 0.0; }
  double dh(double s) const { return s > 0.0 ? p * std::pow(s, p - 1.0) : 0.0; }
  double homogeneity() const { return p; }
  double two_star_alpha() const { return critical_exponent(alpha); }
};

struct HypothesisCheck {
  std::string name;
  bool passed = false;
  /// Worst sampled slack; negative when the hypothesis is violated.
  double margin = 0.0;
};

struct HypothesisReport {
  std::vector<HypothesisCheck> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
  }
  const HypothesisCheck& operator[](const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return c;
    throw std::out_of_range("no hypothesis named " + name);
  }
};

/// Log-spaced samples on [lo, hi].
inline std::vector<double> log_samples(double lo = 1e-6, double hi = 1e3, int count = 400) {
  std::vector<double> s(count);
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < count; ++i) s[i] = std::exp(a + (b - a) * i / (count - 1));
  return s;
}

namespace detail {

/// Slope of log f against log s between the two extreme samples at one end.
template <class F>
double log_slope(F&& f, double s0, double s1) {
  return (std::log(f(s1)) - std::log(f(s0))) / (std::log(s1) - std::log(s0));
}

}  // namespace detail

/// Samples (H0)-(H4) and (H1')-(H2') on a log grid. Limits at 0 and infinity
/// are judged by the log-slope over the outermost decade of the samples.
/// Equality in theta H(s) <= s h(s) counts as a pass.
template <Nonlinearity NL>
HypothesisReport check_hypotheses(const NL& nl, double q, double theta, double alpha,
                                  const std::vector<double>& samples) {
  HypothesisReport rep;
  const double tiny = std::numeric_limits<double>::min();
  const double s_lo = samples.front(), s_hi = samples.back();
  const double s_lo2 = s_lo * 10.0, s_hi2 = s_hi / 10.0;

  {
    double worst = 0.0;
    for (double s : samples) worst = std::max({worst, std::abs(nl.h(-s)), std::abs(nl.h(0.0))});
    rep.checks.push_back({"H0", worst == 0.0, worst == 0.0 ? 0.0 : -worst});
  }
  {
    // o(|s|): h(s)/s must vanish at the origin, i.e. positive log-slope.
    const double slope =
        detail::log_slope([&](double s) { return nl.h(s) / s + tiny; }, s_lo, s_lo2);
    rep.checks.push_back({"H1", slope > 0.0, slope});
  }
  {
    const double two_star = critical_exponent(alpha);
    const double window = std::min(q - 2.0, two_star - q);
    const double slope = detail::log_slope(
        [&](double s) { return nl.h(s) / std::pow(s, q - 1.0) + tiny; }, s_hi2, s_hi);
    const double margin = std::min(window, -slope);
    rep.checks.push_back({"H2", margin > 0.0, margin});
  }
  {
    double margin = theta - 2.0;
    for (double s : samples) {
      const double sh = s * nl.h(s), TH = theta * nl.H(s);
      if (!(TH > 0.0)) margin = std::min(margin, -1.0);
      margin = std::min(margin, (sh - TH) / sh);
    }
    // Equality is admissible; allow rounding in the ratio.
    rep.checks.push_back({"H3", margin >= -1e-12, margin});
  }
  {
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < samples.size(); ++i) {
      const double r0 = nl.h(samples[i - 1]) / samples[i - 1];
      const double r1 = nl.h(samples[i]) / samples[i];
      margin = std::min(margin, (r1 - r0) / std::max(std::abs(r0), tiny));
    }
    rep.checks.push_back({"H4", margin > 0.0, margin});
  }
  {
    // h'(s) -> 0 at the origin (the differentiated form of H1).
    const double slope =
        detail::log_slope([&](double s) { return nl.dh(s) + tiny; }, s_lo, s_lo2);
    rep.checks.push_back({"H1'", slope > 0.0, slope});
  }
  {
    const double slope = detail::log_slope(
        [&](double s) { return nl.dh(s) / std::pow(s, q - 2.0) + tiny; }, s_hi2, s_hi);
    const double margin = std::min(std::min(q - 2.0, critical_exponent(alpha) - q), -slope);
    rep.checks.push_back({"H2'", margin > 0.0, margin});
  }
  return rep;
}

inline HypothesisReport check_hypotheses(const PowerNonlinearity& nl,
                                         const std::vector<double>& samples = log_samples()) {
  return check_hypotheses(nl, nl.q, nl.theta, nl.alpha, samples);
}

struct EnergyReport {
  double value = 0.0;
  /// L2 norm of the gradient field, sqrt(sum_k g_k^2).
  double grad_norm = 0.0;
  /// Dual (energy) norm sqrt(sum_k g_k^2 / (mu_k^alpha + 1)).
  double grad_dual_norm = 0.0;
  double quadratic_part = 0.0;
  double potential_part = 0.0;
  /// J(u) = I'(u)[u] = Q(u) - int h(u) u.
  double nehari = 0.0;
  Eigen::VectorXd gradient;
};

/// Applies a scalar map node-wise.
template <class F>
Eigen::VectorXd map_nodes(const Eigen::VectorXd& v, F&& f) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = f(v[i]);
  return out;
}

/// I(u) = Q(u)/2 - h^2 sum H(u) together with its coefficient gradient
/// g_k = (mu_k^alpha + 1) b_k - <h(u), phi_k>.
template <Nonlinearity NL>
EnergyReport energy(const SpectralBasis& basis, const NL& nl, const Field& u) {
  require_same_domain(basis, u);
  const double w = basis.weight();
  const Eigen::VectorXd& b = u.coeffs();
  const Eigen::VectorXd& vals = u.values();
  EnergyReport rep;
  const Eigen::VectorXd rb = basis.riesz().cwiseProduct(b);
  const double Q = b.dot(rb);
  double pot = 0.0, hu_u = 0.0;
  Eigen::VectorXd hv(vals.size());
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    pot += nl.H(vals[i]);
    hv[i] = nl.h(vals[i]);
    hu_u += hv[i] * vals[i];
  }
  rep.quadratic_part = 0.5 * Q;
  rep.potential_part = w * pot;
  rep.value = rep.quadratic_part - rep.potential_part;
  rep.nehari = Q - w * hu_u;
  rep.gradient = rb - basis.analyze_values(hv);
  rep.grad_norm = rep.gradient.norm();
  rep.grad_dual_norm = std::sqrt(rep.gradient.cwiseAbs2().cwiseQuotient(basis.riesz()).sum());
  return rep;
}

/// Value-only evaluation of I(u).
template <Nonlinearity NL>
double energy_value(const SpectralBasis& basis, const NL& nl, const Field& u) {
  require_same_domain(basis, u);
  double pot = 0.0;
  for (double v : u.values()) pot += nl.H(v);
  return 0.5 * alpha_norm_sq(basis, u) - basis.weight() * pot;
}

}  // namespace fracfield
