#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "fracfield/domain.hpp"
#include "fracfield/error.hpp"
#include "fracfield/linalg.hpp"
#include "fracfield/model.hpp"
#include "fracfield/nehari.hpp"
#include "fracfield/spectral.hpp"

namespace fracfield {

/// Null-eigenvalue threshold 1e-6 (mu_1^alpha + 1).
inline double default_null_threshold(const SpectralBasis& basis) {
  return 1e-6 * basis.riesz()[0];
}

/// Perturbation (Gram) part G_jk = h^2 sum_i h'(u_i) phi_j(x_i) phi_k(x_i).
template <Nonlinearity NL>
Eigen::MatrixXd perturbation_matrix(const SpectralBasis& basis, const NL& nl, const Field& u) {
  require_same_domain(basis, u);
  const Eigen::VectorXd w = map_nodes(u.values(), [&](double s) { return nl.dh(s); });
  const Eigen::MatrixXd& V = basis.vectors();
  Eigen::MatrixXd g = V.transpose() * (w.asDiagonal() * V);
  return 0.5 * (g + g.transpose());
}

/// Second variation in the coefficient basis: diag(mu^alpha + 1) - G.
template <Nonlinearity NL>
Eigen::MatrixXd hessian_matrix(const SpectralBasis& basis, const NL& nl, const Field& u) {
  Eigen::MatrixXd H = -perturbation_matrix(basis, nl, u);
  H.diagonal() += basis.riesz();
  return H;
}

/// Matrix-free product of the second variation with a coefficient vector.
template <Nonlinearity NL>
Eigen::VectorXd hessian_vector(const SpectralBasis& basis, const NL& nl, const Field& u,
                               const Eigen::VectorXd& dir) {
  require_same_domain(basis, u);
  const Eigen::VectorXd v = basis.synthesize_coeffs(dir);
  Eigen::VectorXd wv(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) wv[i] = nl.dh(u.values()[i]) * v[i];
  return basis.riesz().cwiseProduct(dir) - basis.analyze_values(wv);
}

struct HessianSpectrumReport {
  Eigen::VectorXd eigenvalues;  // ascending
  int morse_index = 0;
  int null_count = 0;
  bool nondegenerate = true;
  double eps_null = 0.0;
  /// Eigenvalue of smallest magnitude.
  double smallest_abs = 0.0;
};

inline HessianSpectrumReport classify_spectrum(Eigen::VectorXd eigenvalues, double eps_null) {
  if (!(eps_null > 0.0)) throw Error(ErrorKind::EigSolveFailure, "eps_null must be positive");
  HessianSpectrumReport rep;
  rep.eps_null = eps_null;
  rep.smallest_abs = eigenvalues.cwiseAbs().minCoeff();
  for (double e : eigenvalues) {
    if (e < -eps_null) ++rep.morse_index;
    else if (e <= eps_null) ++rep.null_count;
  }
  rep.nondegenerate = rep.null_count == 0;
  rep.eigenvalues = std::move(eigenvalues);
  return rep;
}

template <Nonlinearity NL>
HessianSpectrumReport hessian_spectrum(const SpectralBasis& basis, const NL& nl, const Field& u,
                                       double eps_null) {
  auto eig = linalg::symmetric_eigen(hessian_matrix(basis, nl, u), false);
  return classify_spectrum(std::move(eig.values), eps_null);
}

template <Nonlinearity NL>
HessianSpectrumReport hessian_spectrum(const SpectralBasis& basis, const NL& nl, const Field& u) {
  return hessian_spectrum(basis, nl, u, default_null_threshold(basis));
}

/// Fills morse_index and null_count of a record.
template <Nonlinearity NL>
HessianSpectrumReport annotate_morse(const SpectralBasis& basis, const NL& nl, SolutionRecord& rec,
                                     double eps_null) {
  auto rep = hessian_spectrum(basis, nl, rec.u, eps_null);
  rec.morse_index = rep.morse_index;
  rec.null_count = rep.null_count;
  return rep;
}

/// d^2/dt^2 I(t u) at t = 1, i.e. Q(u) - h^2 sum h'(u) u^2. Requires
/// |J(u)| <= tol * Q(u).
template <Nonlinearity NL>
double ray_second_derivative(const SpectralBasis& basis, const NL& nl, const Field& u,
                             double tol = 1e-8) {
  const auto rep = energy(basis, nl, u);
  const double Q = 2.0 * rep.quadratic_part;
  if (!(std::abs(rep.nehari) <= tol * Q))
    throw Error(ErrorKind::OffManifold, "|J(u)|/Q(u) = " + std::to_string(std::abs(rep.nehari) / Q) +
                                            " exceeds " + std::to_string(tol));
  double acc = 0.0;
  for (double v : u.values()) acc += nl.dh(v) * v * v;
  return Q - basis.weight() * acc;
}

/// Spectrum of R^{-1/2} G R^{-1/2}, the perturbation part measured in the
/// energy norm, sorted by decreasing value.
template <Nonlinearity NL>
Eigen::VectorXd perturbation_spectrum(const SpectralBasis& basis, const NL& nl, const Field& u) {
  const Eigen::VectorXd s = basis.riesz().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd g = s.asDiagonal() * perturbation_matrix(basis, nl, u) * s.asDiagonal();
  Eigen::VectorXd ev = linalg::symmetric_eigen(std::move(g), false).values;
  return ev.reverse();
}

/// |lambda| at the given quantile of a decreasing spectrum (0.9 leaves 10%
/// of the eigenvalues above), relative to the largest |lambda|.
inline double spectral_tail_ratio(const Eigen::VectorXd& decreasing, double quantile = 0.9) {
  Eigen::VectorXd mag = decreasing.cwiseAbs();
  std::sort(mag.data(), mag.data() + mag.size(), std::greater<>());
  const auto idx = static_cast<Eigen::Index>(
      std::ceil((1.0 - quantile) * static_cast<double>(mag.size())));
  return mag[std::min(idx, mag.size() - 1)] / mag[0];
}

/// Coefficients of the Poincare polynomial (index = power of t).
inline std::vector<int> poincare_polynomial(std::string_view topology) {
  if (topology == "rectangle" || topology == "disk") return {1};
  if (topology == "annulus") return {1, 1};
  throw Error(ErrorKind::UnknownDomainTopology,
              "no stored Poincare polynomial for '" + std::string(topology) + "'");
}

inline std::vector<int> poincare_polynomial(Shape shape) { return poincare_polynomial(to_string(shape)); }

struct MorseCountReport {
  std::string topology;
  std::vector<int> poincare;
  /// 2 P_1 - 1.
  int target_total = 0;
  /// P_1 points of index 1 and P_1 - 1 of index 2.
  int target_index1 = 0;
  int target_index2 = 0;
  /// Coefficients of t P_t + t^2 (P_t - 1), the lower-bound polynomial of
  /// the Morse relation.
  std::vector<int> relation_polynomial;
  /// Nondegenerate critical points by index, counted with orbit size.
  int found_index1 = 0;
  int found_index2 = 0;
  int found_other = 0;
  /// Same counts by symmetry class (one record per class); these are the
  /// counts compared with the targets.
  int classes_index1 = 0;
  int classes_index2 = 0;
  /// Records without a Morse index or with null directions; listed, not counted.
  int degenerate_excluded = 0;
  /// Class split equals the target split.
  bool matches = false;
  /// Class counts are at least the targets.
  bool meets_lower_bound = false;
};

inline MorseCountReport morse_count_check(const std::vector<SolutionRecord>& records,
                                          std::string_view topology) {
  MorseCountReport rep;
  rep.topology = std::string(topology);
  rep.poincare = poincare_polynomial(topology);
  int p1 = 0;
  for (int c : rep.poincare) p1 += c;
  rep.target_total = 2 * p1 - 1;
  rep.target_index1 = p1;
  rep.target_index2 = p1 - 1;

  // t P_t + t^2 (P_t - 1)
  std::vector<int> rel(rep.poincare.size() + 2, 0);
  for (std::size_t k = 0; k < rep.poincare.size(); ++k) {
    rel[k + 1] += rep.poincare[k];
    rel[k + 2] += rep.poincare[k] - (k == 0 ? 1 : 0);
  }
  while (!rel.empty() && rel.back() == 0) rel.pop_back();
  rep.relation_polynomial = rel;

  for (const auto& r : records) {
    if (!r.morse_index || !r.null_count || *r.null_count > 0) {
      ++rep.degenerate_excluded;
      continue;
    }
    if (*r.morse_index == 1) {
      rep.found_index1 += r.orbit_size;
      ++rep.classes_index1;
    } else if (*r.morse_index == 2) {
      rep.found_index2 += r.orbit_size;
      ++rep.classes_index2;
    } else {
      rep.found_other += r.orbit_size;
    }
  }
  rep.matches =
      rep.classes_index1 == rep.target_index1 && rep.classes_index2 == rep.target_index2;
  rep.meets_lower_bound =
      rep.classes_index1 >= rep.target_index1 && rep.classes_index2 >= rep.target_index2;
  return rep;
}

inline MorseCountReport morse_count_check(const std::vector<SolutionRecord>& records, Shape shape) {
  return morse_count_check(records, to_string(shape));
}

}  // namespace fracfield
