#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <ostream>
#include <vector>

#include "fracfield/domain.hpp"
#include "fracfield/error.hpp"
#include "fracfield/linalg.hpp"

namespace fracfield {

/// Request every eigenpair of the masked Laplacian.
inline constexpr std::size_t kFullBasis = std::numeric_limits<std::size_t>::max();
inline constexpr std::size_t kDefaultModeCap = 400;

/// Eigenpairs of the 5-point Dirichlet Laplacian on a GridDomain. Columns of
/// `vectors` are orthonormal in the Euclidean sense; the L2_h-normalized
/// modes are vectors / h.
struct Eigenpairs {
  std::shared_ptr<const GridDomain> domain;
  Eigen::VectorXd mu;
  Eigen::MatrixXd vectors;
};

/// Dense masked Laplacian (positive definite, scaled by 1/h^2).
inline Eigen::MatrixXd assemble_laplacian(const GridDomain& dom) {
  const auto n = static_cast<Eigen::Index>(dom.size());
  const double inv_h2 = 1.0 / dom.cell_area();
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  const int nx = dom.nx();
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto pos = dom.grid_position(static_cast<std::size_t>(k));
    const int col = static_cast<int>(pos % nx), row = static_cast<int>(pos / nx);
    lap(k, k) = 4.0 * inv_h2;
    const int nbrs[4] = {dom.index_at_grid(col - 1, row), dom.index_at_grid(col + 1, row),
                         dom.index_at_grid(col, row - 1), dom.index_at_grid(col, row + 1)};
    for (int m : nbrs)
      if (m >= 0) lap(k, m) = -inv_h2;
  }
  return lap;
}

/// Applies the stencil directly (no eigendecomposition); used as an oracle
/// and by the CLI for residual reporting.
inline Eigen::VectorXd apply_laplacian_stencil(const GridDomain& dom, const Eigen::VectorXd& u) {
  const double inv_h2 = 1.0 / dom.cell_area();
  Eigen::VectorXd out(u.size());
  const int nx = dom.nx();
  for (std::size_t k = 0; k < dom.size(); ++k) {
    const auto pos = dom.grid_position(k);
    const int col = static_cast<int>(pos % nx), row = static_cast<int>(pos / nx);
    double acc = 4.0 * u[k];
    const int nbrs[4] = {dom.index_at_grid(col - 1, row), dom.index_at_grid(col + 1, row),
                         dom.index_at_grid(col, row - 1), dom.index_at_grid(col, row + 1)};
    for (int m : nbrs)
      if (m >= 0) acc -= u[m];
    out[static_cast<Eigen::Index>(k)] = acc * inv_h2;
  }
  return out;
}

namespace detail {

inline void fix_signs(Eigen::MatrixXd& v) {
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    Eigen::Index arg = 0;
    v.col(c).cwiseAbs().maxCoeff(&arg);
    if (v(arg, c) < 0.0) v.col(c) *= -1.0;
  }
}

}  // namespace detail

/// Truncated spectral basis with the fractional order baked in. Copies are
/// cheap and share the eigenpairs.
class SpectralBasis {
 public:
  SpectralBasis(std::shared_ptr<const Eigenpairs> pairs, double alpha)
      : pairs_(std::move(pairs)), alpha_(alpha) {
    mu_alpha_ = pairs_->mu.array().pow(alpha_);
    riesz_ = mu_alpha_.array() + 1.0;
  }

  const GridDomain& domain() const { return *pairs_->domain; }
  const std::shared_ptr<const Eigenpairs>& pairs() const { return pairs_; }
  double alpha() const { return alpha_; }
  Eigen::Index modes() const { return pairs_->mu.size(); }
  Eigen::Index nodes() const { return pairs_->vectors.rows(); }
  double weight() const { return domain().cell_area(); }

  const Eigen::VectorXd& mu() const { return pairs_->mu; }
  const Eigen::VectorXd& mu_alpha() const { return mu_alpha_; }
  /// Diagonal of the quadratic form Q: mu_k^alpha + 1.
  const Eigen::VectorXd& riesz() const { return riesz_; }
  const Eigen::MatrixXd& vectors() const { return pairs_->vectors; }

  /// Grid values of phi_k, unit norm in L2_h.
  Eigen::VectorXd mode(Eigen::Index k) const { return vectors().col(k) / domain().spacing(); }

  /// b_k = <u, phi_k>_{L2,h}.
  Eigen::VectorXd analyze_values(const Eigen::VectorXd& values) const {
    return domain().spacing() * (vectors().transpose() * values);
  }
  Eigen::VectorXd synthesize_coeffs(const Eigen::VectorXd& coeffs) const {
    return (vectors() * coeffs) / domain().spacing();
  }

  SpectralBasis with_alpha(double alpha) const { return SpectralBasis(pairs_, alpha); }

 private:
  std::shared_ptr<const Eigenpairs> pairs_;
  double alpha_;
  Eigen::VectorXd mu_alpha_;
  Eigen::VectorXd riesz_;
};

/// Computes the lowest K eigenpairs. K = 0 selects min(400, nodes), kFullBasis
/// keeps every mode. When K would split a cluster of (numerically) repeated
/// eigenvalues it is widened to the end of the cluster so that the retained
/// space stays invariant under the grid symmetries.
inline SpectralBasis assemble_and_decompose(const GridDomain& dom, std::size_t K, double alpha) {
  const std::size_t n = dom.size();
  if (K == 0) K = std::min(kDefaultModeCap, n);
  if (K != kFullBasis && K > n)
    throw Error(ErrorKind::EigSolveFailure,
                "requested " + std::to_string(K) + " modes but domain has " + std::to_string(n) +
                    " interior nodes");
  if (K == kFullBasis) K = n;

  auto pairs = std::make_shared<Eigenpairs>();
  pairs->domain = std::make_shared<const GridDomain>(dom);
  Eigen::MatrixXd lap = assemble_laplacian(dom);
  if (K == n) {
    auto eig = linalg::symmetric_eigen(std::move(lap), true);
    pairs->mu = std::move(eig.values);
    pairs->vectors = std::move(eig.vectors);
  } else {
    const auto probe = static_cast<Eigen::Index>(std::min(n, K + 24));
    auto eig = linalg::symmetric_eigen_lowest(std::move(lap), probe);
    auto keep = static_cast<Eigen::Index>(K);
    while (keep < probe && std::abs(eig.values[keep] - eig.values[keep - 1]) <=
                               1e-8 * std::abs(eig.values[keep - 1]))
      ++keep;
    pairs->mu = eig.values.head(keep);
    pairs->vectors = eig.vectors.leftCols(keep);
  }
  if (!(pairs->mu[0] > 0.0))
    throw Error(ErrorKind::EigSolveFailure, "non-positive lowest Dirichlet eigenvalue");
  detail::fix_signs(pairs->vectors);
  return SpectralBasis(std::move(pairs), alpha);
}

/// Basis of the subspace of grid functions invariant under every symmetry
/// of the mask (symmetry_permutations()). The Laplacian commutes with those
/// permutations, so its restriction to orbit-constant functions is solved on
/// the (about 8x smaller) orbit space and the eigenvectors lifted back; the
/// resulting modes are exact eigenvectors of the full stencil matrix. Fields
/// built on this basis are the symmetric ones, which is enough for ground
/// states of symmetric domains when the seed is symmetric.
inline SpectralBasis assemble_invariant_basis(const GridDomain& dom, double alpha) {
  const auto perms = dom.symmetry_permutations();
  const std::size_t n = dom.size();
  std::vector<int> orbit(n, -1);
  std::vector<int> orbit_size;
  for (std::size_t k = 0; k < n; ++k) {
    if (orbit[k] >= 0) continue;
    const int id = static_cast<int>(orbit_size.size());
    int count = 0;
    for (const auto& p : perms)
      if (orbit[p[k]] < 0) {
        orbit[p[k]] = id;
        ++count;
      }
    orbit_size.push_back(count);
  }
  const auto m = static_cast<Eigen::Index>(orbit_size.size());
  const double inv_h2 = 1.0 / dom.cell_area();
  Eigen::MatrixXd red = Eigen::MatrixXd::Zero(m, m);
  const int nx = dom.nx();
  for (std::size_t k = 0; k < n; ++k) {
    const int a = orbit[k];
    const double sa = std::sqrt(static_cast<double>(orbit_size[a]));
    red(a, a) += 4.0 * inv_h2 / (sa * sa);
    const auto pos = dom.grid_position(k);
    const int col = static_cast<int>(pos % nx), row = static_cast<int>(pos / nx);
    const int nbrs[4] = {dom.index_at_grid(col - 1, row), dom.index_at_grid(col + 1, row),
                         dom.index_at_grid(col, row - 1), dom.index_at_grid(col, row + 1)};
    for (int j : nbrs)
      if (j >= 0) {
        const int b = orbit[j];
        red(a, b) -= inv_h2 / (sa * std::sqrt(static_cast<double>(orbit_size[b])));
      }
  }
  auto eig = linalg::symmetric_eigen(std::move(red), true);
  auto pairs = std::make_shared<Eigenpairs>();
  pairs->domain = std::make_shared<const GridDomain>(dom);
  pairs->mu = std::move(eig.values);
  pairs->vectors.resize(static_cast<Eigen::Index>(n), m);
  for (std::size_t k = 0; k < n; ++k)
    pairs->vectors.row(static_cast<Eigen::Index>(k)) =
        eig.vectors.row(orbit[k]) / std::sqrt(static_cast<double>(orbit_size[orbit[k]]));
  if (!(pairs->mu[0] > 0.0))
    throw Error(ErrorKind::EigSolveFailure, "non-positive lowest Dirichlet eigenvalue");
  detail::fix_signs(pairs->vectors);
  return SpectralBasis(std::move(pairs), alpha);
}

/// A candidate function held both as grid values (the trace u(x,0)) and as
/// spectral coefficients b_k.
class Field {
 public:
  Field() = default;

  static Field from_coeffs(const SpectralBasis& basis, Eigen::VectorXd coeffs) {
    if (coeffs.size() > basis.modes())
      throw Error(ErrorKind::DomainMismatch, "more coefficients than retained modes");
    if (coeffs.size() < basis.modes()) {
      Eigen::VectorXd padded = Eigen::VectorXd::Zero(basis.modes());
      padded.head(coeffs.size()) = coeffs;
      coeffs = std::move(padded);
    }
    Field f;
    f.pairs_ = basis.pairs();
    f.values_ = basis.synthesize_coeffs(coeffs);
    f.coeffs_ = std::move(coeffs);
    return f;
  }

  /// Projects grid values onto the retained modes; the relative L2_h size of
  /// the discarded part is kept as truncation_error().
  static Field from_values(const SpectralBasis& basis, const Eigen::VectorXd& values) {
    if (values.size() != basis.nodes())
      throw Error(ErrorKind::DomainMismatch, "value vector does not match node count");
    Field f = from_coeffs(basis, basis.analyze_values(values));
    const double denom = values.norm();
    f.truncation_error_ = denom > 0.0 ? (values - f.values_).norm() / denom : 0.0;
    return f;
  }

  /// t * this without re-synthesis.
  Field scaled_by(double t) const {
    Field f = *this;
    f.values_ *= t;
    f.coeffs_ *= t;
    f.truncation_error_ = 0.0;
    return f;
  }

  static Field zero(const SpectralBasis& basis) {
    return from_coeffs(basis, Eigen::VectorXd::Zero(basis.modes()));
  }

  const Eigen::VectorXd& values() const { return values_; }
  const Eigen::VectorXd& coeffs() const { return coeffs_; }
  double truncation_error() const { return truncation_error_; }
  const GridDomain& domain() const { return *pairs_->domain; }
  bool empty() const { return pairs_ == nullptr; }
  bool lives_on(const SpectralBasis& basis) const { return pairs_ == basis.pairs(); }

 private:
  std::shared_ptr<const Eigenpairs> pairs_;
  Eigen::VectorXd values_;
  Eigen::VectorXd coeffs_;
  double truncation_error_ = 0.0;
};

inline void require_same_domain(const SpectralBasis& basis, const Field& u) {
  if (u.empty() || !u.lives_on(basis))
    throw Error(ErrorKind::DomainMismatch, "field does not live on this spectral basis");
}

inline Field analyze(const SpectralBasis& basis, const Eigen::VectorXd& values) {
  return Field::from_values(basis, values);
}

inline Field synthesize(const SpectralBasis& basis, const Eigen::VectorXd& coeffs) {
  return Field::from_coeffs(basis, coeffs);
}

/// (-Delta)^alpha u = sum_k mu_k^alpha b_k phi_k.
inline Field fractional_apply(const SpectralBasis& basis, const Field& u) {
  require_same_domain(basis, u);
  return Field::from_coeffs(basis, basis.mu_alpha().cwiseProduct(u.coeffs()));
}

/// Q(u) = sum_k (mu_k^alpha + 1) b_k^2, the squared alpha-norm of the
/// harmonic extension of u.
inline double alpha_norm_sq(const SpectralBasis& basis, const Field& u) {
  require_same_domain(basis, u);
  return u.coeffs().dot(basis.riesz().cwiseProduct(u.coeffs()));
}

/// Discrete L2 inner product with midpoint weight h^2.
inline double inner_product(const GridDomain& dom, const Eigen::VectorXd& u,
                            const Eigen::VectorXd& w) {
  return dom.cell_area() * u.dot(w);
}

/// Writes mu_k, one per line, preceded by the standard header.
inline void write_eigenvalues_csv(std::ostream& os, const SpectralBasis& basis) {
  const auto& dom = basis.domain();
  os << "nx,ny,h,K,alpha\n"
     << dom.nx() << ',' << dom.ny() << ',' << dom.spacing() << ',' << basis.modes() << ','
     << basis.alpha() << "\nk,mu\n";
  os.precision(17);
  for (Eigen::Index k = 0; k < basis.modes(); ++k) os << k << ',' << basis.mu()[k] << '\n';
}

/// Row-major grid dump of nodal values (zero outside the mask).
inline void write_field_dump(std::ostream& os, const SpectralBasis& basis,
                             const Eigen::VectorXd& values) {
  const auto& dom = basis.domain();
  os.precision(17);
  os << "nx,ny,h,K,alpha\n"
     << dom.nx() << ',' << dom.ny() << ',' << dom.spacing() << ',' << basis.modes() << ','
     << basis.alpha() << '\n';
  for (int row = 0; row < dom.ny(); ++row) {
    for (int col = 0; col < dom.nx(); ++col) {
      const int k = dom.index_at_grid(col, row);
      if (col) os << ',';
      os << (k >= 0 ? values[k] : 0.0);
    }
    os << '\n';
  }
}

}  // namespace fracfield
