#pragma once

#include <lapacke.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "fracfield/error.hpp"

namespace fracfield::linalg {

struct SymmetricEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns, empty when only values were requested
};

namespace detail {

inline bool eigvecs_ok(const Eigen::MatrixXd& a, const Eigen::VectorXd& w, const Eigen::MatrixXd& z) {
  const auto n = static_cast<double>(a.rows());
  const double orth = (z.transpose() * z - Eigen::MatrixXd::Identity(z.cols(), z.cols())).norm();
  const double res = (a * z - z * w.asDiagonal()).norm() / std::max(1.0, a.norm());
  return orth < 1e-10 * n && res < 1e-10 * n;
}

}  // namespace detail

/// Some OpenBLAS builds pick a broken kernel set for the host CPU and return
/// non-orthogonal eigenvectors without reporting an error. The first call
/// decomposes a fixed 256x256 matrix through both LAPACK drivers used here;
/// on failure every later call goes through Eigen instead (slower, correct).
/// Setting OPENBLAS_CORETYPE (e.g. Haswell) usually restores the fast path.
inline bool lapack_is_sound() {
  static const bool sound = [] {
    const int n = 256;
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = std::sin(i + 2.0 * j) + std::sin(j + 2.0 * i);
    Eigen::MatrixXd b = a;
    Eigen::VectorXd w(n);
    bool ok = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, b.data(), n, w.data()) == 0 &&
              detail::eigvecs_ok(a, w, b);
    if (ok) {
      b = a;
      lapack_int found = 0;
      Eigen::MatrixXd z(n, 32);
      std::vector<lapack_int> support(64);
      ok = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, b.data(), n, 0.0, 0.0, 1, 32, 0.0,
                          &found, w.data(), z.data(), n, support.data()) == 0 &&
           found == 32 && detail::eigvecs_ok(a, w.head(32), z);
    }
    if (!ok)
      std::fprintf(stderr,
                   "fracfield: LAPACK eigensolver failed its self-check; using Eigen "
                   "(try OPENBLAS_CORETYPE=Haswell)\n");
    return ok;
  }();
  return sound;
}

/// Full eigendecomposition of a dense symmetric matrix. The matrix is consumed.
inline SymmetricEigen symmetric_eigen(Eigen::MatrixXd a, bool want_vectors = true) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  SymmetricEigen out;
  if (!lapack_is_sound()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        a, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
      throw Error(ErrorKind::EigSolveFailure, "SelfAdjointEigenSolver did not converge");
    out.values = es.eigenvalues();
    if (want_vectors) out.vectors = es.eigenvectors();
    return out;
  }
  out.values.resize(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'L', n,
                                         a.data(), n, out.values.data());
  if (info != 0)
    throw Error(ErrorKind::EigSolveFailure, "dsyevd returned info=" + std::to_string(info));
  if (want_vectors) out.vectors = std::move(a);
  return out;
}

/// Lowest `count` eigenpairs of a dense symmetric matrix.
inline SymmetricEigen symmetric_eigen_lowest(Eigen::MatrixXd a, Eigen::Index count) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  if (count >= n || !lapack_is_sound()) {
    auto full = symmetric_eigen(std::move(a), true);
    if (count >= n) return full;
    return {full.values.head(count), full.vectors.leftCols(count)};
  }
  lapack_int found = 0;
  Eigen::VectorXd w(n);
  Eigen::MatrixXd z(n, count);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(count));
  const lapack_int info =
      LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, a.data(), n, 0.0, 0.0, 1,
                     static_cast<lapack_int>(count), 0.0, &found, w.data(), z.data(), n,
                     support.data());
  if (info != 0 || found != count)
    throw Error(ErrorKind::EigSolveFailure, "dsyevr returned info=" + std::to_string(info) +
                                                " found=" + std::to_string(found));
  return {w.head(count), std::move(z)};
}

}  // namespace fracfield::linalg
