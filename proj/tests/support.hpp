#pragma once

#include <optional>
#include <random>

#include "fracfield/error.hpp"
#include "fracfield/spectral.hpp"

namespace fracfield::testing {

/// Kind of the Error thrown by fn, or nullopt when nothing is thrown.
template <class F>
std::optional<ErrorKind> thrown_kind(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

inline SpectralBasis small_disk_basis(double lambda = 1.5, double h = 0.2, double alpha = 0.5) {
  return assemble_and_decompose(build_domain(Shape::disk, ShapeParams::disk(1.0), lambda, h),
                                kFullBasis, alpha);
}

/// Nodal field with a positive bump plus noise of the given amplitude.
inline Eigen::VectorXd noisy_bump(const GridDomain& dom, std::mt19937_64& rng, double noise) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  const Point c{u(rng), u(rng)};
  Eigen::VectorXd v(static_cast<Eigen::Index>(dom.size()));
  for (std::size_t k = 0; k < dom.size(); ++k) {
    const Point d = dom.node(k) - c;
    v[static_cast<Eigen::Index>(k)] = 2.0 * std::exp(-(d.x * d.x + d.y * d.y)) + noise * n(rng);
  }
  return v;
}

}  // namespace fracfield::testing
