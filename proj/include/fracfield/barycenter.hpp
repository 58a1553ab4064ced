#pragma once

#include <optional>

#include "fracfield/domain.hpp"
#include "fracfield/error.hpp"
#include "fracfield/spectral.hpp"

namespace fracfield {

struct BarycenterReport {
  Point point;
  /// int (u^+)^2, the denominator of the barycenter.
  double mass = 0.0;
  /// Set when a band was supplied: whether point lies in Omega_lambda^+.
  std::optional<bool> in_omega_plus;
};

/// beta(u) = int x (u^+)^2 / int (u^+)^2 over the grid nodes.
inline BarycenterReport barycenter(const GridDomain& dom, const Eigen::VectorXd& values,
                                   std::optional<double> band = std::nullopt) {
  double m = 0.0, mx = 0.0, my = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] <= 0.0) continue;
    const double w = values[i] * values[i];
    const Point p = dom.node(static_cast<std::size_t>(i));
    m += w;
    mx += w * p.x;
    my += w * p.y;
  }
  if (!(m > 0.0)) throw Error(ErrorKind::NonpositiveField, "barycenter of a field with u+ == 0");
  BarycenterReport rep;
  rep.point = {mx / m, my / m};
  rep.mass = m * dom.cell_area();
  if (band) rep.in_omega_plus = neighborhood_membership(dom, rep.point, *band, Side::outer_plus);
  return rep;
}

inline BarycenterReport barycenter(const Field& u, std::optional<double> band = std::nullopt) {
  return barycenter(u.domain(), u.values(), band);
}

}  // namespace fracfield
