#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fracfield/barycenter.hpp"
#include "fracfield/domain.hpp"
#include "fracfield/error.hpp"
#include "fracfield/model.hpp"
#include "fracfield/parallel.hpp"
#include "fracfield/spectral.hpp"

namespace fracfield {

struct SolutionRecord {
  Field u;
  double energy = 0.0;
  /// Energy (dual) norm of the gradient at u.
  double residual = 0.0;
  /// |J(u)| / Q(u).
  double nehari_residual = 0.0;
  double quadratic = 0.0;
  Point barycenter;
  std::optional<int> morse_index;
  std::optional<int> null_count;
  /// Number of distinct images under the domain's grid symmetries.
  int orbit_size = 1;
  bool positive = false;
  bool converged = false;
  std::string seed_tag;
  int iterations = 0;
  /// Objective after every accepted step (only when requested).
  std::vector<double> energy_trace;
};

struct SolverOptions {
  double tol = 1e-8;
  int max_iter = 20000;
  double armijo = 1e-4;
  /// Positivity test: min u >= -positivity_eps * max u.
  double positivity_eps = 1e-8;
  bool keep_trace = false;
  /// Search directions: preconditioned gradient with Barzilai-Borwein step
  /// guesses, or limited-memory BFGS in the Riesz metric (better suited to
  /// ill-conditioned penalized objectives).
  enum class Direction { barzilai_borwein, lbfgs };
  Direction direction = Direction::barzilai_borwein;
  int lbfgs_memory = 10;
};

namespace detail {

inline double positive_part_max(const Eigen::VectorXd& v) {
  return v.size() ? std::max(v.maxCoeff(), 0.0) : 0.0;
}

}  // namespace detail

/// Scale t > 0 with J(t u) = 0 found by bracketing root search on
/// t -> Q(u) - int h(t u) u / t, which is decreasing under (H4).
template <Nonlinearity NL>
double nehari_scale_root(const SpectralBasis& basis, const NL& nl, const Field& u) {
  require_same_domain(basis, u);
  if (!(detail::positive_part_max(u.values()) > 0.0))
    throw Error(ErrorKind::NonpositiveField, "Nehari projection needs u+ != 0");
  const double Q = alpha_norm_sq(basis, u);
  const double w = basis.weight();
  const Eigen::VectorXd& v = u.values();
  auto phi = [&](double t) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (v[i] > 0.0) acc += nl.h(t * v[i]) * v[i];
    return (Q - w * acc / t) / Q;
  };
  double lo = 1.0, hi = 1.0;
  while (phi(lo) <= 0.0) lo *= 0.5;
  while (phi(hi) >= 0.0) hi *= 2.0;
  std::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      phi, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
  return 0.5 * (a + b);
}

/// Unique t > 0 placing t u on the Nehari manifold. Homogeneous
/// nonlinearities use t^(p-1) = Q(u) / int h(u) u.
template <Nonlinearity NL>
double nehari_scale(const SpectralBasis& basis, const NL& nl, const Field& u) {
  if constexpr (HomogeneousNonlinearity<NL>) {
    require_same_domain(basis, u);
    const Eigen::VectorXd& v = u.values();
    double P = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (v[i] > 0.0) P += nl.h(v[i]) * v[i];
    P *= basis.weight();
    if (!(P > 0.0)) throw Error(ErrorKind::NonpositiveField, "Nehari projection needs u+ != 0");
    const double Q = alpha_norm_sq(basis, u);
    return std::pow(Q / P, 1.0 / (nl.homogeneity() - 1.0));
  } else {
    return nehari_scale_root(basis, nl, u);
  }
}

inline Field scaled(const SpectralBasis& basis, const Field& u, double t) {
  require_same_domain(basis, u);
  return u.scaled_by(t);
}

struct RayMax {
  double t_star = 0.0;
  double value = 0.0;
};

/// sup_{t>0} I(t u), attained at the Nehari scale.
template <Nonlinearity NL>
RayMax ray_max(const SpectralBasis& basis, const NL& nl, const Field& u) {
  const double t = nehari_scale(basis, nl, u);
  return {t, energy_value(basis, nl, scaled(basis, u, t))};
}

/// Smooth positive bump exp(-|x - c|^2 / (2 w^2)) restricted to the mask.
inline Field gaussian_bump(const SpectralBasis& basis, Point center, double width) {
  const auto& dom = basis.domain();
  Eigen::VectorXd v(static_cast<Eigen::Index>(dom.size()));
  for (std::size_t k = 0; k < dom.size(); ++k) {
    const Point d = dom.node(k) - center;
    v[static_cast<Eigen::Index>(k)] = std::exp(-(d.x * d.x + d.y * d.y) / (2.0 * width * width));
  }
  return Field::from_values(basis, v);
}

/// Sum of bumps of a common width.
inline Field gaussian_bumps(const SpectralBasis& basis, const std::vector<Point>& centers,
                            double width) {
  const auto& dom = basis.domain();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dom.size()));
  for (std::size_t k = 0; k < dom.size(); ++k)
    for (const Point& c : centers) {
      const Point d = dom.node(k) - c;
      v[static_cast<Eigen::Index>(k)] += std::exp(-(d.x * d.x + d.y * d.y) / (2.0 * width * width));
    }
  return Field::from_values(basis, v);
}

/// Objective add-on with no contribution; the default for plain ground states.
struct NoPenalty {
  static constexpr bool active = false;
  double value(const GridDomain&, const Eigen::VectorXd&) const { return 0.0; }
  Eigen::VectorXd nodal_gradient(const GridDomain&, const Eigen::VectorXd& v) const {
    return Eigen::VectorXd::Zero(v.size());
  }
};

namespace detail {

struct DescentState {
  Field u;
  EnergyReport rep;
  double objective = 0.0;
  Eigen::VectorXd grad;
  const Eigen::VectorXd& b() const { return u.coeffs(); }
};

template <Nonlinearity NL, class Penalty>
DescentState evaluate(const SpectralBasis& basis, const NL& nl, const Penalty& pen, Field u) {
  DescentState st;
  st.u = std::move(u);
  st.rep = energy(basis, nl, st.u);
  st.objective = st.rep.value;
  st.grad = st.rep.gradient;
  if constexpr (Penalty::active) {
    const auto& dom = basis.domain();
    st.objective += pen.value(dom, st.u.values());
    // d/db_k of a nodal function: sum_i g_i phi_k(x_i) = analyze(g) / h^2.
    st.grad += basis.analyze_values(pen.nodal_gradient(dom, st.u.values())) / basis.weight();
  }
  return st;
}

/// Two-loop recursion for H g with H0 = gamma R^{-1}.
inline Eigen::VectorXd lbfgs_apply(const std::vector<Eigen::VectorXd>& S,
                                   const std::vector<Eigen::VectorXd>& Y,
                                   const Eigen::VectorXd& riesz, const Eigen::VectorXd& g) {
  const std::size_t m = S.size();
  std::vector<double> a(m), rho(m);
  Eigen::VectorXd q = g;
  for (std::size_t i = m; i-- > 0;) {
    rho[i] = 1.0 / Y[i].dot(S[i]);
    a[i] = rho[i] * S[i].dot(q);
    q -= a[i] * Y[i];
  }
  Eigen::VectorXd r = q.cwiseQuotient(riesz);
  if (m) {
    const Eigen::VectorXd ry = Y[m - 1].cwiseQuotient(riesz);
    r *= S[m - 1].dot(Y[m - 1]) / Y[m - 1].dot(ry);
  }
  for (std::size_t i = 0; i < m; ++i) {
    const double b = rho[i] * Y[i].dot(r);
    r += (a[i] - b) * S[i];
  }
  return r;
}

}  // namespace detail

/// Projected gradient descent on the Nehari manifold: a Riesz-preconditioned
/// step on the coefficients followed by the closed-form Nehari rescaling,
/// with Armijo backtracking. Stops when the dual gradient norm drops below
/// tol * (1 + |objective|). The penalty must be invariant under positive
/// scaling.
template <Nonlinearity NL, class Penalty = NoPenalty>
SolutionRecord nehari_descent(const SpectralBasis& basis, const NL& nl, const Field& seed,
                              const SolverOptions& opt, std::string seed_tag,
                              const Penalty& pen = {}) {
  require_same_domain(basis, seed);
  const Eigen::VectorXd& riesz = basis.riesz();
  auto retract = [&](const Eigen::VectorXd& b) -> std::optional<Field> {
    Field f = Field::from_coeffs(basis, b);
    if (!(detail::positive_part_max(f.values()) > 0.0)) return std::nullopt;
    const double t = nehari_scale(basis, nl, f);
    if (!std::isfinite(t) || !(t > 0.0)) return std::nullopt;
    return f.scaled_by(t);
  };
  auto dual = [&](const Eigen::VectorXd& g) { return std::sqrt(g.dot(g.cwiseQuotient(riesz))); };

  auto start = retract(seed.coeffs());
  if (!start) throw Error(ErrorKind::NonpositiveField, "seed has no positive part");
  auto st = detail::evaluate(basis, nl, pen, std::move(*start));

  SolutionRecord rec;
  rec.seed_tag = std::move(seed_tag);
  if (opt.keep_trace) rec.energy_trace.push_back(st.objective);

  const bool lbfgs = opt.direction == SolverOptions::Direction::lbfgs;
  std::vector<Eigen::VectorXd> S, Y;
  double tau = 1.0;
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    if (dual(st.grad) <= opt.tol * (1.0 + std::abs(st.objective))) {
      rec.converged = true;
      break;
    }
    Eigen::VectorXd dir = lbfgs ? detail::lbfgs_apply(S, Y, riesz, st.grad)
                                : Eigen::VectorXd(st.grad.cwiseQuotient(riesz));
    double gd = st.grad.dot(dir);
    if (lbfgs) {
      if (!(gd > 0.0)) {
        S.clear();
        Y.clear();
        dir = st.grad.cwiseQuotient(riesz);
        gd = st.grad.dot(dir);
      }
      tau = 1.0;
    }
    bool accepted = false;
    detail::DescentState trial;
    for (int bt = 0; bt < 60; ++bt) {
      auto nb = retract(st.b() - tau * dir);
      if (nb) {
        trial = detail::evaluate(basis, nl, pen, std::move(*nb));
        const double slack = 1e-14 * std::abs(st.objective);
        if (trial.objective <= st.objective - opt.armijo * tau * gd + slack) {
          accepted = true;
          break;
        }
      }
      tau *= 0.5;
    }
    if (!accepted) {
      if (lbfgs && !S.empty()) {
        // Retry from a plain gradient step before giving up.
        S.clear();
        Y.clear();
        continue;
      }
      break;
    }
    Eigen::VectorXd s = trial.b() - st.b();
    Eigen::VectorXd y = trial.grad - st.grad;
    const double sy = s.dot(y);
    if (lbfgs) {
      if (sy > 1e-12 * std::sqrt(s.dot(s) * y.dot(y))) {
        S.push_back(std::move(s));
        Y.push_back(std::move(y));
        if (static_cast<int>(S.size()) > opt.lbfgs_memory) {
          S.erase(S.begin());
          Y.erase(Y.begin());
        }
      }
    } else {
      const double sms = s.dot(riesz.cwiseProduct(s));
      tau = (sy > 0.0) ? std::clamp(sms / sy, 1e-6, 1e6) : 1.0;
    }
    st = std::move(trial);
    if (opt.keep_trace) rec.energy_trace.push_back(st.objective);
  }
  if (!rec.converged) rec.converged = dual(st.grad) <= opt.tol * (1.0 + std::abs(st.objective));

  rec.iterations = it;
  rec.energy = st.rep.value;
  rec.residual = dual(st.grad);
  rec.quadratic = 2.0 * st.rep.quadratic_part;
  rec.nehari_residual = std::abs(st.rep.nehari) / rec.quadratic;
  const double vmax = st.u.values().maxCoeff();
  rec.positive = st.u.values().minCoeff() >= -opt.positivity_eps * vmax;
  rec.barycenter = barycenter(st.u).point;
  rec.u = std::move(st.u);
  return rec;
}

/// Ground state by Nehari descent from a positive seed.
template <Nonlinearity NL>
SolutionRecord ground_state(const SpectralBasis& basis, const NL& nl, const Field& seed,
                            const SolverOptions& opt = {}, std::string seed_tag = "seed") {
  return nehari_descent(basis, nl, seed, opt, std::move(seed_tag));
}

/// Radially averaged profile of nodal values about `center`: at each node,
/// the value at its radius of a least-squares quadratic in the radius fitted
/// to all nodes whose radius lies within `window` (default h). Degrades to a
/// line or a mean when the window holds too few distinct radii.
inline Eigen::VectorXd radial_average(const GridDomain& dom, const Eigen::VectorXd& v, Point center,
                                      double window = 0.0) {
  if (!(window > 0.0)) window = dom.spacing();
  const std::size_t n = dom.size();
  std::vector<double> r(n);
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) {
    r[k] = distance(dom.node(k), center);
    order[k] = k;
  }
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return r[a] < r[b]; });
  Eigen::VectorXd out(v.size());
  std::size_t lo = 0, hi = 0;
  for (std::size_t pos = 0; pos < n; ++pos) {
    const std::size_t k = order[pos];
    while (r[order[lo]] < r[k] - window) ++lo;
    while (hi < n && r[order[hi]] <= r[k] + window) ++hi;
    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
    Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
    int distinct = 0;
    double last = -1.0;
    for (std::size_t q = lo; q < hi; ++q) {
      const std::size_t j = order[q];
      const double d = (r[j] - r[k]) / window;
      if (r[j] > last + 1e-9 * window) ++distinct;
      last = r[j];
      const Eigen::Vector3d basis(1.0, d, d * d);
      A += basis * basis.transpose();
      rhs += v[static_cast<Eigen::Index>(j)] * basis;
    }
    const int deg = std::min(distinct, 3);
    const Eigen::VectorXd c =
        A.topLeftCorner(deg, deg).ldlt().solve(rhs.head(deg));
    out[static_cast<Eigen::Index>(k)] = c[0];
  }
  return out;
}

/// |u - radial_average(u)| / |u| in the discrete L2 norm.
inline double radial_asymmetry(const GridDomain& dom, const Eigen::VectorXd& v, Point center) {
  return (v - radial_average(dom, v, center)).norm() / v.norm();
}

/// Default bump width for seeds on a domain: a quarter of the largest
/// boundary distance, capped at 1.5 (the intrinsic length of the equation is 1).
inline double default_seed_width(const GridDomain& dom) {
  const double depth = *std::max_element(dom.boundary_distance().begin(),
                                         dom.boundary_distance().end());
  return std::clamp(0.25 * depth, 2.0 * dom.spacing(), 1.5);
}

/// A point deep inside the domain: the node of maximal boundary distance,
/// ties broken towards the symmetry centre and then towards +x.
inline Point deepest_point(const GridDomain& dom) {
  const auto& bd = dom.boundary_distance();
  const double best = *std::max_element(bd.begin(), bd.end());
  const Point c = dom.center();
  std::optional<Point> pick;
  for (std::size_t k = 0; k < dom.size(); ++k) {
    if (bd[k] < best - 1e-9 * dom.spacing()) continue;
    const Point p = dom.node(k);
    if (!pick) {
      pick = p;
      continue;
    }
    const double dp = distance(p, c), dq = distance(*pick, c);
    if (dp < dq - 1e-12 || (std::abs(dp - dq) <= 1e-12 && (p.x > pick->x + 1e-12 ||
                                                          (std::abs(p.x - pick->x) <= 1e-12 &&
                                                           p.y < pick->y))))
      pick = p;
  }
  return *pick;
}

struct LevelReport {
  double level = 0.0;
  /// max - min of converged energies across starts.
  double spread = 0.0;
  int converged_starts = 0;
  int total_starts = 0;
  SolutionRecord best;
};

/// Structured + randomized seeds for multistart minimization. Start 0 is a
/// bump at deepest_point(); the others are bumps at random nodes whose
/// boundary distance is at least half the maximal one.
inline std::vector<std::pair<Point, std::string>> multistart_centers(const GridDomain& dom,
                                                                     int n_starts,
                                                                     std::uint64_t rng_seed) {
  std::vector<std::pair<Point, std::string>> out;
  out.emplace_back(deepest_point(dom), "center");
  const auto& bd = dom.boundary_distance();
  const double best = *std::max_element(bd.begin(), bd.end());
  std::vector<std::size_t> deep;
  for (std::size_t k = 0; k < dom.size(); ++k)
    if (bd[k] >= 0.5 * best) deep.push_back(k);
  std::mt19937_64 rng(rng_seed);
  std::uniform_int_distribution<std::size_t> pick(0, deep.size() - 1);
  for (int s = 1; s < n_starts; ++s) {
    const Point p = dom.node(deep[pick(rng)]);
    out.emplace_back(p, "random-" + std::to_string(s));
  }
  return out;
}

/// c(Omega_lambda) = inf over the Nehari manifold, estimated as the lowest
/// converged energy over n_starts seeds.
template <Nonlinearity NL>
LevelReport level_c(const SpectralBasis& basis, const NL& nl, int n_starts,
                    std::uint64_t rng_seed = 1, const SolverOptions& opt = {}, int workers = 1) {
  if (n_starts < 1) n_starts = 1;
  const auto& dom = basis.domain();
  const auto centers = multistart_centers(dom, n_starts, rng_seed);
  const double width = default_seed_width(dom);
  auto records = parallel_map(centers.size(), workers, [&](std::size_t i) {
    return ground_state(basis, nl, gaussian_bump(basis, centers[i].first, width), opt,
                        centers[i].second);
  });
  LevelReport rep;
  rep.total_starts = static_cast<int>(records.size());
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (auto& r : records) {
    if (!r.converged) continue;
    ++rep.converged_starts;
    hi = std::max(hi, r.energy);
    if (r.energy < lo) {
      lo = r.energy;
      rep.best = r;
    }
  }
  if (rep.converged_starts == 0)
    throw Error(ErrorKind::AllStartsFailed, "no multistart converged");
  rep.level = lo;
  rep.spread = hi - lo;
  return rep;
}

struct LimitEstimate {
  double estimate = 0.0;
  /// Last gap c(B_{n-1}) - c(B_n), used as the error bar.
  double error = 0.0;
  /// Ratio of the last two gaps.
  double ratio = 0.0;
  std::vector<double> radii;
  std::vector<double> levels;
};

/// Geometric extrapolation of a strictly decreasing level sequence using
/// the last three entries: c_inf = c_n - d_n r / (1 - r), r = d_n / d_{n-1}.
inline LimitEstimate extrapolate_levels(const std::vector<double>& radii,
                                        const std::vector<double>& levels) {
  if (levels.size() < 3 || radii.size() != levels.size())
    throw Error(ErrorKind::NonmonotoneLevels, "need at least three levels");
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (!(radii[i] > radii[i - 1]) || !(levels[i] < levels[i - 1]))
      throw Error(ErrorKind::NonmonotoneLevels,
                  "levels must decrease strictly with increasing radius (index " +
                      std::to_string(i) + ")");
  const std::size_t n = levels.size();
  const double d1 = levels[n - 3] - levels[n - 2];
  const double d2 = levels[n - 2] - levels[n - 1];
  LimitEstimate est;
  est.radii = radii;
  est.levels = levels;
  est.ratio = d2 / d1;
  est.error = d2;
  // A non-contracting sequence gives no usable geometric tail; fall back to
  // one more step of the last gap.
  est.estimate = est.ratio < 1.0 ? levels[n - 1] - d2 * est.ratio / (1.0 - est.ratio)
                                 : levels[n - 1] - d2;
  return est;
}

struct DiscretizationSpec {
  double h = 0.25;
  /// Number of retained modes; 0 = default cap, kFullBasis = all.
  std::size_t modes = kFullBasis;
  /// Solve ball problems in the symmetry-invariant subspace (modes ignored).
  bool invariant_subspace = false;
};

/// Ground state on the ball B_radius (centred bump seed).
inline SolutionRecord ball_ground_state(const SpectralBasis& ball, const PowerNonlinearity& nl,
                                        const SolverOptions& opt = {}) {
  const double width = default_seed_width(ball.domain());
  return ground_state(ball, nl, gaussian_bump(ball, {0.0, 0.0}, width), opt, "ball-center");
}

inline SpectralBasis ball_basis(double radius, double alpha, const DiscretizationSpec& disc) {
  const auto dom = build_domain(Shape::disk, ShapeParams::disk(radius), 1.0, disc.h);
  return disc.invariant_subspace ? assemble_invariant_basis(dom, alpha)
                                 : assemble_and_decompose(dom, disc.modes, alpha);
}

/// Approximates c(R^N) from ground-state levels on expanding balls at fixed h.
inline LimitEstimate limit_level_estimate(const PowerNonlinearity& nl,
                                          const std::vector<double>& radii,
                                          const DiscretizationSpec& disc,
                                          const SolverOptions& opt = {}, int workers = 1) {
  if (radii.size() < 3) throw Error(ErrorKind::NonmonotoneLevels, "need at least three radii");
  auto levels = parallel_map(radii.size(), workers, [&](std::size_t i) {
    const auto basis = ball_basis(radii[i], nl.alpha, disc);
    const auto rec = ball_ground_state(basis, nl, opt);
    if (!rec.converged)
      throw Error(ErrorKind::NonmonotoneLevels,
                  "ball ground state did not converge at radius " + std::to_string(radii[i]));
    return rec.energy;
  });
  return extrapolate_levels(radii, levels);
}

}  // namespace fracfield
