#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "fracfield/barycenter.hpp"
#include "fracfield/domain.hpp"
#include "fracfield/error.hpp"
#include "fracfield/model.hpp"
#include "fracfield/morse.hpp"
#include "fracfield/nehari.hpp"
#include "fracfield/parallel.hpp"
#include "fracfield/spectral.hpp"

namespace fracfield {

// ---------------------------------------------------------------------------
// Seed map

/// Radius of a disk domain built by build_domain.
inline double disk_radius(const GridDomain& dom) {
  if (dom.shape() != Shape::disk)
    throw Error(ErrorKind::DomainMismatch, "expected a disk domain for the ball state");
  return dom.lambda() * dom.params().outer_radius;
}

/// Translates a ball ground state (on a disk centred at the origin) to the
/// lattice point nearest x_tilde, extends it by zero and rescales onto the
/// Nehari manifold of `target`. Both grids must share the spacing h.
template <Nonlinearity NL>
Field psi_seed(const SpectralBasis& ball, const Field& ball_state, const SpectralBasis& target,
               const NL& nl, Point x_tilde) {
  require_same_domain(ball, ball_state);
  const auto& bd = ball.domain();
  const auto& td = target.domain();
  if (std::abs(bd.spacing() - td.spacing()) > 1e-12 * td.spacing())
    throw Error(ErrorKind::DomainMismatch, "ball and target grids use different spacings");
  const double radius = disk_radius(bd);
  if (!neighborhood_membership(td, x_tilde, radius, Side::inner_minus))
    throw Error(ErrorKind::BallDoesNotFit,
                "a ball of radius " + std::to_string(radius) + " around (" +
                    std::to_string(x_tilde.x) + ", " + std::to_string(x_tilde.y) +
                    ") does not fit inside the domain");
  const double h = td.spacing();
  const long di = std::lround(x_tilde.x / h), dj = std::lround(x_tilde.y / h);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(td.size()));
  for (std::size_t k = 0; k < bd.size(); ++k) {
    const Point p = bd.node(k);
    const int idx = td.index_at_lattice(std::lround(p.x / h) + di, std::lround(p.y / h) + dj);
    if (idx >= 0) v[idx] = ball_state.values()[static_cast<Eigen::Index>(k)];
  }
  const Field f = Field::from_values(target, v);
  return scaled(target, f, nehari_scale(target, nl, f));
}

// ---------------------------------------------------------------------------
// Symmetry images and deduplication

/// (g u)(g x) = u(x) for a node permutation from symmetry_permutations().
inline Eigen::VectorXd symmetry_image(const Eigen::VectorXd& v, const std::vector<int>& perm) {
  Eigen::VectorXd w(v.size());
  for (std::size_t k = 0; k < perm.size(); ++k) w[perm[k]] = v[static_cast<Eigen::Index>(k)];
  return w;
}

/// min_g |v - g u| / max(|u|, |v|) over the supplied permutations.
inline double symmetric_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                 const std::vector<std::vector<int>>& perms) {
  const double scale = std::max(u.norm(), v.norm());
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : perms) best = std::min(best, (v - symmetry_image(u, p)).norm() / scale);
  return best;
}

struct DedupeConfig {
  double energy_rel = 1e-4;
  double distance_rel = 1e-2;
};

/// Same solution iff relative energy gap and symmetric distance are both
/// below the thresholds.
inline bool same_solution(const SolutionRecord& a, const SolutionRecord& b,
                          const std::vector<std::vector<int>>& perms, const DedupeConfig& cfg) {
  const double scale = std::max(std::abs(a.energy), std::abs(b.energy));
  if (!(std::abs(a.energy - b.energy) < cfg.energy_rel * scale)) return false;
  return symmetric_distance(a.u.values(), b.u.values(), perms) < cfg.distance_rel;
}

/// Number of pairwise distinct symmetry images of u.
inline int orbit_size(const Eigen::VectorXd& u, const std::vector<std::vector<int>>& perms,
                      double distance_rel = 1e-2) {
  std::vector<Eigen::VectorXd> images;
  for (const auto& p : perms) {
    Eigen::VectorXd w = symmetry_image(u, p);
    const bool seen = std::any_of(images.begin(), images.end(), [&](const Eigen::VectorXd& x) {
      return (x - w).norm() < distance_rel * std::max(x.norm(), w.norm());
    });
    if (!seen) images.push_back(std::move(w));
  }
  return static_cast<int>(images.size());
}

/// Partitions records into classes of the transitive closure of
/// same_solution. The result does not depend on input order: classes are
/// listed by their lowest energy, members by index.
inline std::vector<std::vector<std::size_t>> dedupe_classes(
    const std::vector<SolutionRecord>& recs, const std::vector<std::vector<int>>& perms,
    const DedupeConfig& cfg) {
  const std::size_t n = recs.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (same_solution(recs[i], recs[j], perms, cfg)) parent[find(i)] = find(j);
  std::vector<std::vector<std::size_t>> classes;
  std::vector<long> slot(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<long>(classes.size());
      classes.emplace_back();
    }
    classes[slot[r]].push_back(i);
  }
  auto low = [&](const std::vector<std::size_t>& c) {
    double e = std::numeric_limits<double>::infinity();
    for (auto i : c) e = std::min(e, recs[i].energy);
    return e;
  };
  std::sort(classes.begin(), classes.end(), [&](const auto& a, const auto& b) {
    const double ea = low(a), eb = low(b);
    return ea != eb ? ea < eb : a.front() < b.front();
  });
  return classes;
}

// ---------------------------------------------------------------------------
// Mass clusters

/// Fractions of int (u^+)^2 carried by the 4-connected components of
/// {u > level * max u}, sorted decreasingly.
inline std::vector<double> mass_clusters(const GridDomain& dom, const Eigen::VectorXd& v,
                                         double level = 0.05) {
  const double vmax = v.maxCoeff();
  double total = 0.0;
  for (double x : v)
    if (x > 0.0) total += x * x;
  if (!(vmax > 0.0) || !(total > 0.0))
    throw Error(ErrorKind::NonpositiveField, "mass clusters of a field with u+ == 0");
  std::vector<int> label(dom.size(), -1);
  std::vector<double> masses;
  const int nx = dom.nx();
  for (std::size_t s = 0; s < dom.size(); ++s) {
    if (label[s] >= 0 || !(v[static_cast<Eigen::Index>(s)] > level * vmax)) continue;
    const int id = static_cast<int>(masses.size());
    double m = 0.0;
    std::vector<std::size_t> stack{s};
    label[s] = id;
    while (!stack.empty()) {
      const std::size_t k = stack.back();
      stack.pop_back();
      const double x = v[static_cast<Eigen::Index>(k)];
      m += x * x;
      const auto pos = dom.grid_position(k);
      const int col = static_cast<int>(pos % nx), row = static_cast<int>(pos / nx);
      for (auto [dc, dr] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
        const int nb = dom.index_at_grid(col + dc, row + dr);
        if (nb < 0 || label[nb] >= 0 || !(v[nb] > level * vmax)) continue;
        label[nb] = id;
        stack.push_back(static_cast<std::size_t>(nb));
      }
    }
    masses.push_back(m / total);
  }
  std::sort(masses.begin(), masses.end(), std::greater<>());
  return masses;
}

// ---------------------------------------------------------------------------
// Barycenter-constrained level

/// rho |beta(u) - target|^2; invariant under positive scaling of u.
struct BarycenterPenalty {
  static constexpr bool active = true;
  double rho = 0.0;
  Point target;

  double value(const GridDomain& dom, const Eigen::VectorXd& v) const {
    double m = 0.0, mx = 0.0, my = 0.0;
    accumulate(dom, v, m, mx, my);
    if (!(m > 0.0)) return std::numeric_limits<double>::infinity();
    const double dx = mx / m - target.x, dy = my / m - target.y;
    return rho * (dx * dx + dy * dy);
  }

  /// d/du_i = 4 rho u_i^+ <beta - target, x_i - beta> / sum (u^+)^2.
  Eigen::VectorXd nodal_gradient(const GridDomain& dom, const Eigen::VectorXd& v) const {
    double m = 0.0, mx = 0.0, my = 0.0;
    accumulate(dom, v, m, mx, my);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(v.size());
    if (!(m > 0.0)) return g;
    const Point beta{mx / m, my / m};
    const Point off = beta - target;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (!(v[i] > 0.0)) continue;
      const Point d = dom.node(static_cast<std::size_t>(i)) - beta;
      g[i] = 4.0 * rho * v[i] * (off.x * d.x + off.y * d.y) / m;
    }
    return g;
  }

 private:
  static void accumulate(const GridDomain& dom, const Eigen::VectorXd& v, double& m, double& mx,
                         double& my) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (!(v[i] > 0.0)) continue;
      const double w = v[i] * v[i];
      const Point p = dom.node(static_cast<std::size_t>(i));
      m += w;
      mx += w * p.x;
      my += w * p.y;
    }
  }
};

struct AnnulusLevelOptions {
  std::vector<double> penalty_factors{1.0, 10.0, 100.0, 1000.0};
  /// Typical energy used to scale the penalty; <= 0 selects the ray maximum
  /// of the first seed.
  double energy_scale = 0.0;
  SolverOptions solver = [] {
    SolverOptions o;
    o.direction = SolverOptions::Direction::lbfgs;
    return o;
  }();
  int workers = 1;
};

struct AnnulusCandidate {
  std::string seed_tag;
  SolutionRecord record;
  double violation = 0.0;
  bool feasible = false;
};

struct AnnulusLevelReport {
  double level = 0.0;
  Point target;
  double violation = 0.0;
  /// Largest single-cluster share of int (u^+)^2.
  double max_cluster_fraction = 0.0;
  int clusters = 0;
  std::vector<double> penalties;
  SolutionRecord record;
  std::vector<AnnulusCandidate> candidates;
};

/// Seeds whose barycenter is the annulus centre: antipodal bump pairs on
/// the x-axis and on the diagonal, and a ring on the mid-circle.
inline std::vector<std::pair<std::string, Field>> centered_annulus_seeds(const SpectralBasis& basis) {
  const auto& dom = basis.domain();
  if (dom.shape() != Shape::annulus)
    throw Error(ErrorKind::DomainMismatch, "annulus level requires an annulus domain");
  const double mid = 0.5 * dom.lambda() * (dom.params().outer_radius + dom.params().inner_radius);
  const double w = default_seed_width(dom);
  const double d = mid / std::numbers::sqrt2;
  std::vector<std::pair<std::string, Field>> seeds;
  seeds.emplace_back("pair-axis", gaussian_bumps(basis, {{mid, 0.0}, {-mid, 0.0}}, w));
  seeds.emplace_back("pair-diagonal", gaussian_bumps(basis, {{d, d}, {-d, -d}}, w));
  Eigen::VectorXd ring(static_cast<Eigen::Index>(dom.size()));
  for (std::size_t k = 0; k < dom.size(); ++k) {
    const double r = norm(dom.node(k)) - mid;
    ring[static_cast<Eigen::Index>(k)] = std::exp(-r * r / (2.0 * w * w));
  }
  seeds.emplace_back("ring", Field::from_values(basis, ring));
  return seeds;
}

/// a(R, r, lambda): inf I over the annulus Nehari manifold with the
/// barycenter pinned at the centre, by quadratic-penalty continuation
/// min I + rho |beta - 0|^2, rho = factor * E / (lambda r)^2.
template <Nonlinearity NL>
AnnulusLevelReport annulus_level(const SpectralBasis& basis, const NL& nl,
                                 const AnnulusLevelOptions& opt = {}) {
  const auto& dom = basis.domain();
  const auto seeds = centered_annulus_seeds(basis);
  const Point target = dom.center();
  const double inner = dom.lambda() * dom.params().inner_radius;
  double scale = opt.energy_scale;
  if (!(scale > 0.0)) scale = ray_max(basis, nl, seeds.front().second).value;

  AnnulusLevelReport rep;
  rep.target = target;
  for (double f : opt.penalty_factors) rep.penalties.push_back(f * scale / (inner * inner));

  rep.candidates = parallel_map(seeds.size(), opt.workers, [&](std::size_t i) {
    AnnulusCandidate c;
    c.seed_tag = seeds[i].first;
    Field cur = seeds[i].second;
    for (double rho : rep.penalties) {
      c.record = nehari_descent(basis, nl, cur, opt.solver, c.seed_tag,
                                BarycenterPenalty{rho, target});
      cur = c.record.u;
    }
    c.violation = distance(c.record.barycenter, target);
    c.feasible = c.record.converged && c.violation <= 2.0 * dom.spacing();
    return c;
  });

  const AnnulusCandidate* best = nullptr;
  for (const auto& c : rep.candidates)
    if (c.feasible && (!best || c.record.energy < best->record.energy)) best = &c;
  if (!best) {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& c : rep.candidates) worst = std::min(worst, c.violation);
    throw Error(ErrorKind::ConstraintViolated,
                "no converged candidate keeps |beta - x| <= 2h (best violation " +
                    std::to_string(worst) + ")");
  }
  rep.record = best->record;
  rep.level = best->record.energy;
  rep.violation = best->violation;
  const auto clusters = mass_clusters(dom, rep.record.u.values());
  rep.clusters = static_cast<int>(clusters.size());
  rep.max_cluster_fraction = clusters.front();
  return rep;
}

// ---------------------------------------------------------------------------
// Multiplicity search

/// m equally spaced points on the mid-circle of an annulus (first at angle 0),
/// or on the circle of half the radius of a disk.
inline std::vector<Point> default_seed_centers(const GridDomain& dom, int m = 8) {
  double radius = 0.0;
  if (dom.shape() == Shape::annulus)
    radius = 0.5 * dom.lambda() * (dom.params().outer_radius + dom.params().inner_radius);
  else if (dom.shape() == Shape::disk)
    radius = 0.5 * dom.lambda() * dom.params().outer_radius;
  else
    radius = 0.25 * dom.lambda() * std::min(dom.params().width, dom.params().height);
  std::vector<Point> out;
  const Point c = dom.center();
  for (int k = 0; k < m; ++k) {
    const double a = 2.0 * std::numbers::pi * k / m;
    out.push_back(c + Point{radius * std::cos(a), radius * std::sin(a)});
  }
  return out;
}

/// Cached ground state on B_{lambda r} used to build Psi seeds.
struct BallState {
  const SpectralBasis* basis = nullptr;
  SolutionRecord record;
};

struct MultiplicityOptions {
  DedupeConfig dedupe;
  SolverOptions solver;
  /// Band r of Omega_lambda^+ (domain units, not scaled by lambda).
  double band = 0.25;
  int workers = 1;
  /// When set, seeds are Psi(x) from this ball state and its level is the
  /// threshold c(B_{lambda r}) of the localization predicate.
  std::optional<BallState> ball;
  /// Compute Morse data for each class representative.
  bool morse = true;
};

struct MultiplicityEntry {
  SolutionRecord record;
  /// Indices (into the start list) merged into this class.
  std::vector<std::size_t> members;
  bool below_ball_level = false;
  bool beta_in_omega_plus = false;
  double smallest_abs_eigenvalue = 0.0;
};

struct MultiplicityReport {
  std::vector<MultiplicityEntry> classes;
  std::vector<SolutionRecord> starts;
  std::vector<std::string> log;
  std::optional<double> ball_level;
  /// Every class below the ball level has its barycenter in Omega_lambda^+.
  bool localization_holds = true;
};

template <Nonlinearity NL>
MultiplicityReport multiplicity_search(const SpectralBasis& basis, const NL& nl,
                                       const std::vector<Point>& seed_centers,
                                       const MultiplicityOptions& opt = {}) {
  const auto& dom = basis.domain();
  if (seed_centers.empty()) throw Error(ErrorKind::AllStartsFailed, "no seed centers supplied");
  MultiplicityReport rep;
  if (opt.ball) rep.ball_level = opt.ball->record.energy;
  const double width = default_seed_width(dom);

  struct Start {
    std::optional<SolutionRecord> rec;
    std::string note;
  };
  auto results = parallel_map(seed_centers.size(), opt.workers, [&](std::size_t i) {
    Start s;
    const Point c = seed_centers[i];
    const std::string tag = "seed-" + std::to_string(i);
    try {
      Field seed = opt.ball ? psi_seed(*opt.ball->basis, opt.ball->record.u, basis, nl, c)
                            : gaussian_bump(basis, c, width);
      auto rec = ground_state(basis, nl, seed, opt.solver, tag);
      if (rec.converged) s.rec = std::move(rec);
      else
        s.note = tag + ": not converged after " + std::to_string(rec.iterations) +
                 " iterations (residual " + std::to_string(rec.residual) + ")";
    } catch (const Error& e) {
      s.note = tag + ": " + e.what();
    }
    return s;
  });
  for (auto& s : results) {
    if (s.rec) rep.starts.push_back(std::move(*s.rec));
    else rep.log.push_back(s.note);
  }

  const auto perms = dom.symmetry_permutations();
  const auto classes = dedupe_classes(rep.starts, perms, opt.dedupe);
  for (const auto& members : classes) {
    std::size_t lead = members.front();
    for (auto i : members)
      if (rep.starts[i].energy < rep.starts[lead].energy) lead = i;
    MultiplicityEntry e;
    e.record = rep.starts[lead];
    e.members = members;
    e.record.orbit_size = orbit_size(e.record.u.values(), perms, opt.dedupe.distance_rel);
    const auto b = barycenter(e.record.u, opt.band);
    e.beta_in_omega_plus = *b.in_omega_plus;
    e.below_ball_level = rep.ball_level && e.record.energy <= *rep.ball_level;
    if (e.below_ball_level && !e.beta_in_omega_plus) rep.localization_holds = false;
    rep.classes.push_back(std::move(e));
  }
  if (opt.morse) {
    auto spectra = parallel_map(rep.classes.size(), opt.workers, [&](std::size_t i) {
      return hessian_spectrum(basis, nl, rep.classes[i].record.u);
    });
    for (std::size_t i = 0; i < spectra.size(); ++i) {
      rep.classes[i].record.morse_index = spectra[i].morse_index;
      rep.classes[i].record.null_count = spectra[i].null_count;
      rep.classes[i].smallest_abs_eigenvalue = spectra[i].smallest_abs;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Saddle search

/// Newton iteration on grad I = 0 with the dense second variation, damped
/// by halving until the dual gradient norm decreases.
template <Nonlinearity NL>
SolutionRecord newton_polish(const SpectralBasis& basis, const NL& nl, const Field& start,
                             const SolverOptions& opt, std::string tag, int max_steps = 25) {
  Field u = start;
  EnergyReport rep = energy(basis, nl, u);
  int it = 0;
  auto done = [&] { return rep.grad_dual_norm <= opt.tol * (1.0 + std::abs(rep.value)); };
  for (; it < max_steps && !done(); ++it) {
    const Eigen::MatrixXd H = hessian_matrix(basis, nl, u);
    const Eigen::VectorXd step = H.partialPivLu().solve(-rep.gradient);
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 30; ++k, t *= 0.5) {
      Field trial = Field::from_coeffs(basis, u.coeffs() + t * step);
      EnergyReport tr = energy(basis, nl, trial);
      if (tr.grad_dual_norm < rep.grad_dual_norm) {
        u = std::move(trial);
        rep = std::move(tr);
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  SolutionRecord rec;
  rec.seed_tag = std::move(tag);
  rec.iterations = it;
  rec.converged = done();
  rec.energy = rep.value;
  rec.residual = rep.grad_dual_norm;
  rec.quadratic = 2.0 * rep.quadratic_part;
  rec.nehari_residual = std::abs(rep.nehari) / rec.quadratic;
  const double vmax = u.values().maxCoeff();
  rec.positive = u.values().minCoeff() >= -opt.positivity_eps * vmax;
  rec.barycenter = barycenter(u).point;
  rec.u = std::move(u);
  return rec;
}

struct SaddleSearchOptions {
  int images = 16;
  int max_iter = 400;
  /// Preconditioned gradient step for each image.
  double step = 0.25;
  /// Stop when no image moves more than this (relative energy norm).
  double band_tol = 1e-4;
  SolverOptions solver;
  DedupeConfig dedupe;
};

struct SaddleReport {
  bool converged = false;
  SolutionRecord saddle;
  HessianSpectrumReport spectrum;
  /// Saddle energy minus the endpoint energy.
  double barrier = 0.0;
  std::vector<double> path_energies;
  int band_iterations = 0;
  /// Index into the supplied known records when the saddle repeats one.
  std::optional<std::size_t> duplicate_of;
  /// True when a critical point distinct from the known classes was found.
  bool new_critical_point = false;
  std::string note;
};

/// Riesz-weighted norm sqrt(sum (mu^alpha + 1) b^2).
inline double riesz_norm(const SpectralBasis& basis, const Eigen::VectorXd& b) {
  return std::sqrt(b.dot(basis.riesz().cwiseProduct(b)));
}

/// String method on the Nehari manifold between two minimizers: images
/// follow the preconditioned gradient flow, are rescaled onto the manifold
/// and redistributed at equal arc length. The highest image is then polished
/// by Newton's method and compared against the known classes.
template <Nonlinearity NL>
SaddleReport elastic_band_saddle(const SpectralBasis& basis, const NL& nl, const Field& from,
                                 const Field& to, const std::vector<SolutionRecord>& known,
                                 const SaddleSearchOptions& opt = {}) {
  const int m = std::max(opt.images, 3);
  const Eigen::VectorXd& riesz = basis.riesz();
  auto retract = [&](const Eigen::VectorXd& b) {
    const Field f = Field::from_coeffs(basis, b);
    return Eigen::VectorXd(nehari_scale(basis, nl, f) * b);
  };
  std::vector<Eigen::VectorXd> path(m + 1);
  path.front() = retract(from.coeffs());
  path.back() = retract(to.coeffs());
  for (int i = 1; i < m; ++i) {
    const double s = static_cast<double>(i) / m;
    path[i] = retract((1.0 - s) * path.front() + s * path.back());
  }

  auto reparametrize = [&] {
    std::vector<double> arc(m + 1, 0.0);
    for (int i = 1; i <= m; ++i) arc[i] = arc[i - 1] + riesz_norm(basis, path[i] - path[i - 1]);
    std::vector<Eigen::VectorXd> next(path);
    int seg = 0;
    for (int i = 1; i < m; ++i) {
      const double target = arc[m] * i / m;
      while (seg < m - 1 && arc[seg + 1] < target) ++seg;
      const double len = arc[seg + 1] - arc[seg];
      const double s = len > 0.0 ? (target - arc[seg]) / len : 0.0;
      next[i] = retract((1.0 - s) * path[seg] + s * path[seg + 1]);
    }
    path.swap(next);
  };

  SaddleReport rep;
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    double moved = 0.0;
    for (int i = 1; i < m; ++i) {
      const auto e = energy(basis, nl, Field::from_coeffs(basis, path[i]));
      Eigen::VectorXd nb = retract(path[i] - opt.step * e.gradient.cwiseQuotient(riesz));
      moved = std::max(moved, riesz_norm(basis, nb - path[i]) / riesz_norm(basis, path[i]));
      path[i] = std::move(nb);
    }
    reparametrize();
    if (moved < opt.band_tol) {
      rep.converged = true;
      break;
    }
  }
  rep.band_iterations = it;

  int top = 1;
  for (int i = 0; i <= m; ++i) {
    rep.path_energies.push_back(energy_value(basis, nl, Field::from_coeffs(basis, path[i])));
    if (i > 0 && i < m && rep.path_energies[i] > rep.path_energies[top]) top = i;
  }
  rep.saddle = newton_polish(basis, nl, Field::from_coeffs(basis, path[top]), opt.solver,
                             "band-top-" + std::to_string(top));
  rep.barrier = rep.saddle.energy - std::min(rep.path_energies.front(), rep.path_energies.back());
  rep.spectrum = hessian_spectrum(basis, nl, rep.saddle.u);
  rep.saddle.morse_index = rep.spectrum.morse_index;
  rep.saddle.null_count = rep.spectrum.null_count;

  const auto perms = basis.domain().symmetry_permutations();
  rep.saddle.orbit_size = orbit_size(rep.saddle.u.values(), perms, opt.dedupe.distance_rel);
  for (std::size_t k = 0; k < known.size(); ++k)
    if (same_solution(rep.saddle, known[k], perms, opt.dedupe)) {
      rep.duplicate_of = k;
      break;
    }
  rep.new_critical_point = rep.saddle.converged && !rep.duplicate_of && rep.saddle.positive;
  if (!rep.saddle.converged) {
    rep.note = "Newton refinement of the band maximum did not converge (residual " +
               std::to_string(rep.saddle.residual) + ")";
  } else if (rep.duplicate_of) {
    rep.note = "band maximum is a symmetry image of known class " +
               std::to_string(*rep.duplicate_of) +
               ": the two endpoints lie on one discrete rotational orbit, so the "
               "mountain pass between them is another member of the same orbit family "
               "rather than a new critical point (degenerate-orbit obstruction); "
               "smallest |Hessian eigenvalue| = " +
               std::to_string(rep.spectrum.smallest_abs);
  } else {
    rep.note = "new critical point with Morse index " + std::to_string(rep.spectrum.morse_index) +
               " and null_count " + std::to_string(rep.spectrum.null_count);
  }
  return rep;
}

/// Nearest symmetry image of u that is a distinct function, or nullopt when
/// u is invariant under every symmetry.
inline std::optional<Eigen::VectorXd> nearest_distinct_image(
    const Eigen::VectorXd& u, const std::vector<std::vector<int>>& perms, double distance_rel) {
  std::optional<Eigen::VectorXd> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& p : perms) {
    Eigen::VectorXd w = symmetry_image(u, p);
    const double d = (w - u).norm() / u.norm();
    if (d >= distance_rel && d < best_d) {
      best_d = d;
      best = std::move(w);
    }
  }
  return best;
}

}  // namespace fracfield
