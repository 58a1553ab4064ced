#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "fracfield/error.hpp"

namespace fracfield {

/// Spatial dimension of every domain handled by the library.
inline constexpr int kSpatialDim = 2;

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point a, Point b) = default;
};

inline double norm(Point p) { return std::sqrt(p.x * p.x + p.y * p.y); }
inline double distance(Point a, Point b) { return norm(a - b); }

enum class Shape { rectangle, disk, annulus };

constexpr std::string_view to_string(Shape s) noexcept {
  switch (s) {
    case Shape::rectangle: return "rectangle";
    case Shape::disk: return "disk";
    case Shape::annulus: return "annulus";
  }
  return "unknown";
}

inline Shape shape_from_string(std::string_view name) {
  if (name == "rectangle") return Shape::rectangle;
  if (name == "disk") return Shape::disk;
  if (name == "annulus") return Shape::annulus;
  throw Error(ErrorKind::BadShapeParams, "unknown shape '" + std::string(name) + "'");
}

/// Unscaled shape lengths. Rectangles use (width, height) with the lower-left
/// corner at the origin; disks and annuli are centred at the origin.
struct ShapeParams {
  double width = 1.0;
  double height = 1.0;
  double outer_radius = 1.0;
  double inner_radius = 0.0;

  static ShapeParams rectangle(double w, double h) { return {w, h, 0.0, 0.0}; }
  static ShapeParams disk(double radius) { return {0.0, 0.0, radius, 0.0}; }
  static ShapeParams annulus(double outer, double inner) { return {0.0, 0.0, outer, inner}; }
};

enum class Side { outer_plus, inner_minus };

/// The dihedral group D4 acting on coordinates relative to a centre.
/// Index 0 is the identity; 1..3 are rotations by 90/180/270 degrees;
/// 4..7 are the reflections.
inline Point apply_d4(int g, Point p) {
  switch (g) {
    case 0: return p;
    case 1: return {-p.y, p.x};
    case 2: return {-p.x, -p.y};
    case 3: return {p.y, -p.x};
    case 4: return {p.x, -p.y};
    case 5: return {-p.x, p.y};
    case 6: return {p.y, p.x};
    case 7: return {-p.y, -p.x};
    default: return p;
  }
}

/// Masked uniform lattice realizing lambda * Omega. Nodes sit at integer
/// multiples of h, so domains built with the same h share one lattice and
/// fields can be moved between them by index shifts.
class GridDomain {
 public:
  Shape shape() const { return shape_; }
  const ShapeParams& params() const { return params_; }
  double lambda() const { return lambda_; }
  double spacing() const { return h_; }
  double cell_area() const { return h_ * h_; }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  /// Lattice index of grid column 0 / row 0.
  int i0() const { return i0_; }
  int j0() const { return j0_; }

  std::size_t size() const { return nodes_.size(); }
  const std::vector<Point>& nodes() const { return nodes_; }
  Point node(std::size_t k) const { return nodes_[k]; }
  const std::vector<double>& boundary_distance() const { return boundary_distance_; }
  /// Row-major grid position (col + nx*row) of interior node k.
  std::size_t grid_position(std::size_t k) const { return grid_pos_[k]; }
  /// Interior node index at a grid position, or -1 outside the mask.
  int index_at_grid(int col, int row) const {
    if (col < 0 || row < 0 || col >= nx_ || row >= ny_) return -1;
    return grid_index_[static_cast<std::size_t>(row) * nx_ + col];
  }
  /// Interior node index at lattice coordinates (i, j) meaning (i*h, j*h).
  int index_at_lattice(long i, long j) const {
    return index_at_grid(static_cast<int>(i - i0_), static_cast<int>(j - j0_));
  }
  const std::vector<std::uint8_t>& mask() const { return mask_; }

  double area() const { return static_cast<double>(size()) * cell_area(); }

  /// Signed distance to the boundary of the continuous region (negative inside).
  double signed_distance(Point p) const {
    switch (shape_) {
      case Shape::rectangle: {
        const double hx = 0.5 * lambda_ * params_.width;
        const double hy = 0.5 * lambda_ * params_.height;
        const double qx = std::abs(p.x - hx) - hx;
        const double qy = std::abs(p.y - hy) - hy;
        const double ox = std::max(qx, 0.0), oy = std::max(qy, 0.0);
        return std::sqrt(ox * ox + oy * oy) + std::min(std::max(qx, qy), 0.0);
      }
      case Shape::disk:
        return norm(p) - lambda_ * params_.outer_radius;
      case Shape::annulus: {
        const double r = norm(p);
        return std::max(r - lambda_ * params_.outer_radius, lambda_ * params_.inner_radius - r);
      }
    }
    return std::numeric_limits<double>::infinity();
  }

  /// Distance from p to the closed region (zero inside).
  double distance_to_region(Point p) const { return std::max(signed_distance(p), 0.0); }

  bool contains(Point p) const { return signed_distance(p) < 0.0; }

  /// Symmetry centre of the region: origin for disks/annuli, box centre for rectangles.
  Point center() const {
    if (shape_ == Shape::rectangle)
      return {0.5 * lambda_ * params_.width, 0.5 * lambda_ * params_.height};
    return {0.0, 0.0};
  }

  double diameter() const {
    if (shape_ == Shape::rectangle)
      return lambda_ * std::sqrt(params_.width * params_.width + params_.height * params_.height);
    return 2.0 * lambda_ * params_.outer_radius;
  }

  /// Stable 64-bit FNV-1a digest of the construction parameters.
  std::string content_hash() const {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g",
                  std::string(to_string(shape_)).c_str(), params_.width, params_.height,
                  params_.outer_radius, params_.inner_radius, lambda_, h_);
    std::uint64_t hash = 1469598103934665603ULL;
    for (const char* c = buf; *c; ++c) {
      hash ^= static_cast<unsigned char>(*c);
      hash *= 1099511628211ULL;
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(hash));
    return out;
  }

  /// Node permutations induced by the D4 elements (about center()) that map
  /// the mask onto itself. perm[k] is the image node of node k. The identity
  /// is always first.
  std::vector<std::vector<int>> symmetry_permutations() const {
    std::vector<std::vector<int>> out;
    const Point c = center();
    for (int g = 0; g < 8; ++g) {
      std::vector<int> perm(size());
      bool ok = true;
      for (std::size_t k = 0; k < size() && ok; ++k) {
        const Point q = c + apply_d4(g, nodes_[k] - c);
        const double fi = q.x / h_, fj = q.y / h_;
        const long i = std::lround(fi), j = std::lround(fj);
        if (std::abs(fi - i) > 1e-6 || std::abs(fj - j) > 1e-6) {
          ok = false;
          break;
        }
        const int idx = index_at_lattice(i, j);
        if (idx < 0) ok = false;
        perm[k] = idx;
      }
      if (ok) out.push_back(std::move(perm));
    }
    return out;
  }

 private:
  friend GridDomain build_domain(Shape, const ShapeParams&, double, double);

  Shape shape_ = Shape::rectangle;
  ShapeParams params_;
  double lambda_ = 1.0;
  double h_ = 1.0;
  int nx_ = 0, ny_ = 0, i0_ = 0, j0_ = 0;
  std::vector<std::uint8_t> mask_;
  std::vector<int> grid_index_;
  std::vector<std::size_t> grid_pos_;
  std::vector<Point> nodes_;
  std::vector<double> boundary_distance_;
};

inline constexpr std::size_t kMinInteriorNodes = 25;

/// Builds the masked lattice for lambda * shape. A node belongs to the mask
/// when it lies strictly inside the continuous region.
inline GridDomain build_domain(Shape shape, const ShapeParams& params, double lambda, double h) {
  auto bad = [](const std::string& msg) { throw Error(ErrorKind::BadShapeParams, msg); };
  if (!(lambda > 0.0) || !std::isfinite(lambda)) bad("lambda must be positive");
  if (!(h > 0.0) || !std::isfinite(h)) bad("grid spacing h must be positive");
  switch (shape) {
    case Shape::rectangle:
      if (!(params.width > 0.0) || !(params.height > 0.0)) bad("rectangle sides must be positive");
      break;
    case Shape::disk:
      if (!(params.outer_radius > 0.0)) bad("disk radius must be positive");
      break;
    case Shape::annulus:
      if (!(params.inner_radius > 0.0) || !(params.outer_radius > 0.0))
        bad("annulus radii must be positive");
      if (!(params.inner_radius < params.outer_radius))
        bad("annulus requires inner radius < outer radius");
      break;
  }

  GridDomain dom;
  dom.shape_ = shape;
  dom.params_ = params;
  dom.lambda_ = lambda;
  dom.h_ = h;

  double xmin, xmax, ymin, ymax;
  if (shape == Shape::rectangle) {
    xmin = 0.0;
    ymin = 0.0;
    xmax = lambda * params.width;
    ymax = lambda * params.height;
  } else {
    xmax = ymax = lambda * params.outer_radius;
    xmin = ymin = -xmax;
  }
  dom.i0_ = static_cast<int>(std::ceil(xmin / h));
  dom.j0_ = static_cast<int>(std::ceil(ymin / h));
  const int i1 = static_cast<int>(std::floor(xmax / h));
  const int j1 = static_cast<int>(std::floor(ymax / h));
  dom.nx_ = std::max(0, i1 - dom.i0_ + 1);
  dom.ny_ = std::max(0, j1 - dom.j0_ + 1);

  const double inside_tol = 1e-9 * h;
  dom.mask_.assign(static_cast<std::size_t>(dom.nx_) * dom.ny_, 0);
  dom.grid_index_.assign(dom.mask_.size(), -1);
  for (int row = 0; row < dom.ny_; ++row) {
    for (int col = 0; col < dom.nx_; ++col) {
      const Point p{(dom.i0_ + col) * h, (dom.j0_ + row) * h};
      const double sd = dom.signed_distance(p);
      if (sd < -inside_tol) {
        const std::size_t pos = static_cast<std::size_t>(row) * dom.nx_ + col;
        dom.mask_[pos] = 1;
        dom.grid_index_[pos] = static_cast<int>(dom.nodes_.size());
        dom.grid_pos_.push_back(pos);
        dom.nodes_.push_back(p);
        dom.boundary_distance_.push_back(-sd);
      }
    }
  }
  if (dom.nodes_.size() < kMinInteriorNodes)
    throw Error(ErrorKind::EmptyMask, "grid spacing too coarse: " + std::to_string(dom.nodes_.size()) +
                                          " interior nodes (need >= " +
                                          std::to_string(kMinInteriorNodes) + ")");
  return dom;
}

/// Omega_lambda^+ = {d(x, Omega_lambda) <= band} and
/// Omega_lambda^- = {x in Omega_lambda : d(x, boundary) >= band}.
inline bool neighborhood_membership(const GridDomain& dom, Point p, double band, Side side) {
  const double sd = dom.signed_distance(p);
  if (side == Side::outer_plus) return sd <= band;
  return sd < 0.0 && -sd >= band;
}

}  // namespace fracfield
