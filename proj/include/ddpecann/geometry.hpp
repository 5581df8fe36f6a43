#pragma once
// Non-overlapping partitions of 2-D domains and collocation sampling.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ddpecann/errors.hpp"
#include "ddpecann/net_autodiff.hpp"

namespace ddpecann {

struct Box {
  double x0 = -1.0, x1 = 1.0, y0 = -1.0, y1 = 1.0;

  bool contains(const Vec2& p, double tol = 0.0) const {
    return p.x() >= x0 - tol && p.x() <= x1 + tol && p.y() >= y0 - tol && p.y() <= y1 + tol;
  }
  bool strictly_contains(const Vec2& p) const {
    return p.x() > x0 && p.x() < x1 && p.y() > y0 && p.y() < y1;
  }
};

/// Closed curve r = rho(theta) in polar form, theta in [0, 2pi).
struct PolarCurve {
  std::function<double(double)> rho;
  std::function<double(double)> drho;

  Vec2 point(double theta) const {
    const double r = rho(theta);
    return {r * std::cos(theta), r * std::sin(theta)};
  }

  /// Unit normal obtained by rotating the counter-clockwise tangent by -90
  /// degrees; points away from the enclosed region.
  Vec2 outward_normal(double theta) const {
    const double r = rho(theta), dr = drho(theta);
    const double c = std::cos(theta), s = std::sin(theta);
    const Vec2 tangent(dr * c - r * s, dr * s + r * c);
    return Vec2(tangent.y(), -tangent.x()).normalized();
  }

  /// Signed radial distance |p| - rho(atan2(p)).
  double radial_offset(const Vec2& p) const {
    double theta = std::atan2(p.y(), p.x());
    if (theta < 0.0) theta += 2.0 * std::numbers::pi;
    return p.norm() - rho(theta);
  }

  static PolarCurve circle(double radius) {
    return {[radius](double) { return radius; }, [](double) { return 0.0; }};
  }

  /// rho = 2 + sin(2t) cos(2t)
  static PolarCurve complex_outer() {
    return {[](double t) { return 2.0 + std::sin(2.0 * t) * std::cos(2.0 * t); },
            [](double t) { return 2.0 * std::cos(4.0 * t); }};
  }

  /// rho = 1 + 0.5 cos(4t) sin(6t)
  static PolarCurve complex_interface() {
    return {[](double t) { return 1.0 + 0.5 * std::cos(4.0 * t) * std::sin(6.0 * t); },
            [](double t) {
              return 0.5 * (-4.0 * std::sin(4.0 * t) * std::sin(6.0 * t) +
                            6.0 * std::cos(4.0 * t) * std::cos(6.0 * t));
            }};
  }
};

struct LineSegment {
  Vec2 a, b;
  Vec2 normal;  // unit, orientation fixed by the owner
};

/// A boundary or interface piece: a straight segment or a closed polar curve.
/// Its normal is the orientation used by whoever owns the piece.
struct CurvePiece {
  std::variant<LineSegment, PolarCurve> shape;

  /// Distance of `p` from the curve (radial offset for polar curves).
  double residual(const Vec2& p) const {
    if (const auto* seg = std::get_if<LineSegment>(&shape)) {
      const Vec2 d = seg->b - seg->a;
      const double t = std::clamp((p - seg->a).dot(d) / d.squaredNorm(), 0.0, 1.0);
      return (seg->a + t * d - p).norm();
    }
    return std::abs(std::get<PolarCurve>(shape).radial_offset(p));
  }

  /// Samples `n` points with their unit normals. Segments always include both
  /// endpoints when n >= 2; polar curves draw theta uniformly in [0, 2pi).
  void sample(int n, std::mt19937_64& rng, Points& pts, Points& normals) const {
    pts.resize(2, n);
    normals.resize(2, n);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (const auto* seg = std::get_if<LineSegment>(&shape)) {
      for (int j = 0; j < n; ++j) {
        double t;
        if (n >= 2 && j == 0)
          t = 0.0;
        else if (n >= 2 && j == 1)
          t = 1.0;
        else
          t = unit(rng);
        pts.col(j) = seg->a + t * (seg->b - seg->a);
        normals.col(j) = seg->normal;
      }
      return;
    }
    const auto& curve = std::get<PolarCurve>(shape);
    for (int j = 0; j < n; ++j) {
      const double theta = 2.0 * std::numbers::pi * unit(rng);
      pts.col(j) = curve.point(theta);
      normals.col(j) = curve.outward_normal(theta);
    }
  }
};

struct Subdomain {
  int id = 0;
  Box bounds;
  std::function<bool(const Vec2&)> contains;   // closed region
  std::function<bool(const Vec2&)> interior;   // open region
  std::vector<CurvePiece> boundary;            // pieces of the physical boundary
};

/// Shared boundary of two subdomains. The piece's normal points out of
/// `first` into `second`.
struct Interface {
  int id = 0;
  int first = 0;
  int second = 0;
  CurvePiece piece;
};

struct Partition {
  Box bounds;
  std::vector<Subdomain> subdomains;
  std::vector<Interface> interfaces;
  int grid_nx = 0;  // 0 for non-Cartesian partitions
  int grid_ny = 0;

  std::size_t size() const { return subdomains.size(); }

  std::vector<int> interfaces_of(int k) const {
    std::vector<int> ids;
    for (const auto& f : interfaces)
      if (f.first == k || f.second == k) ids.push_back(f.id);
    return ids;
  }
};

/// Splits `domain` into nx * ny boxes. Subdomain id = iy * nx + ix with ix
/// increasing in x and iy increasing in y.
inline Partition make_cartesian_partition(const Box& domain, int nx, int ny) {
  if (nx < 1 || ny < 1)
    throw ConfigError("make_cartesian_partition: nx and ny must be >= 1");
  Partition part;
  part.bounds = domain;
  part.grid_nx = nx;
  part.grid_ny = ny;
  const double hx = (domain.x1 - domain.x0) / nx;
  const double hy = (domain.y1 - domain.y0) / ny;
  auto xcut = [&](int i) { return i == nx ? domain.x1 : domain.x0 + i * hx; };
  auto ycut = [&](int j) { return j == ny ? domain.y1 : domain.y0 + j * hy; };

  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      Subdomain s;
      s.id = iy * nx + ix;
      s.bounds = {xcut(ix), xcut(ix + 1), ycut(iy), ycut(iy + 1)};
      const Box b = s.bounds;
      s.contains = [b](const Vec2& p) { return b.contains(p, 1e-12); };
      s.interior = [b](const Vec2& p) { return b.strictly_contains(p); };
      const Vec2 ll(b.x0, b.y0), lr(b.x1, b.y0), ul(b.x0, b.y1), ur(b.x1, b.y1);
      if (iy == 0) s.boundary.push_back({LineSegment{ll, lr, Vec2(0, -1)}});
      if (ix == nx - 1) s.boundary.push_back({LineSegment{lr, ur, Vec2(1, 0)}});
      if (iy == ny - 1) s.boundary.push_back({LineSegment{ul, ur, Vec2(0, 1)}});
      if (ix == 0) s.boundary.push_back({LineSegment{ll, ul, Vec2(-1, 0)}});
      part.subdomains.push_back(std::move(s));
    }
  }
  int next = 0;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const int k = iy * nx + ix;
      const Box& b = part.subdomains[k].bounds;
      if (ix + 1 < nx)
        part.interfaces.push_back(
            {next++, k, k + 1, {LineSegment{Vec2(b.x1, b.y0), Vec2(b.x1, b.y1), Vec2(1, 0)}}});
      if (iy + 1 < ny)
        part.interfaces.push_back(
            {next++, k, k + nx, {LineSegment{Vec2(b.x0, b.y1), Vec2(b.x1, b.y1), Vec2(0, 1)}}});
    }
  }
  return part;
}

/// Two subdomains: id 0 is the region between `inner` and `outer`, id 1 the
/// region enclosed by `inner`. The interface is stored as (1, 0) so its
/// normal points outward from the enclosed region.
inline Partition make_polar_partition(const PolarCurve& outer, const PolarCurve& inner) {
  constexpr int kProbe = 4096;
  double r_outer = 0.0, r_inner = 0.0;
  for (int i = 0; i < kProbe; ++i) {
    const double theta = 2.0 * std::numbers::pi * i / kProbe;
    const double ro = outer.rho(theta), ri = inner.rho(theta);
    if (!(ri > 0.0) || !(ro > 0.0))
      throw GeometryError("make_polar_partition: radius must be positive");
    if (!(ri < ro))
      throw GeometryError("make_polar_partition: interface curve meets the outer boundary");
    r_outer = std::max(r_outer, ro);
    r_inner = std::max(r_inner, ri);
  }
  r_outer *= 1.001;
  r_inner *= 1.001;

  Partition part;
  part.bounds = {-r_outer, r_outer, -r_outer, r_outer};

  Subdomain annulus;
  annulus.id = 0;
  annulus.bounds = part.bounds;
  annulus.contains = [outer, inner](const Vec2& p) {
    return inner.radial_offset(p) >= -1e-12 && outer.radial_offset(p) <= 1e-12;
  };
  annulus.interior = [outer, inner](const Vec2& p) {
    return inner.radial_offset(p) > 0.0 && outer.radial_offset(p) < 0.0;
  };
  annulus.boundary.push_back({outer});

  Subdomain core;
  core.id = 1;
  core.bounds = {-r_inner, r_inner, -r_inner, r_inner};
  core.contains = [inner](const Vec2& p) { return inner.radial_offset(p) <= 1e-12; };
  core.interior = [inner](const Vec2& p) { return inner.radial_offset(p) < 0.0; };

  part.subdomains.push_back(std::move(annulus));
  part.subdomains.push_back(std::move(core));
  part.interfaces.push_back({0, 1, 0, {inner}});
  return part;
}

enum class PointRole { interior, boundary, interface, measurement };

struct PointSet {
  PointRole role = PointRole::interior;
  Points coords;
  Points normals;          // outward normals of the owning subdomain (interface sets)
  int interface_id = -1;
  int neighbor = -1;

  Eigen::Index size() const { return coords.cols(); }
};

struct SubdomainPoints {
  PointSet interior;
  PointSet boundary;
  std::vector<PointSet> interfaces;
};

struct PointCounts {
  int interior = 1024;
  int boundary = 128;   // per physical-boundary piece
  int interface = 128;  // per interface piece
};

namespace detail {

inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

}  // namespace detail

/// Rejection-samples `n` points of the open region of `sub`.
inline Points sample_interior(const Subdomain& sub, int n, std::mt19937_64& rng) {
  Points pts(2, n);
  std::uniform_real_distribution<double> ux(sub.bounds.x0, sub.bounds.x1);
  std::uniform_real_distribution<double> uy(sub.bounds.y0, sub.bounds.y1);
  long long attempts = 0;
  int accepted = 0;
  while (accepted < n) {
    const Vec2 p(ux(rng), uy(rng));
    ++attempts;
    if (sub.interior(p)) pts.col(accepted++) = p;
    if (attempts >= 10000 && static_cast<double>(accepted) / attempts < 1e-3)
      throw GeometryError("sample_points: degenerate region for subdomain " +
                          std::to_string(sub.id));
  }
  return pts;
}

/// Draws all collocation points once. Interface points are drawn once per
/// interface and handed to both sides, each with its own outward normal.
inline std::vector<SubdomainPoints> sample_points(const Partition& part, const PointCounts& counts,
                                                  std::uint64_t seed) {
  if (counts.interior < 1 || counts.boundary < 1 || counts.interface < 1)
    throw ConfigError("sample_points: counts must be >= 1");
  std::vector<SubdomainPoints> out(part.size());
  for (const auto& sub : part.subdomains) {
    auto& sp = out[sub.id];
    auto rng = detail::stream(seed, 1, sub.id);
    sp.interior.role = PointRole::interior;
    sp.interior.coords = sample_interior(sub, counts.interior, rng);

    sp.boundary.role = PointRole::boundary;
    const int nb = static_cast<int>(sub.boundary.size()) * counts.boundary;
    sp.boundary.coords.resize(2, nb);
    sp.boundary.normals.resize(2, nb);
    auto brng = detail::stream(seed, 2, sub.id);
    for (std::size_t i = 0; i < sub.boundary.size(); ++i) {
      Points p, nrm;
      sub.boundary[i].sample(counts.boundary, brng, p, nrm);
      sp.boundary.coords.middleCols(i * counts.boundary, counts.boundary) = p;
      sp.boundary.normals.middleCols(i * counts.boundary, counts.boundary) = nrm;
    }
  }
  for (const auto& f : part.interfaces) {
    auto rng = detail::stream(seed, 3, f.id);
    Points p, nrm;
    f.piece.sample(counts.interface, rng, p, nrm);
    PointSet first{PointRole::interface, p, nrm, f.id, f.second};
    PointSet second{PointRole::interface, p, -nrm, f.id, f.first};
    out[f.first].interfaces.push_back(std::move(first));
    out[f.second].interfaces.push_back(std::move(second));
  }
  return out;
}

}  // namespace ddpecann
