#pragma once
// Manufactured Poisson and Helmholtz problems and inverse-case setup.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <utility>

#include "ddpecann/errors.hpp"
#include "ddpecann/geometry.hpp"
#include "ddpecann/net_autodiff.hpp"

namespace ddpecann {

enum class PdeKind { poisson, helmholtz };

struct MeasurementSet {
  Points points;
  Eigen::VectorXd values;

  Eigen::Index size() const { return points.cols(); }
  bool empty() const { return points.cols() == 0; }
};

/// Per-subdomain deviations from "Dirichlet data on every physical edge".
struct SubdomainData {
  bool has_boundary_data = true;
  MeasurementSet measurements;
};

struct ProblemSpec {
  PdeKind kind = PdeKind::poisson;
  double wavenumber = 0.0;
  std::function<double(const Vec2&)> exact;
  std::function<double(const Vec2&)> source;
  std::function<double(const Vec2&)> boundary;
  std::map<int, SubdomainData> overrides;

  /// Coefficient c in  lap(u) + c u = s.
  double reaction() const { return kind == PdeKind::helmholtz ? wavenumber * wavenumber : 0.0; }

  bool has_boundary_data(int k) const {
    auto it = overrides.find(k);
    return it == overrides.end() || it->second.has_boundary_data;
  }

  const MeasurementSet* measurements(int k) const {
    auto it = overrides.find(k);
    if (it == overrides.end() || it->second.measurements.empty()) return nullptr;
    return &it->second.measurements;
  }
};

/// lap(u) - s for Poisson, lap(u) + k^2 u - s for Helmholtz.
inline double residual(const ProblemSpec& spec, const JetEval& jet, const Vec2& point) {
  return jet.laplacian() + spec.reaction() * jet.value - spec.source(point);
}

/// u = sin(pi/2 x - pi/2) sin(pi/2 y - pi/2), lap(u) = -(pi^2/2) u.
inline ProblemSpec poisson_manufactured() {
  constexpr double h = std::numbers::pi / 2.0;
  ProblemSpec spec;
  spec.kind = PdeKind::poisson;
  spec.exact = [](const Vec2& p) { return std::sin(h * p.x() - h) * std::sin(h * p.y() - h); };
  auto exact = spec.exact;
  spec.source = [exact](const Vec2& p) { return -2.0 * h * h * exact(p); };
  spec.boundary = exact;
  return spec;
}

/// u = sin(pi x) cos(pi y / 2), lap(u) = -(5 pi^2 / 4) u.
inline ProblemSpec helmholtz_manufactured(double k) {
  if (!std::isfinite(k)) throw ConfigError("helmholtz_manufactured: wavenumber must be finite");
  constexpr double pi = std::numbers::pi;
  ProblemSpec spec;
  spec.kind = PdeKind::helmholtz;
  spec.wavenumber = k;
  spec.exact = [](const Vec2& p) { return std::sin(pi * p.x()) * std::cos(0.5 * pi * p.y()); };
  auto exact = spec.exact;
  const double coeff = k * k - 1.25 * pi * pi;
  spec.source = [exact, coeff](const Vec2& p) { return coeff * exact(p); };
  spec.boundary = exact;
  return spec;
}

enum class InverseCase { missing_boundary = 1, limited_data = 2 };

/// Subdomain that loses its boundary data in each inverse case on the 2x2
/// split: bottom-right for case 1, bottom-left for case 2.
inline int designated_subdomain(InverseCase which) {
  return which == InverseCase::missing_boundary ? 1 : 0;
}

/// Drops the physical boundary constraint of the designated subdomain and
/// places `n_meas` measurements of the exact solution inside it, perturbed
/// by Gaussian noise of standard deviation `sigma`.
inline ProblemSpec make_inverse_case(ProblemSpec spec, InverseCase which, const Partition& part,
                                     int n_meas, std::uint64_t seed, double sigma = 0.0,
                                     int designated = -1) {
  if (part.grid_nx != 2 || part.grid_ny != 2)
    throw ConfigError("make_inverse_case: requires the 2x2 Cartesian partition");
  if (n_meas < 1) throw ConfigError("make_inverse_case: n_meas must be >= 1");
  if (sigma < 0.0) throw ConfigError("make_inverse_case: sigma must be >= 0");
  const int k = designated < 0 ? designated_subdomain(which) : designated;
  if (k >= static_cast<int>(part.size()))
    throw ConfigError("make_inverse_case: designated subdomain " + std::to_string(k) +
                      " out of range");

  auto rng = detail::stream(seed, 4, static_cast<std::uint64_t>(which));
  SubdomainData data;
  data.has_boundary_data = false;
  data.measurements.points = sample_interior(part.subdomains[k], n_meas, rng);
  data.measurements.values.resize(n_meas);
  std::normal_distribution<double> noise(0.0, sigma);
  for (int j = 0; j < n_meas; ++j) {
    double v = spec.exact(data.measurements.points.col(j));
    if (sigma > 0.0) v += noise(rng);
    data.measurements.values(j) = v;
  }
  spec.overrides[k] = std::move(data);
  return spec;
}

}  // namespace ddpecann
