#pragma once
// Error metrics on uniform evaluation grids.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ddpecann/errors.hpp"
#include "ddpecann/geometry.hpp"
#include "ddpecann/local_trainer.hpp"
#include "ddpecann/problems.hpp"

namespace ddpecann {

/// resolution x resolution grid over the subdomain's bounding box, keeping
/// only points of the closed region.
inline Points evaluation_grid(const Subdomain& sub, int resolution) {
  if (resolution < 2) throw ConfigError("evaluation grid resolution must be >= 2");
  std::vector<Vec2> kept;
  const Box& b = sub.bounds;
  for (int j = 0; j < resolution; ++j) {
    const double y = b.y0 + (b.y1 - b.y0) * j / (resolution - 1);
    for (int i = 0; i < resolution; ++i) {
      const double x = b.x0 + (b.x1 - b.x0) * i / (resolution - 1);
      const Vec2 p(x, y);
      if (sub.contains(p)) kept.push_back(p);
    }
  }
  if (kept.empty())
    throw GeometryError("evaluation grid of subdomain " + std::to_string(sub.id) + " is empty");
  Points pts(2, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) pts.col(static_cast<Eigen::Index>(i)) = kept[i];
  return pts;
}

struct FieldSamples {
  int subdomain = 0;
  Points points;
  Eigen::ArrayXd exact;
  Eigen::ArrayXd predicted;
};

struct SubdomainError {
  int subdomain = 0;
  double rel_l2 = 0.0;   // ||u - u_hat||_2 / ||u||_2 over grid points
  double max_abs = 0.0;  // max |u - u_hat|
};

struct ErrorReport {
  std::vector<SubdomainError> per_subdomain;
  double max_rel_l2 = 0.0;
  double max_abs = 0.0;
  std::vector<double> robin;
  double wall_seconds = 0.0;
};

/// Predicted solution of subdomain k at the given points.
using Predictor = std::function<Eigen::ArrayXd(int, const Points&)>;

inline std::vector<FieldSamples> sample_fields(const Partition& part,
                                               const std::function<double(const Vec2&)>& exact,
                                               const Predictor& predict, int resolution) {
  std::vector<FieldSamples> out;
  for (const auto& sub : part.subdomains) {
    FieldSamples f;
    f.subdomain = sub.id;
    f.points = evaluation_grid(sub, resolution);
    f.exact.resize(f.points.cols());
    for (Eigen::Index j = 0; j < f.points.cols(); ++j) f.exact(j) = exact(f.points.col(j));
    f.predicted = predict(sub.id, f.points);
    if (f.predicted.size() != f.points.cols())
      throw ConfigError("predictor returned the wrong number of values");
    out.push_back(std::move(f));
  }
  return out;
}

inline SubdomainError field_error(const FieldSamples& f) {
  const Eigen::ArrayXd diff = f.exact - f.predicted;
  const double num = std::sqrt(diff.square().sum());
  const double den = std::sqrt(f.exact.square().sum());
  SubdomainError e;
  e.subdomain = f.subdomain;
  e.rel_l2 = den > 0.0 ? num / den : (num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  e.max_abs = diff.abs().maxCoeff();
  return e;
}

inline ErrorReport errors_from_fields(std::span<const FieldSamples> fields) {
  ErrorReport r;
  for (const auto& f : fields) {
    r.per_subdomain.push_back(field_error(f));
    r.max_rel_l2 = std::max(r.max_rel_l2, r.per_subdomain.back().rel_l2);
    r.max_abs = std::max(r.max_abs, r.per_subdomain.back().max_abs);
  }
  return r;
}

inline ErrorReport compute_errors(const Partition& part,
                                  const std::function<double(const Vec2&)>& exact,
                                  const Predictor& predict, int resolution) {
  const auto fields = sample_fields(part, exact, predict, resolution);
  return errors_from_fields(fields);
}

inline Predictor model_predictor(std::span<const SubdomainModel> models) {
  return [models](int k, const Points& pts) -> Eigen::ArrayXd {
    return forward_batch(models[k].net, pts).value();
  };
}

inline ErrorReport compute_errors(std::span<const SubdomainModel> models, const ProblemSpec& problem,
                                  const Partition& part, int resolution) {
  ErrorReport r = compute_errors(part, problem.exact, model_predictor(models), resolution);
  for (const auto& m : models) r.robin.push_back(m.robin);
  return r;
}

}  // namespace ddpecann
