#pragma once
// Per-subdomain model and its local augmented-Lagrangian training loop.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ddpecann/alm.hpp"
#include "ddpecann/errors.hpp"
#include "ddpecann/geometry.hpp"
#include "ddpecann/net_autodiff.hpp"
#include "ddpecann/problems.hpp"
#include "ddpecann/transmission.hpp"

namespace ddpecann {

enum class RobinMode { adaptive, constant, closed_form };

enum class MultiplierGranularity { per_point, per_type };

/// Everything a subdomain knows about its part of the global problem.
struct LocalData {
  SubdomainPoints points;
  Eigen::ArrayXd interior_source;
  Eigen::ArrayXd boundary_values;  // empty when the subdomain has no boundary data
  MeasurementSet measurements;
  double reaction = 0.0;
};

struct SubdomainModel {
  int id = 0;
  Mlp net;
  double robin = 0.5;
  Optimizer optimizer;
  LocalData data;
  std::vector<ConstraintGroup> groups;
  std::vector<InterfaceTrace> traces;  // incoming, parallel to data.points.interfaces
};

struct LossBreakdown {
  long long epoch = 0;       // optimizer step count after this epoch
  double objective = 0.0;    // mean squared PDE residual
  double boundary = 0.0;     // mean boundary constraint
  double interface = 0.0;    // mean interface constraint over all interfaces
  double measurement = 0.0;  // mean measurement constraint
  double total = 0.0;        // augmented Lagrangian
};

struct TrainSettings {
  RobinMode robin_mode = RobinMode::adaptive;
  std::function<void(int subdomain, const LossBreakdown&)> on_epoch;
};

/// Builds the model for subdomain `k`: network, Robin parameter 0.5, zero
/// incoming traces at iteration 0, fresh duals for every constraint group.
inline SubdomainModel make_subdomain_model(int k, Mlp net, const SubdomainPoints& pts,
                                           const ProblemSpec& problem, const DualSettings& duals,
                                           const OptimizerSettings& opt,
                                           MultiplierGranularity granularity, double robin = 0.5) {
  SubdomainModel m;
  m.id = k;
  m.net = std::move(net);
  m.robin = robin;
  m.optimizer = Optimizer(m.net, opt);
  m.data.points = pts;
  m.data.reaction = problem.reaction();

  const auto& interior = pts.interior.coords;
  m.data.interior_source.resize(interior.cols());
  for (Eigen::Index j = 0; j < interior.cols(); ++j)
    m.data.interior_source(j) = problem.source(interior.col(j));

  auto dual_for = [&](Eigen::Index n) {
    return DualState::initial(granularity == MultiplierGranularity::per_type ? 1 : n, duals);
  };

  if (problem.has_boundary_data(k) && pts.boundary.size() > 0) {
    const auto& b = pts.boundary.coords;
    m.data.boundary_values.resize(b.cols());
    for (Eigen::Index j = 0; j < b.cols(); ++j) m.data.boundary_values(j) = problem.boundary(b.col(j));
    m.groups.push_back({ConstraintRole::boundary, -1, Eigen::ArrayXd::Zero(b.cols()), dual_for(b.cols())});
  }
  for (std::size_t i = 0; i < pts.interfaces.size(); ++i) {
    const auto& ps = pts.interfaces[i];
    m.groups.push_back({ConstraintRole::interface, static_cast<int>(i),
                        Eigen::ArrayXd::Zero(ps.size()), dual_for(ps.size())});
    m.traces.push_back(InterfaceTrace::zeros(ps.interface_id, ps.neighbor, k, ps.size()));
  }
  if (const auto* meas = problem.measurements(k)) {
    m.data.measurements = *meas;
    m.groups.push_back({ConstraintRole::measurement, -1, Eigen::ArrayXd::Zero(meas->size()),
                        dual_for(meas->size())});
  }
  return m;
}

namespace detail {

inline const Points& group_points(const SubdomainModel& m, const ConstraintGroup& g) {
  switch (g.role) {
    case ConstraintRole::boundary: return m.data.points.boundary.coords;
    case ConstraintRole::interface: return m.data.points.interfaces[g.point_set].coords;
    case ConstraintRole::measurement: return m.data.measurements.points;
  }
  throw ProtocolError("unknown constraint role");
}

struct InterfaceGaps {
  Eigen::ArrayXd value;  // u - u_trace
  Eigen::ArrayXd flux;   // du/dn - du_trace/dn
};

inline InterfaceGaps interface_gaps(const SubdomainModel& m, const ConstraintGroup& g,
                                    const JetBatch& batch) {
  const auto& trace = m.traces[g.point_set];
  const auto& normals = m.data.points.interfaces[g.point_set].normals;
  if (trace.size() != batch.size())
    throw ProtocolError("interface " + std::to_string(trace.interface_id) +
                        ": trace size does not match the interface point count");
  return {batch.value() - trace.value, normal_derivative(batch, normals) - trace.normal_derivative};
}

/// Per-point squared residuals of one constraint group.
inline Eigen::ArrayXd constraint_values(const SubdomainModel& m, const ConstraintGroup& g,
                                        const JetBatch& batch) {
  switch (g.role) {
    case ConstraintRole::boundary: return (batch.value() - m.data.boundary_values).square();
    case ConstraintRole::measurement:
      return (batch.value() - m.data.measurements.values.array()).square();
    case ConstraintRole::interface: {
      const auto& trace = m.traces[g.point_set];
      return robin_mismatch(batch.value(), normal_derivative(batch, m.data.points.interfaces[g.point_set].normals),
                            trace, m.robin);
    }
  }
  throw ProtocolError("unknown constraint role");
}

/// Fills dL/d(channel) for a constraint group given dL/dC_j = w_j and returns
/// dL/d(robin) contributed by the group.
inline double constraint_seeds(const SubdomainModel& m, const ConstraintGroup& g,
                               const JetBatch& batch, const Eigen::ArrayXd& w, JetSeeds& seeds) {
  switch (g.role) {
    case ConstraintRole::boundary:
      seeds.value = 2.0 * w * (batch.value() - m.data.boundary_values);
      return 0.0;
    case ConstraintRole::measurement:
      seeds.value = 2.0 * w * (batch.value() - m.data.measurements.values.array());
      return 0.0;
    case ConstraintRole::interface: {
      const auto gaps = interface_gaps(m, g, batch);
      const auto& normals = m.data.points.interfaces[g.point_set].normals;
      const double a = m.robin, b = 1.0 - m.robin;
      seeds.value = 2.0 * a * a * w * gaps.value;
      const Eigen::ArrayXd dflux = 2.0 * b * b * w * gaps.flux;
      seeds.dx = dflux * normals.row(0).transpose().array();
      seeds.dy = dflux * normals.row(1).transpose().array();
      return (w * (2.0 * a * gaps.value.square() - 2.0 * b * gaps.flux.square())).sum();
    }
  }
  throw ProtocolError("unknown constraint role");
}

inline std::string where(const SubdomainModel& m, long long step) {
  return "subdomain " + std::to_string(m.id) + ", step " + std::to_string(step);
}

inline void fill_breakdown(const std::vector<ConstraintGroup>& groups, LossBreakdown& out) {
  double bsum = 0, isum = 0, msum = 0;
  Eigen::Index bn = 0, in = 0, mn = 0;
  for (const auto& g : groups) {
    const double s = g.values.sum();
    switch (g.role) {
      case ConstraintRole::boundary: bsum += s; bn += g.values.size(); break;
      case ConstraintRole::interface: isum += s; in += g.values.size(); break;
      case ConstraintRole::measurement: msum += s; mn += g.values.size(); break;
    }
  }
  out.boundary = bn ? bsum / bn : 0.0;
  out.interface = in ? isum / in : 0.0;
  out.measurement = mn ? msum / mn : 0.0;
}

/// Augmented Lagrangian at the current parameters and its gradient with
/// respect to the network and the Robin parameter. `batches` are the jets of
/// the constraint groups, whose `values` must be current.
inline ParamGrad lagrangian_gradient(const SubdomainModel& m, const JetBatch& interior,
                                     const std::vector<JetBatch>& batches, LossBreakdown& bd,
                                     long long step) {
  const Eigen::ArrayXd r =
      interior.laplacian() + m.data.reaction * interior.value() - m.data.interior_source;
  bd.objective = r.square().mean();
  if (!std::isfinite(bd.objective))
    throw DivergenceError(where(m, step) + ": non-finite PDE residual");
  fill_breakdown(m.groups, bd);
  bd.total = augmented_lagrangian(bd.objective, m.groups);

  ParamGrad grad = ParamGrad::zeros_like(m.net);
  JetSeeds seeds(interior.size());
  seeds.dxx = 2.0 * r / static_cast<double>(interior.size());
  seeds.dyy = seeds.dxx;
  seeds.value = m.data.reaction * seeds.dxx;
  backward(m.net, interior, seeds, grad);

  for (std::size_t i = 0; i < m.groups.size(); ++i) {
    const auto& g = m.groups[i];
    JetSeeds gs(batches[i].size());
    const double drobin = constraint_seeds(m, g, batches[i], g.weights(), gs);
    if (!gs.all_finite() || !std::isfinite(drobin))
      throw DivergenceError(where(m, step) + ": non-finite gradient in " + to_string(g.role) +
                            " constraints");
    backward(m.net, batches[i], gs, grad);
    grad.robin += drobin;
  }
  if (!grad.all_finite())
    throw DivergenceError(where(m, step) + ": non-finite gradient in PDE residual");
  return grad;
}

/// Closed-form minimizer of sum_j [a^2 A_j + (1-a)^2 B_j] over a.
inline std::optional<double> closed_form_robin(const SubdomainModel& m,
                                               const std::vector<JetBatch>& batches) {
  double A = 0.0, B = 0.0;
  for (std::size_t i = 0; i < m.groups.size(); ++i) {
    if (m.groups[i].role != ConstraintRole::interface) continue;
    const auto gaps = interface_gaps(m, m.groups[i], batches[i]);
    A += gaps.value.square().sum();
    B += gaps.flux.square().sum();
  }
  if (!(A + B > 0.0)) return std::nullopt;
  return std::clamp(B / (A + B), kRobinMin, kRobinMax);
}

}  // namespace detail

/// Current loss breakdown without training.
inline LossBreakdown assess(const SubdomainModel& m) {
  LossBreakdown out;
  out.epoch = m.optimizer.steps();
  const auto interior = forward_batch(m.net, m.data.points.interior.coords);
  const Eigen::ArrayXd r = interior.laplacian() + m.data.reaction * interior.value() - m.data.interior_source;
  out.objective = r.square().mean();
  auto groups = m.groups;
  for (auto& g : groups)
    g.values = detail::constraint_values(m, g, forward_batch(m.net, detail::group_points(m, g)));
  detail::fill_breakdown(groups, out);
  out.total = out.objective;
  for (const auto& g : groups) out.total += g.penalty();
  return out;
}

/// Runs `epochs` rounds of {primal step on the augmented Lagrangian, dual
/// update with the constraint values at the new parameters}. Incoming traces
/// are constants and must come from `outer_iteration - 1`.
inline LossBreakdown train_local(SubdomainModel& m, int epochs, const TrainSettings& settings,
                                 int outer_iteration = 1) {
  if (epochs < 0) throw ConfigError("train_local: epochs must be >= 0");
  for (const auto& t : m.traces)
    if (t.iteration != outer_iteration - 1)
      throw ProtocolError("subdomain " + std::to_string(m.id) + ": trace for interface " +
                          std::to_string(t.interface_id) + " is from iteration " +
                          std::to_string(t.iteration) + ", expected " +
                          std::to_string(outer_iteration - 1));
  if (epochs == 0) return assess(m);

  const bool learn_robin = settings.robin_mode == RobinMode::adaptive && !m.traces.empty();
  const auto& interior_pts = m.data.points.interior.coords;

  std::vector<JetBatch> batches;
  auto refresh = [&] {
    batches.clear();
    for (auto& g : m.groups) {
      batches.push_back(forward_batch(m.net, detail::group_points(m, g)));
      g.values = detail::constraint_values(m, g, batches.back());
    }
  };
  refresh();

  LossBreakdown last;
  for (int e = 0; e < epochs; ++e) {
    const long long step = m.optimizer.steps();
    const JetBatch interior = forward_batch(m.net, interior_pts);

    LossBreakdown bd;
    ParamGrad grad = detail::lagrangian_gradient(m, interior, batches, bd, step);
    if (!learn_robin) grad.robin = 0.0;

    primal_step(m.net, learn_robin ? &m.robin : nullptr, grad, m.optimizer);

    refresh();
    if (settings.robin_mode == RobinMode::closed_form) {
      if (auto a = detail::closed_form_robin(m, batches)) {
        m.robin = *a;
        for (std::size_t i = 0; i < m.groups.size(); ++i)
          m.groups[i].values = detail::constraint_values(m, m.groups[i], batches[i]);
      }
    }
    for (auto& g : m.groups) dual_update(g.dual, g.dual_values());

    bd.epoch = m.optimizer.steps();
    if (settings.on_epoch) settings.on_epoch(m.id, bd);
    last = bd;
  }
  return last;
}

}  // namespace ddpecann
