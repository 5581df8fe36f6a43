#pragma once
// Outer Schwarz iteration: independent local training, trace exchange,
// interface dual reset.

#include <Eigen/Dense>

#include <chrono>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ddpecann/alm.hpp"
#include "ddpecann/config.hpp"
#include "ddpecann/errors.hpp"
#include "ddpecann/geometry.hpp"
#include "ddpecann/local_trainer.hpp"
#include "ddpecann/metrics.hpp"
#include "ddpecann/net_autodiff.hpp"
#include "ddpecann/transmission.hpp"

namespace ddpecann {

/// Trace of `model` on its `slot`-th interface, addressed to the neighbor:
/// the normal derivative is taken along the neighbor's outward normal.
inline InterfaceTrace produce_trace(const SubdomainModel& model, std::size_t slot, int iteration) {
  const auto& ps = model.data.points.interfaces.at(slot);
  const JetBatch batch = forward_batch(model.net, ps.coords);
  InterfaceTrace t;
  t.interface_id = ps.interface_id;
  t.producer = model.id;
  t.receiver = ps.neighbor;
  t.iteration = iteration;
  t.value = batch.value();
  t.normal_derivative = normal_derivative(batch, -ps.normals);
  return t;
}

struct SubdomainStatus {
  int subdomain = 0;
  LossBreakdown loss;
  double robin = 0.5;
  double rel_l2 = 0.0;
  double max_abs = 0.0;
};

struct IterationRecord {
  int iteration = 0;
  std::vector<SubdomainStatus> subdomains;
  double max_rel_l2 = 0.0;
  double max_abs = 0.0;
  std::vector<double> interface_gap;  // mean |u_i - u_j| per interface after exchange
};

struct RunResult {
  Setup setup;
  std::vector<SubdomainModel> models;
  std::vector<IterationRecord> history;
  int exchanges = 0;
  long long invariant_checks = 0;
  double wall_seconds = 0.0;
};

using IterationObserver = std::function<void(const IterationRecord&)>;

inline std::vector<SubdomainModel> init_models(const RunConfig& c, const Setup& s) {
  const auto points = sample_points(s.partition, c.points, c.seed);
  std::vector<SubdomainModel> models;
  for (std::size_t k = 0; k < s.partition.size(); ++k) {
    auto rng = detail::stream(c.seed, 5, k);
    models.push_back(make_subdomain_model(static_cast<int>(k), Mlp::glorot(c.hidden, rng()),
                                          points[k], s.problem, c.duals, c.optimizer,
                                          c.multipliers, c.robin_value));
  }
  return models;
}

namespace detail {

inline void train_all(std::vector<SubdomainModel>& models, const RunConfig& c,
                      const TrainSettings& settings, int iteration,
                      std::vector<LossBreakdown>& losses) {
  std::vector<std::exception_ptr> failures(models.size());
  auto work = [&](std::size_t k) {
    try {
      losses[k] = train_local(models[k], c.epochs, settings, iteration);
    } catch (...) {
      failures[k] = std::current_exception();
    }
  };
  if (c.parallel && models.size() > 1) {
    std::vector<std::jthread> workers;
    for (std::size_t k = 0; k < models.size(); ++k) workers.emplace_back(work, k);
  } else {
    for (std::size_t k = 0; k < models.size(); ++k) work(k);
  }
  for (std::size_t k = 0; k < models.size(); ++k) {
    if (!failures[k]) continue;
    try {
      std::rethrow_exception(failures[k]);
    } catch (const DivergenceError& e) {
      throw DivergenceError("outer iteration " + std::to_string(iteration) + ": " + e.what());
    }
  }
}

inline std::size_t slot_of(const SubdomainModel& m, int interface_id) {
  for (std::size_t i = 0; i < m.traces.size(); ++i)
    if (m.traces[i].interface_id == interface_id) return i;
  throw ProtocolError("subdomain " + std::to_string(m.id) + " does not touch interface " +
                      std::to_string(interface_id));
}

}  // namespace detail

/// Exchanges traces across every interface in both directions. All traces
/// are produced before any is delivered.
inline std::vector<double> exchange_traces(std::vector<SubdomainModel>& models,
                                           const Partition& part, int iteration) {
  std::vector<std::pair<int, InterfaceTrace>> outbox;
  std::vector<double> gaps;
  for (const auto& f : part.interfaces) {
    auto a = produce_trace(models[f.first], detail::slot_of(models[f.first], f.id), iteration);
    auto b = produce_trace(models[f.second], detail::slot_of(models[f.second], f.id), iteration);
    gaps.push_back((a.value - b.value).abs().mean());
    outbox.emplace_back(f.second, std::move(a));
    outbox.emplace_back(f.first, std::move(b));
  }
  for (auto& [receiver, trace] : outbox) {
    auto& m = models[receiver];
    m.traces[detail::slot_of(m, trace.interface_id)] = std::move(trace);
  }
  return gaps;
}

/// Restores interface duals to their initial values (lambda only when
/// `all` is false).
inline void reset_interface_duals(SubdomainModel& m, bool all) {
  for (auto& g : m.groups) {
    if (g.role != ConstraintRole::interface) continue;
    if (all)
      g.dual.reset();
    else
      g.dual.lambda.setOnes();
  }
}

/// Runs T outer iterations of E local epochs per subdomain.
inline RunResult run(const RunConfig& c, const IterationObserver& observer = {},
                     const TrainSettings& base_settings = {}) {
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  result.setup = build_setup(c);
  result.models = init_models(c, result.setup);
  auto& models = result.models;
  const auto& part = result.setup.partition;

  TrainSettings settings = base_settings;
  settings.robin_mode = c.robin_mode;

  std::vector<LossBreakdown> losses(models.size());
  for (int t = 1; t <= c.outer_iterations; ++t) {
    std::vector<std::vector<Eigen::ArrayXd>> lambda_before(models.size());
    if (c.check_invariants)
      for (std::size_t k = 0; k < models.size(); ++k)
        for (const auto& g : models[k].groups) lambda_before[k].push_back(g.dual.lambda);

    detail::train_all(models, c, settings, t, losses);

    IterationRecord rec;
    rec.iteration = t;
    if (!part.interfaces.empty()) {
      if (c.check_invariants) {
        for (std::size_t k = 0; k < models.size(); ++k)
          for (std::size_t i = 0; i < models[k].groups.size(); ++i) {
            if (!(models[k].groups[i].dual.lambda >= lambda_before[k][i]).all())
              throw ProtocolError("multiplier decreased during local training");
            lambda_before[k][i] = models[k].groups[i].dual.lambda;
          }
        result.invariant_checks += static_cast<long long>(models.size());
      }
      rec.interface_gap = exchange_traces(models, part, t);
      ++result.exchanges;
      for (auto& m : models) reset_interface_duals(m, c.reset_all_interface_duals);
      if (c.check_invariants) {
        for (std::size_t k = 0; k < models.size(); ++k) {
          for (std::size_t i = 0; i < models[k].groups.size(); ++i) {
            const auto& g = models[k].groups[i];
            const bool ok = g.role == ConstraintRole::interface
                                ? (c.reset_all_interface_duals ? g.dual.is_initial()
                                                               : (g.dual.lambda == 1.0).all())
                                : (g.dual.lambda == lambda_before[k][i]).all();
            if (!ok)
              throw ProtocolError("interface dual reset touched the wrong groups in subdomain " +
                                  std::to_string(k));
          }
          for (const auto& tr : models[k].traces)
            if (tr.iteration != t || tr.receiver != static_cast<int>(k))
              throw ProtocolError("stale or misrouted trace after exchange");
        }
        result.invariant_checks += static_cast<long long>(models.size());
      }
    }

    const ErrorReport err = compute_errors(models, result.setup.problem, part, c.grid);
    for (std::size_t k = 0; k < models.size(); ++k)
      rec.subdomains.push_back({static_cast<int>(k), losses[k], models[k].robin,
                                err.per_subdomain[k].rel_l2, err.per_subdomain[k].max_abs});
    rec.max_rel_l2 = err.max_rel_l2;
    rec.max_abs = err.max_abs;
    result.history.push_back(rec);
    if (observer) observer(rec);
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace ddpecann
