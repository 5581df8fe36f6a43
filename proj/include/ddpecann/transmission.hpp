#pragma once
// Robin transmission data exchanged across interfaces.

#include <Eigen/Dense>

#include <string>

#include "ddpecann/errors.hpp"
#include "ddpecann/net_autodiff.hpp"

namespace ddpecann {

/// Neighbor data frozen for one outer iteration: the producer's value and
/// its derivative along the receiver's outward normal at every shared point.
struct InterfaceTrace {
  int interface_id = -1;
  int producer = -1;
  int receiver = -1;
  int iteration = 0;
  Eigen::ArrayXd value;
  Eigen::ArrayXd normal_derivative;

  Eigen::Index size() const { return value.size(); }

  static InterfaceTrace zeros(int interface_id, int producer, int receiver, Eigen::Index n) {
    return {interface_id, producer, receiver, 0, Eigen::ArrayXd::Zero(n), Eigen::ArrayXd::Zero(n)};
  }
};

/// Directional derivative grad(u) . n for every point of a batch.
inline Eigen::ArrayXd normal_derivative(const JetBatch& batch, const Points& normals) {
  return batch.dx() * normals.row(0).transpose().array() +
         batch.dy() * normals.row(1).transpose().array();
}

/// alpha^2 (u - u_trace)^2 + (1 - alpha)^2 (du/dn - du_trace/dn)^2 per point,
/// both derivatives taken along the receiving subdomain's outward normal.
inline Eigen::ArrayXd robin_mismatch(const Eigen::ArrayXd& value, const Eigen::ArrayXd& flux,
                                     const InterfaceTrace& trace, double alpha) {
  if (value.size() != trace.size() || flux.size() != trace.size())
    throw ProtocolError("robin_mismatch: interface " + std::to_string(trace.interface_id) +
                        " has " + std::to_string(value.size()) + " points but the trace has " +
                        std::to_string(trace.size()));
  const double a = alpha, b = 1.0 - alpha;
  return a * a * (value - trace.value).square() + b * b * (flux - trace.normal_derivative).square();
}

inline Eigen::ArrayXd robin_mismatch(const JetBatch& own, const Points& normals,
                                     const InterfaceTrace& trace, double alpha) {
  return robin_mismatch(own.value(), normal_derivative(own, normals), trace, alpha);
}

}  // namespace ddpecann
