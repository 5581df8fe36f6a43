#pragma once
// Adaptive augmented Lagrangian machinery: dual state, the augmented
// objective, the dual update and the primal optimizer step.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ddpecann/errors.hpp"
#include "ddpecann/net_autodiff.hpp"

namespace ddpecann {

struct DualSettings {
  double gamma = 1e-2;       // global dual learning rate
  double smoothing = 0.99;   // moving-average constant for vbar
  double epsilon = 1e-8;
};

/// Multipliers, penalties and averaged squared constraints. A state of size
/// one attached to a group of many points is a per-type multiplier acting on
/// the group mean.
struct DualState {
  Eigen::ArrayXd lambda;
  Eigen::ArrayXd mu;
  Eigen::ArrayXd vbar;
  DualSettings settings;

  static DualState initial(Eigen::Index n, const DualSettings& s = {}) {
    return {Eigen::ArrayXd::Ones(n), Eigen::ArrayXd::Ones(n), Eigen::ArrayXd::Zero(n), s};
  }

  Eigen::Index size() const { return lambda.size(); }

  void reset() { *this = initial(size(), settings); }

  bool is_initial() const {
    return (lambda == 1.0).all() && (mu == 1.0).all() && (vbar == 0.0).all();
  }
};

/// vbar <- a vbar + (1-a) C^2;  mu <- gamma / (sqrt(vbar) + eps);  lambda <- lambda + mu C.
/// Throws ProtocolError if a multiplier decreases under a non-negative constraint.
inline void dual_update(DualState& state, const Eigen::ArrayXd& c) {
  if (c.size() != state.size())
    throw ProtocolError("dual_update: constraint count " + std::to_string(c.size()) +
                        " does not match dual state size " + std::to_string(state.size()));
  const auto& s = state.settings;
  state.vbar = s.smoothing * state.vbar + (1.0 - s.smoothing) * c.square();
  state.mu = s.gamma / (state.vbar.sqrt() + s.epsilon);
  const Eigen::ArrayXd before = state.lambda;
  state.lambda += state.mu * c;
  for (Eigen::Index i = 0; i < c.size(); ++i)
    if (c(i) >= 0.0 && state.lambda(i) < before(i))
      throw ProtocolError("dual_update: multiplier decreased under a non-negative constraint");
}

enum class ConstraintRole { boundary, interface, measurement };

inline const char* to_string(ConstraintRole r) {
  switch (r) {
    case ConstraintRole::boundary: return "boundary";
    case ConstraintRole::interface: return "interface";
    case ConstraintRole::measurement: return "measurement";
  }
  return "?";
}

/// One role-tagged block of per-point constraint values and its duals.
struct ConstraintGroup {
  ConstraintRole role = ConstraintRole::boundary;
  int point_set = -1;        // index into the owner's point sets (interface index for interfaces)
  Eigen::ArrayXd values;     // current per-point squared residuals
  DualState dual;

  bool per_type() const { return dual.size() == 1 && values.size() != 1; }

  /// Constraint values as seen by the dual state.
  Eigen::ArrayXd dual_values() const {
    if (per_type()) return Eigen::ArrayXd::Constant(1, values.mean());
    return values;
  }

  /// mean_j [lambda_j C_j + mu_j C_j^2 / 2]
  double penalty() const {
    if (values.size() == 0) return 0.0;
    if (per_type()) {
      const double c = values.mean();
      return dual.lambda(0) * c + 0.5 * dual.mu(0) * c * c;
    }
    return (dual.lambda * values + 0.5 * dual.mu * values.square()).mean();
  }

  /// d penalty / d C_j
  Eigen::ArrayXd weights() const {
    const double n = static_cast<double>(values.size());
    if (per_type()) {
      const double c = values.mean();
      return Eigen::ArrayXd::Constant(values.size(), (dual.lambda(0) + dual.mu(0) * c) / n);
    }
    return (dual.lambda + dual.mu * values) / n;
  }
};

inline double augmented_lagrangian(double objective, std::span<const ConstraintGroup> groups) {
  double total = objective;
  for (const auto& g : groups) total += g.penalty();
  if (!std::isfinite(total)) throw DivergenceError("augmented_lagrangian: non-finite value");
  return total;
}

// --- primal step -----------------------------------------------------------

constexpr double kRobinMin = 1e-3;
constexpr double kRobinMax = 1.0 - 1e-3;

struct OptimizerSettings {
  enum class Kind { adam, gradient_descent } kind = Kind::adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Robin parameter update rule; negative lr means "same as the network".
  // Sharing the network's rate lets alpha run to a bound on interior strips.
  Kind robin_kind = Kind::adam;
  double robin_lr = 1e-4;
};

/// Adam (or plain gradient descent) over network weights and the Robin
/// parameter jointly.
class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(const Mlp& net, OptimizerSettings s)
      : settings_(s), m_(ParamGrad::zeros_like(net)), v_(ParamGrad::zeros_like(net)) {}

  const OptimizerSettings& settings() const { return settings_; }
  long long steps() const { return steps_; }

  /// One step; `robin` may be null when the Robin parameter is not learned.
  /// The Robin parameter is projected back into [kRobinMin, kRobinMax].
  void step(Mlp& net, double* robin, const ParamGrad& grad) {
    if (!grad.all_finite()) throw DivergenceError("primal_step: non-finite gradient");
    ++steps_;
    auto& layers = net.layers();
    if (settings_.kind == OptimizerSettings::Kind::gradient_descent) {
      for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l].weights -= settings_.lr * grad.layers[l].weights;
        layers[l].bias -= settings_.lr * grad.layers[l].bias;
      }
      step_robin(robin, grad.robin);
      return;
    }
    const double b1 = settings_.beta1, b2 = settings_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    const double lr = settings_.lr, eps = settings_.eps;
    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
      m = b1 * m + (1.0 - b1) * g;
      v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
      param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    };
    for (std::size_t l = 0; l < layers.size(); ++l) {
      update(layers[l].weights, m_.layers[l].weights, v_.layers[l].weights, grad.layers[l].weights);
      update(layers[l].bias, m_.layers[l].bias, v_.layers[l].bias, grad.layers[l].bias);
    }
    step_robin(robin, grad.robin);
  }

 private:
  void step_robin(double* robin, double g) {
    if (!robin) return;
    const double lr = settings_.robin_lr < 0.0 ? settings_.lr : settings_.robin_lr;
    double next;
    if (settings_.robin_kind == OptimizerSettings::Kind::gradient_descent) {
      next = *robin - lr * g;
    } else {
      const double b1 = settings_.beta1, b2 = settings_.beta2;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
      m_.robin = b1 * m_.robin + (1.0 - b1) * g;
      v_.robin = b2 * v_.robin + (1.0 - b2) * g * g;
      next = *robin - lr * (m_.robin / c1) / (std::sqrt(v_.robin / c2) + settings_.eps);
    }
    *robin = std::clamp(next, kRobinMin, kRobinMax);
  }

  OptimizerSettings settings_;
  ParamGrad m_, v_;
  long long steps_ = 0;
};

inline void primal_step(Mlp& net, double* robin, const ParamGrad& grad, Optimizer& opt) {
  opt.step(net, robin, grad);
}

}  // namespace ddpecann
