#pragma once
// Dense tanh networks with exact second-order input derivatives.
//
// A batch of points is pushed through the network as a set of "channels":
// the value, the two first derivatives, the two pure second derivatives and
// optionally the mixed derivative. Channels are stored side by side in one
// matrix (width x channels*N) so each layer costs a single GEMM. The forward
// pass keeps every intermediate, which is the record the reverse sweep in
// backward() walks to produce parameter gradients of any loss built from
// the output channels.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ddpecann/errors.hpp"

namespace ddpecann {

using Vec2 = Eigen::Vector2d;
using Points = Eigen::Matrix2Xd;

enum Channel : int { kValue = 0, kDx, kDy, kDxx, kDyy, kDxy };

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

class Mlp {
 public:
  Mlp() = default;

  explicit Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ConfigError("Mlp: at least one layer is required");
    if (layers_.front().weights.cols() != 2)
      throw ConfigError("Mlp: input dimension must be 2");
    if (layers_.back().weights.rows() != 1)
      throw ConfigError("Mlp: output dimension must be 1");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      if (layer.bias.size() != layer.weights.rows())
        throw ConfigError("Mlp: bias size mismatch in layer " + std::to_string(l));
      if (l > 0 && layer.weights.cols() != layers_[l - 1].weights.rows())
        throw ConfigError("Mlp: non-conformable layers at " + std::to_string(l));
      if (!layer.weights.allFinite() || !layer.bias.allFinite())
        throw ConfigError("Mlp: non-finite parameter in layer " + std::to_string(l));
    }
  }

  /// Glorot-uniform weights, zero biases. `hidden` lists the hidden widths;
  /// an empty list gives a single affine layer.
  static Mlp glorot(std::span<const int> hidden, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<DenseLayer> layers;
    int in = 2;
    auto add = [&](int out) {
      if (out < 1) throw ConfigError("Mlp: layer widths must be positive");
      const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
      std::uniform_real_distribution<double> dist(-limit, limit);
      DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
      // column-major fill order is part of the reproducibility contract
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j)
        for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) layer.weights(i, j) = dist(rng);
      layers.push_back(std::move(layer));
      in = out;
    };
    for (int width : hidden) add(width);
    add(1);
    return Mlp(std::move(layers));
  }

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  Eigen::Index num_parameters() const {
    Eigen::Index n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
  }

 private:
  std::vector<DenseLayer> layers_;
};

/// Value and spatial derivatives of the network output at one point.
struct JetEval {
  double value = 0.0;
  std::array<double, 2> grad{0.0, 0.0};
  std::array<double, 2> hess_diag{0.0, 0.0};
  double cross = 0.0;

  double laplacian() const { return hess_diag[0] + hess_diag[1]; }
};

/// Gradient of a scalar loss with respect to every network parameter, plus
/// the Robin parameter when the loss depends on it.
struct ParamGrad {
  std::vector<DenseLayer> layers;
  double robin = 0.0;

  static ParamGrad zeros_like(const Mlp& net) {
    ParamGrad g;
    for (const auto& l : net.layers())
      g.layers.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                          Eigen::VectorXd::Zero(l.bias.size())});
    return g;
  }

  bool all_finite() const {
    if (!std::isfinite(robin)) return false;
    for (const auto& l : layers)
      if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }

  double dot(const ParamGrad& other) const {
    double s = robin * other.robin;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      s += layers[l].weights.cwiseProduct(other.layers[l].weights).sum();
      s += layers[l].bias.dot(other.layers[l].bias);
    }
    return s;
  }
};

/// Upstream derivatives dL/d(channel) per point, fed to backward().
struct JetSeeds {
  explicit JetSeeds(Eigen::Index n)
      : value(Eigen::ArrayXd::Zero(n)),
        dx(Eigen::ArrayXd::Zero(n)),
        dy(Eigen::ArrayXd::Zero(n)),
        dxx(Eigen::ArrayXd::Zero(n)),
        dyy(Eigen::ArrayXd::Zero(n)),
        dxy(Eigen::ArrayXd::Zero(n)) {}

  Eigen::ArrayXd value, dx, dy, dxx, dyy, dxy;

  bool all_finite() const {
    return value.allFinite() && dx.allFinite() && dy.allFinite() && dxx.allFinite() &&
           dyy.allFinite() && dxy.allFinite();
  }
};

/// Forward record for a batch of points.
class JetBatch {
 public:
  Eigen::Index size() const { return n_; }
  bool has_cross() const { return channels_ == 6; }

  Eigen::ArrayXd value() const { return channel(kValue); }
  Eigen::ArrayXd dx() const { return channel(kDx); }
  Eigen::ArrayXd dy() const { return channel(kDy); }
  Eigen::ArrayXd dxx() const { return channel(kDxx); }
  Eigen::ArrayXd dyy() const { return channel(kDyy); }
  Eigen::ArrayXd laplacian() const { return channel(kDxx) + channel(kDyy); }
  Eigen::ArrayXd dxy() const {
    if (!has_cross()) throw ConfigError("JetBatch: mixed derivative was not requested");
    return channel(kDxy);
  }

  JetEval at(Eigen::Index j) const {
    JetEval e;
    e.value = output_(kValue * n_ + j);
    e.grad = {output_(kDx * n_ + j), output_(kDy * n_ + j)};
    e.hess_diag = {output_(kDxx * n_ + j), output_(kDyy * n_ + j)};
    e.cross = has_cross() ? output_(kDxy * n_ + j) : 0.0;
    return e;
  }

 private:
  Eigen::ArrayXd channel(int c) const { return output_.segment(c * n_, n_).transpose().array(); }

  Eigen::Index n_ = 0;
  int channels_ = 5;
  std::vector<Eigen::MatrixXd> inputs_;    // input to layer l, all channels
  std::vector<Eigen::MatrixXd> preacts_;   // pre-activation of hidden layer l
  Eigen::RowVectorXd output_;

  friend JetBatch forward_batch(const Mlp&, const Points&, bool);
  friend void backward(const Mlp&, const JetBatch&, const JetSeeds&, ParamGrad&);
};

inline JetBatch forward_batch(const Mlp& net, const Points& points, bool with_cross = false) {
  JetBatch b;
  const Eigen::Index n = points.cols();
  const int nc = with_cross ? 6 : 5;
  b.n_ = n;
  b.channels_ = nc;

  Eigen::MatrixXd input = Eigen::MatrixXd::Zero(2, nc * n);
  input.leftCols(n) = points;
  input.block(0, kDx * n, 1, n).setOnes();
  input.block(1, kDy * n, 1, n).setOnes();
  b.inputs_.push_back(std::move(input));

  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    Eigen::MatrixXd z = layer.weights * b.inputs_.back();
    z.leftCols(n).colwise() += layer.bias;
    if (l + 1 == layers.size()) {
      b.output_ = z.row(0);
      break;
    }
    const Eigen::Index h = z.rows();
    Eigen::MatrixXd a(h, nc * n);
    auto zv = z.leftCols(n).array();
    auto zx = z.middleCols(kDx * n, n).array();
    auto zy = z.middleCols(kDy * n, n).array();
    const Eigen::ArrayXXd t = zv.tanh();
    const Eigen::ArrayXXd d1 = 1.0 - t.square();
    const Eigen::ArrayXXd d2 = -2.0 * t * d1;
    a.leftCols(n) = t.matrix();
    a.middleCols(kDx * n, n) = (d1 * zx).matrix();
    a.middleCols(kDy * n, n) = (d1 * zy).matrix();
    a.middleCols(kDxx * n, n) = (d2 * zx.square() + d1 * z.middleCols(kDxx * n, n).array()).matrix();
    a.middleCols(kDyy * n, n) = (d2 * zy.square() + d1 * z.middleCols(kDyy * n, n).array()).matrix();
    if (with_cross)
      a.middleCols(kDxy * n, n) = (d2 * zx * zy + d1 * z.middleCols(kDxy * n, n).array()).matrix();
    b.preacts_.push_back(std::move(z));
    b.inputs_.push_back(std::move(a));
  }
  return b;
}

/// Accumulates dL/dθ into `grad` given dL/d(output channel) seeds.
inline void backward(const Mlp& net, const JetBatch& b, const JetSeeds& seeds, ParamGrad& grad) {
  const Eigen::Index n = b.n_;
  const int nc = b.channels_;
  if (seeds.value.size() != n) throw ConfigError("backward: seed size mismatch");

  Eigen::MatrixXd gz(1, nc * n);
  gz.block(0, kValue * n, 1, n) = seeds.value.transpose().matrix();
  gz.block(0, kDx * n, 1, n) = seeds.dx.transpose().matrix();
  gz.block(0, kDy * n, 1, n) = seeds.dy.transpose().matrix();
  gz.block(0, kDxx * n, 1, n) = seeds.dxx.transpose().matrix();
  gz.block(0, kDyy * n, 1, n) = seeds.dyy.transpose().matrix();
  if (nc == 6) gz.block(0, kDxy * n, 1, n) = seeds.dxy.transpose().matrix();

  const auto& layers = net.layers();
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Eigen::MatrixXd& a = b.inputs_[l];
    grad.layers[l].weights.noalias() += gz * a.transpose();
    grad.layers[l].bias += gz.leftCols(n).rowwise().sum();
    if (l == 0) break;

    const Eigen::MatrixXd ga = layers[l].weights.transpose() * gz;
    const Eigen::MatrixXd& z = b.preacts_[l - 1];
    const Eigen::Index h = ga.rows();

    auto t = a.leftCols(n).array();
    const Eigen::ArrayXXd d1 = 1.0 - t.square();
    const Eigen::ArrayXXd d2 = -2.0 * t * d1;
    auto zx = z.middleCols(kDx * n, n).array();
    auto zy = z.middleCols(kDy * n, n).array();
    auto gav = ga.leftCols(n).array();
    auto gax = ga.middleCols(kDx * n, n).array();
    auto gay = ga.middleCols(kDy * n, n).array();
    auto gaxx = ga.middleCols(kDxx * n, n).array();
    auto gayy = ga.middleCols(kDyy * n, n).array();

    Eigen::ArrayXXd gd1 = gax * zx + gay * zy + gaxx * z.middleCols(kDxx * n, n).array() +
                          gayy * z.middleCols(kDyy * n, n).array();
    Eigen::ArrayXXd gd2 = gaxx * zx.square() + gayy * zy.square();
    Eigen::ArrayXXd gzx = gax * d1 + 2.0 * gaxx * d2 * zx;
    Eigen::ArrayXXd gzy = gay * d1 + 2.0 * gayy * d2 * zy;

    Eigen::MatrixXd next(h, nc * n);
    if (nc == 6) {
      auto gaxy = ga.middleCols(kDxy * n, n).array();
      gd1 += gaxy * z.middleCols(kDxy * n, n).array();
      gd2 += gaxy * zx * zy;
      gzx += gaxy * d2 * zy;
      gzy += gaxy * d2 * zx;
      next.middleCols(kDxy * n, n) = (gaxy * d1).matrix();
    }
    // d(d1)/dz = d2, d(d2)/dz = -2 d1^2 + 4 t^2 d1
    next.leftCols(n) = (gav * d1 + gd1 * d2 + gd2 * (4.0 * t.square() * d1 - 2.0 * d1.square())).matrix();
    next.middleCols(kDx * n, n) = gzx.matrix();
    next.middleCols(kDy * n, n) = gzy.matrix();
    next.middleCols(kDxx * n, n) = (gaxx * d1).matrix();
    next.middleCols(kDyy * n, n) = (gayy * d1).matrix();
    gz = std::move(next);
  }
}

inline JetEval forward_jet(const Mlp& net, const Vec2& point) {
  Points p(2, 1);
  p.col(0) = point;
  return forward_batch(net, p, true).at(0);
}

struct LossGradient {
  double loss = 0.0;
  ParamGrad grad;
};

/// Evaluates `loss_fn(batch, seeds)` on the jets of `points`; the functor
/// returns the scalar loss and fills dL/d(channel) in `seeds`.
template <class LossFn>
LossGradient loss_backward(const Mlp& net, const Points& points, LossFn&& loss_fn,
                           bool with_cross = false) {
  const JetBatch batch = forward_batch(net, points, with_cross);
  JetSeeds seeds(batch.size());
  LossGradient out;
  out.loss = loss_fn(static_cast<const JetBatch&>(batch), seeds);
  if (!std::isfinite(out.loss)) throw DivergenceError("loss_backward: non-finite loss");
  out.grad = ParamGrad::zeros_like(net);
  backward(net, batch, seeds, out.grad);
  return out;
}

}  // namespace ddpecann
