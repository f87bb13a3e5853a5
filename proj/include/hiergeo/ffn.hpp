#pragma once

#include "hiergeo/error.hpp"
#include "hiergeo/random.hpp"
#include "hiergeo/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace hiergeo {

enum class Activation { identity, relu };

/// y = act(W x + b), W is (out, in).
template <typename Scalar>
struct DenseLayer {
  Matrix<Scalar> weight;
  Vector<Scalar> bias;
  Activation activation = Activation::identity;

  Index in_dim() const { return weight.cols(); }
  Index out_dim() const { return weight.rows(); }

  static DenseLayer zeros(Index in, Index out, Activation act) {
    return {Matrix<Scalar>::Zero(out, in), Vector<Scalar>::Zero(out), act};
  }
  static DenseLayer random(Index in, Index out, Activation act, Rng& rng) {
    DenseLayer layer = zeros(in, out, act);
    glorot_fill(as_span(layer.weight), in, out, rng);
    return layer;
  }
};

template <typename Scalar>
using Ffn = std::vector<DenseLayer<Scalar>>;

/// ReLU on every hidden layer, identity on the last.
template <typename Scalar>
Ffn<Scalar> make_ffn(const std::vector<Index>& widths, Rng& rng) {
  require(widths.size() >= 2, Errc::config, "a feed-forward network needs at least one layer");
  Ffn<Scalar> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const auto act = i + 2 == widths.size() ? Activation::identity : Activation::relu;
    layers.push_back(DenseLayer<Scalar>::random(widths[i], widths[i + 1], act, rng));
  }
  return layers;
}

template <typename Scalar>
Ffn<Scalar> zeros_like(const Ffn<Scalar>& layers) {
  Ffn<Scalar> out;
  for (const auto& l : layers) out.push_back(DenseLayer<Scalar>::zeros(l.in_dim(), l.out_dim(), l.activation));
  return out;
}

template <typename Scalar>
struct FfnTrace {
  std::vector<Vector<Scalar>> inputs;  // input to each layer
  std::vector<Vector<Scalar>> pre;     // pre-activation of each layer
};

template <typename Derived>
Vector<typename Derived::Scalar> ffn_forward(const Eigen::MatrixBase<Derived>& x,
                                             const Ffn<typename Derived::Scalar>& layers,
                                             FfnTrace<typename Derived::Scalar>* trace = nullptr) {
  using Scalar = typename Derived::Scalar;
  Vector<Scalar> h = x;
  if (trace) {
    trace->inputs.clear();
    trace->pre.clear();
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& layer = layers[i];
    require(layer.in_dim() == h.size() && layer.bias.size() == layer.out_dim(), Errc::dimension,
            "feed-forward layer " + std::to_string(i) + " expects input " + std::to_string(layer.in_dim()) +
                ", got " + std::to_string(h.size()));
    Vector<Scalar> z = layer.weight * h + layer.bias;
    if (trace) {
      trace->inputs.push_back(h);
      trace->pre.push_back(z);
    }
    h = layer.activation == Activation::relu ? Vector<Scalar>(z.cwiseMax(Scalar(0))) : z;
  }
  return h;
}

/// Accumulates into `grads` and returns dL/dx.
template <typename Scalar>
Vector<Scalar> ffn_backward(const Vector<Scalar>& grad_out, const Ffn<Scalar>& layers, const FfnTrace<Scalar>& trace,
                            Ffn<Scalar>& grads) {
  Vector<Scalar> g = grad_out;
  for (std::size_t i = layers.size(); i-- > 0;) {
    if (layers[i].activation == Activation::relu) {
      g = (trace.pre[i].array() > Scalar(0)).select(g, Scalar(0));
    }
    grads[i].weight.noalias() += g * trace.inputs[i].transpose();
    grads[i].bias += g;
    g = layers[i].weight.transpose() * g;
  }
  return g;
}

/// Widths interpolated geometrically from `from` to `to` over `depth` layers.
inline std::vector<Index> geometric_widths(Index from, Index to, Index depth) {
  require(from > 0 && to > 0 && depth > 0, Errc::config, "feed-forward widths and depth must be positive");
  std::vector<Index> widths{from};
  const double ratio = static_cast<double>(to) / static_cast<double>(from);
  for (Index i = 1; i < depth; ++i) {
    const double w = static_cast<double>(from) * std::pow(ratio, static_cast<double>(i) / static_cast<double>(depth));
    widths.push_back(std::max<Index>(1, static_cast<Index>(std::lround(w))));
  }
  widths.push_back(to);
  return widths;
}

}  // namespace hiergeo
