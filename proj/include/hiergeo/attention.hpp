#pragma once

#include "hiergeo/error.hpp"
#include "hiergeo/random.hpp"
#include "hiergeo/softmax.hpp"
#include "hiergeo/tensor.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace hiergeo {

// Multihead self-attention over a vector treated as a sequence of scalar
// tokens. Each token x_i is lifted to an embedding e_i = x_i * in_weight +
// in_bias, attended per head with softmax(q k^T / sqrt(head_dim)) v, the heads
// are concatenated and output-projected, and every token embedding is then
// projected back to one scalar. Token embeddings are stored as rows.

template <typename Scalar>
struct AttentionParams {
  Index num_heads = 0;
  Index embed_dim = 0;
  Vector<Scalar> in_weight;          // embed_dim
  Vector<Scalar> in_bias;            // embed_dim
  std::vector<Matrix<Scalar>> query; // num_heads x (embed_dim, head_dim)
  std::vector<Matrix<Scalar>> key;
  std::vector<Matrix<Scalar>> value;
  Matrix<Scalar> out_weight;         // (embed_dim, embed_dim)
  Vector<Scalar> out_bias;           // embed_dim
  Vector<Scalar> scalar_weight;      // embed_dim
  Vector<Scalar> scalar_bias;        // 1

  Index head_dim() const { return num_heads > 0 ? embed_dim / num_heads : 0; }

  static AttentionParams zeros(Index num_heads, Index embed_dim) {
    require(num_heads > 0 && embed_dim > 0, Errc::config, "attention needs positive heads and embedding size");
    require(embed_dim % num_heads == 0, Errc::config,
            "embedding size " + std::to_string(embed_dim) + " is not divisible by " +
                std::to_string(num_heads) + " heads");
    AttentionParams p;
    p.num_heads = num_heads;
    p.embed_dim = embed_dim;
    const Index hd = embed_dim / num_heads;
    p.in_weight = Vector<Scalar>::Zero(embed_dim);
    p.in_bias = Vector<Scalar>::Zero(embed_dim);
    for (Index h = 0; h < num_heads; ++h) {
      p.query.push_back(Matrix<Scalar>::Zero(embed_dim, hd));
      p.key.push_back(Matrix<Scalar>::Zero(embed_dim, hd));
      p.value.push_back(Matrix<Scalar>::Zero(embed_dim, hd));
    }
    p.out_weight = Matrix<Scalar>::Zero(embed_dim, embed_dim);
    p.out_bias = Vector<Scalar>::Zero(embed_dim);
    p.scalar_weight = Vector<Scalar>::Zero(embed_dim);
    p.scalar_bias = Vector<Scalar>::Zero(1);
    return p;
  }

  /// Glorot-initialized weights, zero biases.
  static AttentionParams random(Index num_heads, Index embed_dim, Rng& rng) {
    AttentionParams p = zeros(num_heads, embed_dim);
    const Index hd = p.head_dim();
    glorot_fill(as_span(p.in_weight), 1, embed_dim, rng);
    for (Index h = 0; h < num_heads; ++h) {
      glorot_fill(as_span(p.query[h]), embed_dim, hd, rng);
      glorot_fill(as_span(p.key[h]), embed_dim, hd, rng);
      glorot_fill(as_span(p.value[h]), embed_dim, hd, rng);
    }
    glorot_fill(as_span(p.out_weight), embed_dim, embed_dim, rng);
    glorot_fill(as_span(p.scalar_weight), embed_dim, 1, rng);
    return p;
  }

  void validate() const {
    const auto bad = [](const std::string& what) { fail(Errc::dimension, "attention parameters: " + what); };
    if (num_heads <= 0 || embed_dim <= 0 || embed_dim % num_heads != 0) bad("heads must divide embedding size");
    const Index hd = head_dim();
    if (in_weight.size() != embed_dim || in_bias.size() != embed_dim) bad("input projection size");
    if (static_cast<Index>(query.size()) != num_heads || static_cast<Index>(key.size()) != num_heads ||
        static_cast<Index>(value.size()) != num_heads)
      bad("per-head projection count");
    for (Index h = 0; h < num_heads; ++h) {
      for (const auto* m : {&query[h], &key[h], &value[h]}) {
        if (m->rows() != embed_dim || m->cols() != hd) bad("per-head projection shape");
      }
    }
    if (out_weight.rows() != embed_dim || out_weight.cols() != embed_dim || out_bias.size() != embed_dim)
      bad("output projection shape");
    if (scalar_weight.size() != embed_dim || scalar_bias.size() != 1) bad("scalar projection shape");
  }

  template <typename Visitor>
  void visit(const std::string& prefix, Visitor&& fn) { visit_impl(*this, prefix, fn); }
  template <typename Visitor>
  void visit(const std::string& prefix, Visitor&& fn) const { visit_impl(*this, prefix, fn); }

 private:
  template <typename Self, typename Visitor>
  static void visit_impl(Self& self, const std::string& prefix, Visitor& fn) {
    fn(prefix + "in_weight", self.in_weight);
    fn(prefix + "in_bias", self.in_bias);
    for (Index h = 0; h < self.num_heads; ++h) {
      const std::string tag = std::to_string(h);
      fn(prefix + "query." + tag, self.query[h]);
      fn(prefix + "key." + tag, self.key[h]);
      fn(prefix + "value." + tag, self.value[h]);
    }
    fn(prefix + "out_weight", self.out_weight);
    fn(prefix + "out_bias", self.out_bias);
    fn(prefix + "scalar_weight", self.scalar_weight);
    fn(prefix + "scalar_bias", self.scalar_bias);
  }
};

/// Intermediate values kept for the backward pass.
template <typename Scalar>
struct AttentionTrace {
  Vector<Scalar> tokens;
  Matrix<Scalar> embedded;                 // (d, E)
  std::vector<Matrix<Scalar>> q, k, v;     // (d, head_dim)
  std::vector<Matrix<Scalar>> weights;     // (d, d), row-stochastic
  Matrix<Scalar> concat;                   // (d, E)
  Matrix<Scalar> projected;                // (d, E)
};

template <typename Derived>
Vector<typename Derived::Scalar> multihead_attention(const Eigen::MatrixBase<Derived>& tokens,
                                                     const AttentionParams<typename Derived::Scalar>& params,
                                                     AttentionTrace<typename Derived::Scalar>* trace = nullptr) {
  using Scalar = typename Derived::Scalar;
  params.validate();
  const Index d = tokens.size();
  require(d >= 1, Errc::dimension, "attention over an empty token sequence");
  const Index hd = params.head_dim();
  const Scalar scale = Scalar(1) / std::sqrt(Scalar(hd));

  const Vector<Scalar> x = tokens;
  Matrix<Scalar> embedded = x * params.in_weight.transpose();
  embedded.rowwise() += params.in_bias.transpose();

  Matrix<Scalar> concat(d, params.embed_dim);
  if (trace) {
    trace->q.clear();
    trace->k.clear();
    trace->v.clear();
    trace->weights.clear();
  }
  for (Index h = 0; h < params.num_heads; ++h) {
    Matrix<Scalar> q = embedded * params.query[h];
    Matrix<Scalar> k = embedded * params.key[h];
    Matrix<Scalar> v = embedded * params.value[h];
    Matrix<Scalar> w = softmax_rows((q * k.transpose() * scale).eval());
    concat.middleCols(h * hd, hd).noalias() = w * v;
    if (trace) {
      trace->q.push_back(std::move(q));
      trace->k.push_back(std::move(k));
      trace->v.push_back(std::move(v));
      trace->weights.push_back(std::move(w));
    }
  }
  Matrix<Scalar> projected = concat * params.out_weight;
  projected.rowwise() += params.out_bias.transpose();

  Vector<Scalar> out = projected * params.scalar_weight;
  out.array() += params.scalar_bias(0);

  if (trace) {
    trace->tokens = x;
    trace->embedded = std::move(embedded);
    trace->concat = std::move(concat);
    trace->projected = std::move(projected);
  }
  return out;
}

/// Reverse pass. Accumulates parameter gradients into `grads` (which must have
/// the shapes of `params`) and returns the gradient with respect to the tokens.
template <typename Scalar>
Vector<Scalar> multihead_attention_backward(const Vector<Scalar>& grad_out, const AttentionParams<Scalar>& params,
                                            const AttentionTrace<Scalar>& trace, AttentionParams<Scalar>& grads) {
  const Index d = trace.tokens.size();
  require(grad_out.size() == d, Errc::dimension, "attention backward: gradient size mismatch");
  const Index hd = params.head_dim();
  const Scalar scale = Scalar(1) / std::sqrt(Scalar(hd));

  grads.scalar_weight.noalias() += trace.projected.transpose() * grad_out;
  grads.scalar_bias(0) += grad_out.sum();
  const Matrix<Scalar> d_projected = grad_out * params.scalar_weight.transpose();

  grads.out_weight.noalias() += trace.concat.transpose() * d_projected;
  grads.out_bias.noalias() += d_projected.colwise().sum().transpose();
  const Matrix<Scalar> d_concat = d_projected * params.out_weight.transpose();

  Matrix<Scalar> d_embedded = Matrix<Scalar>::Zero(d, params.embed_dim);
  for (Index h = 0; h < params.num_heads; ++h) {
    const Matrix<Scalar> d_head = d_concat.middleCols(h * hd, hd);
    const Matrix<Scalar>& w = trace.weights[h];
    const Matrix<Scalar> d_weights = d_head * trace.v[h].transpose();
    const Matrix<Scalar> d_v = w.transpose() * d_head;
    const Matrix<Scalar> d_scores = softmax_rows_backward(w, d_weights) * scale;
    const Matrix<Scalar> d_q = d_scores * trace.k[h];
    const Matrix<Scalar> d_k = d_scores.transpose() * trace.q[h];

    grads.query[h].noalias() += trace.embedded.transpose() * d_q;
    grads.key[h].noalias() += trace.embedded.transpose() * d_k;
    grads.value[h].noalias() += trace.embedded.transpose() * d_v;
    d_embedded.noalias() += d_q * params.query[h].transpose();
    d_embedded.noalias() += d_k * params.key[h].transpose();
    d_embedded.noalias() += d_v * params.value[h].transpose();
  }

  grads.in_weight.noalias() += d_embedded.transpose() * trace.tokens;
  grads.in_bias.noalias() += d_embedded.colwise().sum().transpose();
  return d_embedded * params.in_weight;
}

}  // namespace hiergeo
