#pragma once

#include "hiergeo/error.hpp"
#include "hiergeo/tensor.hpp"

#include <cmath>

namespace hiergeo {

/// Max-shifted softmax; shift-invariant and overflow-free for finite input.
template <typename Derived>
Vector<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  require(logits.size() > 0, Errc::dimension, "softmax of an empty vector");
  const Scalar shift = logits.maxCoeff();
  Vector<Scalar> e = (logits.array() - shift).exp().matrix();
  return e / e.sum();
}

template <typename Derived>
Vector<typename Derived::Scalar> log_softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  require(logits.size() > 0, Errc::dimension, "log_softmax of an empty vector");
  const Scalar shift = logits.maxCoeff();
  const Scalar lse = shift + std::log((logits.array() - shift).exp().sum());
  return (logits.array() - lse).matrix();
}

/// Softmax applied independently to each row.
template <typename Derived>
Matrix<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& scores) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> out(scores.rows(), scores.cols());
  for (Index r = 0; r < scores.rows(); ++r) {
    const Scalar shift = scores.row(r).maxCoeff();
    out.row(r) = (scores.row(r).array() - shift).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

/// Backward of row-wise softmax: given P = softmax_rows(S) and dL/dP, returns dL/dS.
template <typename Scalar>
Matrix<Scalar> softmax_rows_backward(const Matrix<Scalar>& probs, const Matrix<Scalar>& grad_probs) {
  const Vector<Scalar> dots = (probs.array() * grad_probs.array()).rowwise().sum().matrix();
  return (probs.array() * (grad_probs.colwise() - dots).array()).matrix();
}

}  // namespace hiergeo
