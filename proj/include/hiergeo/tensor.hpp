#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace hiergeo {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Vector<double>;
using MatrixXd = Matrix<double>;

template <typename Derived>
std::span<typename Derived::Scalar> as_span(Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

template <typename Derived>
std::span<const typename Derived::Scalar> as_span(const Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

/// A named, flat view of one parameter tensor. Used by the optimizer,
/// serialization and gradient checking, which treat all tensors alike.
template <typename Scalar>
struct ParamSlot {
  std::string name;
  std::span<Scalar> values;
};

template <typename Scalar>
using ParamSlots = std::vector<ParamSlot<Scalar>>;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace hiergeo
