#pragma once

#include "hiergeo/error.hpp"
#include "hiergeo/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace hiergeo {

template <typename Scalar>
struct AdamState {
  Scalar lr = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);
  std::int64_t step = 0;
  std::vector<Vector<Scalar>> first_moment;
  std::vector<Vector<Scalar>> second_moment;
};

/// One bias-corrected Adam update, in place. Moments are allocated on the
/// first call and must keep their shapes afterwards.
template <typename Scalar>
void adam_step(std::span<const std::span<Scalar>> params, std::span<const std::span<const Scalar>> grads,
               AdamState<Scalar>& state) {
  require(params.size() == grads.size(), Errc::dimension, "adam: parameter and gradient counts differ");
  if (state.first_moment.empty() && state.step == 0) {
    for (const auto& p : params) {
      state.first_moment.push_back(Vector<Scalar>::Zero(static_cast<Index>(p.size())));
      state.second_moment.push_back(Vector<Scalar>::Zero(static_cast<Index>(p.size())));
    }
  }
  require(state.first_moment.size() == params.size() && state.second_moment.size() == params.size(),
          Errc::dimension, "adam: moment count does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(grads[i].size() == params[i].size() &&
                static_cast<std::size_t>(state.first_moment[i].size()) == params[i].size() &&
                static_cast<std::size_t>(state.second_moment[i].size()) == params[i].size(),
            Errc::dimension, "adam: shape mismatch in tensor " + std::to_string(i));
  }

  ++state.step;
  const Scalar c1 = Scalar(1) - std::pow(state.beta1, Scalar(state.step));
  const Scalar c2 = Scalar(1) - std::pow(state.beta2, Scalar(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Eigen::Map<Vector<Scalar>> p(params[i].data(), static_cast<Index>(params[i].size()));
    Eigen::Map<const Vector<Scalar>> g(grads[i].data(), static_cast<Index>(grads[i].size()));
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    m = state.beta1 * m + (Scalar(1) - state.beta1) * g;
    v = state.beta2 * v + (Scalar(1) - state.beta2) * g.cwiseAbs2();
    p.array() -= state.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state.epsilon);
  }
}

}  // namespace hiergeo
