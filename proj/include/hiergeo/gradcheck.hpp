#pragma once

#include "hiergeo/error.hpp"
#include "hiergeo/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

namespace hiergeo {

template <typename Scalar>
struct GradCheckResult {
  Scalar max_relative_error = 0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

/// Compares analytic gradients against central differences.
///
/// `params` are perturbed in place (and restored); `loss` re-evaluates the
/// objective from their current values. Relative error per coordinate is
/// |analytic - numeric| / max(1, |analytic|, |numeric|).
template <typename Scalar, typename LossFn>
GradCheckResult<Scalar> gradient_check(LossFn&& loss, const ParamSlots<Scalar>& params,
                                       const ParamSlots<const Scalar>& analytic, Scalar eps) {
  require(eps > Scalar(0), Errc::config, "gradient check step must be positive");
  require(params.size() == analytic.size(), Errc::dimension, "gradient check: tensor count mismatch");
  const auto evaluate = [&] {
    const Scalar value = loss();
    require(std::isfinite(value), Errc::evaluation, "gradient check: loss is not finite");
    return value;
  };
  evaluate();

  GradCheckResult<Scalar> result;
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto values = params[t].values;
    require(values.size() == analytic[t].values.size(), Errc::dimension,
            "gradient check: shape mismatch in " + params[t].name);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const Scalar saved = values[i];
      values[i] = saved + eps;
      const Scalar up = evaluate();
      values[i] = saved - eps;
      const Scalar down = evaluate();
      values[i] = saved;
      const Scalar numeric = (up - down) / (Scalar(2) * eps);
      const Scalar exact = analytic[t].values[i];
      const Scalar err =
          std::abs(exact - numeric) / std::max({Scalar(1), std::abs(exact), std::abs(numeric)});
      if (result.checked == 0 || err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_tensor = params[t].name;
        result.worst_index = i;
      }
      ++result.checked;
    }
  }
  return result;
}

}  // namespace hiergeo
