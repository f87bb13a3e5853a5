#pragma once

#include "hiergeo/model.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>

namespace hiergeo {

struct ModelGradCheck {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  std::size_t points = 0;
  std::size_t parameters = 0;
};

nlohmann::json to_json(const ModelGradCheck& report);

/// Finite-difference check of the batch-mean total loss at `points` random
/// parameter/data draws. Each draw uses `batch` random samples with
/// independent labels, soft scene targets and text targets.
ModelGradCheck check_model_gradients(const ModelConfig& config, std::size_t points, std::size_t batch, double eps,
                                     std::uint64_t seed);

}  // namespace hiergeo
