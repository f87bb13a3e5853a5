#pragma once

#include "hiergeo/tensor.hpp"

#include <span>

namespace hiergeo {

inline constexpr Index kDefaultSceneClasses = 16;

/// Fraction of frames assigned to each scene class.
VectorXd soft_scene_label(std::span<const int> frame_scene_ids, Index num_scenes = kDefaultSceneClasses);

/// Most frequent scene id; ties go to the lowest id.
int majority_scene_label(std::span<const int> frame_scene_ids);

/// One-hot distribution at the majority scene.
VectorXd majority_scene_distribution(std::span<const int> frame_scene_ids, Index num_scenes = kDefaultSceneClasses);

}  // namespace hiergeo
