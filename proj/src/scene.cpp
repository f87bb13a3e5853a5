#include "hiergeo/scene.hpp"

#include "hiergeo/error.hpp"

#include <map>

namespace hiergeo {

VectorXd soft_scene_label(std::span<const int> frame_scene_ids, Index num_scenes) {
  require(!frame_scene_ids.empty(), Errc::empty_input, "scene label: video has no frames");
  require(num_scenes > 0, Errc::config, "scene label: number of scene classes must be positive");
  VectorXd counts = VectorXd::Zero(num_scenes);
  for (int id : frame_scene_ids) {
    require(id >= 0 && id < num_scenes, Errc::index,
            "scene label: frame scene id " + std::to_string(id) + " outside [0, " + std::to_string(num_scenes) + ")");
    counts(id) += 1.0;
  }
  return counts / static_cast<double>(frame_scene_ids.size());
}

int majority_scene_label(std::span<const int> frame_scene_ids) {
  require(!frame_scene_ids.empty(), Errc::empty_input, "scene label: video has no frames");
  std::map<int, std::size_t> counts;
  for (int id : frame_scene_ids) ++counts[id];
  int best = counts.begin()->first;
  std::size_t best_count = 0;
  for (const auto& [id, n] : counts) {
    if (n > best_count) {
      best = id;
      best_count = n;
    }
  }
  return best;
}

VectorXd majority_scene_distribution(std::span<const int> frame_scene_ids, Index num_scenes) {
  const int id = majority_scene_label(frame_scene_ids);
  require(id >= 0 && id < num_scenes, Errc::index, "scene label: majority id out of range");
  VectorXd out = VectorXd::Zero(num_scenes);
  out(id) = 1.0;
  return out;
}

}  // namespace hiergeo
