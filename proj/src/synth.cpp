#include "hiergeo/error.hpp"
#include "hiergeo/pipeline.hpp"
#include "hiergeo/random.hpp"

#include <cstdio>
#include <random>

namespace hiergeo {

std::vector<FeatureRecord> generate_synthetic(const Taxonomy& taxonomy, const SynthConfig& config) {
  require(config.samples_per_city >= 2, Errc::stratification,
          "synthetic data needs at least 2 samples per city to allow a stratified split");
  require(config.feature_dim > 0 && config.scene_dim > 0 && config.frames_per_video > 0, Errc::config,
          "synthetic data: dimensions and frame count must be positive");
  require(config.noise_sigma >= 0.0, Errc::config, "synthetic data: noise sigma must be non-negative");

  const std::size_t cities = taxonomy.size(0);
  Rng rng(derive_seed(config.seed, seed_ordinal::synth));
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<VectorXd> prototypes;
  std::vector<std::discrete_distribution<int>> scene_dists;
  std::uniform_int_distribution<int> pick_scene(0, static_cast<int>(config.scene_dim) - 1);
  for (std::size_t c = 0; c < cities; ++c) {
    VectorXd p(config.feature_dim);
    for (Index i = 0; i < p.size(); ++i) p(i) = normal(rng);
    prototypes.push_back(p / p.norm());

    // Two city-specific dominant scenes over a uniform floor.
    std::vector<double> weights(static_cast<std::size_t>(config.scene_dim), 0.1 / static_cast<double>(config.scene_dim));
    weights[static_cast<std::size_t>(pick_scene(rng))] += 0.6;
    weights[static_cast<std::size_t>(pick_scene(rng))] += 0.3;
    scene_dists.emplace_back(weights.begin(), weights.end());
  }

  std::vector<FeatureRecord> records;
  records.reserve(cities * config.samples_per_city);
  char id[32];
  for (std::size_t c = 0; c < cities; ++c) {
    const LabelPath path = taxonomy.ancestors_of(static_cast<int>(c));
    for (std::size_t s = 0; s < config.samples_per_city; ++s) {
      VectorXd x = prototypes[c];
      if (config.noise_sigma > 0.0) {
        for (Index i = 0; i < x.size(); ++i) x(i) += config.noise_sigma * normal(rng);
      }
      std::vector<int> frames(config.frames_per_video);
      for (auto& f : frames) f = scene_dists[c](rng);
      std::snprintf(id, sizeof id, "v%07zu", records.size());
      records.push_back({id, std::move(x), path, std::move(frames)});
    }
  }
  return records;
}

}  // namespace hiergeo
