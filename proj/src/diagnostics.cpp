#include "hiergeo/diagnostics.hpp"

#include "hiergeo/gradcheck.hpp"
#include "hiergeo/random.hpp"

#include <random>
#include <utility>

namespace hiergeo {

nlohmann::json to_json(const ModelGradCheck& report) {
  return {{"max_relative_error", report.max_relative_error},
          {"worst_tensor", report.worst_tensor},
          {"worst_index", report.worst_index},
          {"points", report.points},
          {"parameters", report.parameters}};
}

namespace {

VectorXd normal_vector(Index n, Rng& rng, double sigma) {
  std::normal_distribution<double> normal(0.0, sigma);
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

}  // namespace

ModelGradCheck check_model_gradients(const ModelConfig& config, std::size_t points, std::size_t batch, double eps,
                                     std::uint64_t seed) {
  config.validate();
  require(points > 0 && batch > 0, Errc::config, "gradient check needs at least one point and one sample");

  ModelGradCheck report;
  report.points = points;
  for (std::size_t p = 0; p < points; ++p) {
    Rng rng(derive_seed(seed, p));
    ModelConfig draw = config;
    draw.seed = rng();
    ModelParams params = init_model(draw);
    // Biases start at zero; move them so every coordinate is exercised away from init.
    for (auto& s : params.slots()) {
      if (s.name.find("bias") == std::string::npos) continue;
      std::normal_distribution<double> normal(0.0, 0.2);
      for (auto& v : s.values) v = normal(rng);
    }

    std::vector<VectorXd> features, scenes, texts;
    std::vector<LabelPath> labels;
    std::uniform_real_distribution<double> positive(0.05, 1.0);
    for (std::size_t i = 0; i < batch; ++i) {
      features.push_back(normal_vector(config.feature_dim, rng, 1.0));
      VectorXd s(config.scene_dim);
      for (Index k = 0; k < s.size(); ++k) s(k) = positive(rng);
      scenes.push_back(s / s.sum());
      texts.push_back(normal_vector(config.text_dim, rng, 1.0));
      LabelPath path;
      for (std::size_t h = 0; h < kNumHierarchies; ++h) {
        std::uniform_int_distribution<int> pick(0, static_cast<int>(config.hierarchy_sizes[h]) - 1);
        path.ids[h] = pick(rng);
      }
      labels.push_back(path);
    }
    std::vector<TrainingSample> samples;
    for (std::size_t i = 0; i < batch; ++i) samples.push_back({&features[i], labels[i], &scenes[i], &texts[i]});

    ModelParams grads = params;
    batch_gradients(samples, params, config.loss_weights, grads);
    const auto loss = [&] {
      double sum = 0.0;
      for (const auto& s : samples)
        sum += total_loss(forward(*s.features, params), s.labels, *s.soft_label, *s.text_target, config.loss_weights)
                   .total;
      return sum / static_cast<double>(samples.size());
    };
    const auto result = gradient_check<double>(loss, params.slots(), std::as_const(grads).slots(), eps);
    report.parameters = result.checked;
    if (p == 0 || result.max_relative_error > report.max_relative_error) {
      report.max_relative_error = result.max_relative_error;
      report.worst_tensor = result.worst_tensor;
      report.worst_index = result.worst_index;
    }
  }
  return report;
}

}  // namespace hiergeo
