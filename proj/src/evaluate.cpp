#include "hiergeo/error.hpp"
#include "hiergeo/pipeline.hpp"
#include "hiergeo/softmax.hpp"

namespace hiergeo {

HierProbs hierarchy_probabilities(const ForwardOutput& output) {
  HierProbs probs;
  for (std::size_t h = 0; h < kNumHierarchies; ++h) probs[h] = softmax(output.logits[h]);
  return probs;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json top1;
  nlohmann::json topk;
  for (std::size_t h = 0; h < kNumHierarchies; ++h) {
    top1[std::string(hierarchy_name(h))] = report.top1[h];
    topk[std::string(hierarchy_name(h))] = report.topk[h];
  }
  return {{"mode", to_string(report.mode)},
          {"samples", report.samples},
          {"k", report.k},
          {"top1", top1},
          {"top" + std::to_string(report.k), topk},
          {"valid_path_fraction", report.valid_path_fraction}};
}

EvalReport evaluate(const Checkpoint& checkpoint, std::span<const FeatureRecord> records, const Taxonomy& taxonomy,
                    EvalMode mode, std::size_t k) {
  const auto& config = checkpoint.config;
  for (std::size_t h = 0; h < kNumHierarchies; ++h) {
    require(static_cast<std::size_t>(config.hierarchy_sizes[h]) == taxonomy.size(h), Errc::config,
            "checkpoint has " + std::to_string(config.hierarchy_sizes[h]) + " " + std::string(hierarchy_name(h)) +
                " classes, taxonomy has " + std::to_string(taxonomy.size(h)));
  }
  if (!config.classes.empty()) {
    require(config.classes == taxonomy.records(), Errc::config, "checkpoint class list differs from the taxonomy");
  }
  require(k >= 1, Errc::config, "evaluate: k must be at least 1");

  EvalReport report;
  report.mode = mode;
  report.k = k;
  report.samples = records.size();
  std::vector<LabelPath> truths;
  std::size_t valid = 0;
  for (const auto& r : records) {
    require(r.features.size() == config.feature_dim, Errc::dimension,
            "record '" + r.id + "' has feature dimension " + std::to_string(r.features.size()));
    auto prediction = predict(hierarchy_probabilities(forward(r.features, checkpoint.params)), taxonomy, mode);
    if (taxonomy.is_valid(prediction.path)) ++valid;
    report.predictions.push_back(std::move(prediction));
    truths.push_back(r.labels);
  }
  for (std::size_t h = 0; h < kNumHierarchies; ++h) {
    report.top1[h] = topk_accuracy(report.predictions, truths, 1, h);
    report.topk[h] = topk_accuracy(report.predictions, truths, k, h);
  }
  report.valid_path_fraction = records.empty() ? 0.0 : static_cast<double>(valid) / static_cast<double>(records.size());
  return report;
}

}  // namespace hiergeo
