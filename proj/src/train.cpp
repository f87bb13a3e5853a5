#include "hiergeo/adam.hpp"
#include "hiergeo/error.hpp"
#include "hiergeo/pipeline.hpp"
#include "hiergeo/random.hpp"
#include "hiergeo/scene.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace hiergeo {

std::string_view to_string(SceneMode mode) { return mode == SceneMode::soft ? "soft" : "majority"; }

SceneMode parse_scene_mode(std::string_view text) {
  if (text == "soft") return SceneMode::soft;
  if (text == "majority") return SceneMode::majority;
  fail(Errc::config, "unknown scene-label mode '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
  require(batch_size > 0, Errc::config, "train config: batch_size must be positive");
  require(std::isfinite(learning_rate) && learning_rate > 0.0, Errc::config,
          "train config: learning_rate must be positive");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"alignment", to_string(c.alignment)},
          {"scene_mode", to_string(c.scene_mode)},
          {"eval_mode", to_string(c.eval_mode)},
          {"seed", c.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    if (j.contains("alignment")) c.alignment = parse_alignment_strategy(j.at("alignment").get<std::string>());
    if (j.contains("scene_mode")) c.scene_mode = parse_scene_mode(j.at("scene_mode").get<std::string>());
    if (j.contains("eval_mode")) c.eval_mode = parse_eval_mode(j.at("eval_mode").get<std::string>());
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config, std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const EpochLog& log) {
  return {{"epoch", log.epoch},
          {"loss", log.mean_loss.total},
          {"loss_geo", log.mean_loss.geo},
          {"loss_scene", log.mean_loss.scene},
          {"loss_tla", log.mean_loss.tla},
          {"train_top1_city", log.train_top1_city}};
}

VectorXd scene_target(const SceneInfo& scene, SceneMode mode, Index num_scenes) {
  if (const auto* frames = std::get_if<std::vector<int>>(&scene)) {
    return mode == SceneMode::soft ? soft_scene_label(*frames, num_scenes)
                                   : majority_scene_distribution(*frames, num_scenes);
  }
  const auto& soft = std::get<VectorXd>(scene);
  require(soft.size() == num_scenes, Errc::dimension,
          "soft scene label has " + std::to_string(soft.size()) + " classes, model uses " + std::to_string(num_scenes));
  require((soft.array() >= 0.0).all() && std::abs(soft.sum() - 1.0) < 1e-9, Errc::degenerate_input,
          "soft scene label is not a probability distribution");
  if (mode == SceneMode::soft) return soft;
  Index best = 0;
  soft.maxCoeff(&best);
  VectorXd onehot = VectorXd::Zero(num_scenes);
  onehot(best) = 1.0;
  return onehot;
}

namespace {

void check_compatible(std::span<const FeatureRecord> records, const Taxonomy& taxonomy, const ModelConfig& config) {
  for (std::size_t h = 0; h < kNumHierarchies; ++h) {
    require(static_cast<std::size_t>(config.hierarchy_sizes[h]) == taxonomy.size(h), Errc::config,
            "model has " + std::to_string(config.hierarchy_sizes[h]) + " " + std::string(hierarchy_name(h)) +
                " classes, taxonomy has " + std::to_string(taxonomy.size(h)));
  }
  for (const auto& r : records) {
    require(r.features.size() == config.feature_dim, Errc::dimension,
            "record '" + r.id + "' has feature dimension " + std::to_string(r.features.size()) + ", model expects " +
                std::to_string(config.feature_dim));
    require(taxonomy.is_valid(r.labels), Errc::inconsistency, "record '" + r.id + "' has an invalid label path");
  }
}

double top1_city(std::span<const FeatureRecord> records, const ModelParams& params, const Taxonomy& taxonomy,
                 EvalMode mode) {
  if (records.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& r : records) {
    const auto report = predict(hierarchy_probabilities(forward(r.features, params)), taxonomy, mode);
    if (report.path.city() == r.labels.city()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

}  // namespace

TrainResult train(std::span<const FeatureRecord> records, const Taxonomy& taxonomy, const ModelConfig& model_config,
                  const TrainConfig& train_config, const TextFeatureSource& text) {
  model_config.validate();
  train_config.validate();
  check_compatible(records, taxonomy, model_config);

  TrainResult result;
  result.checkpoint.config = model_config;
  if (result.checkpoint.config.classes.empty()) result.checkpoint.config.classes = taxonomy.records();
  ModelParams& params = result.checkpoint.params;
  params = init_model(model_config);
  if (train_config.epochs == 0) return result;
  require(!records.empty(), Errc::empty_input, "train: no training records");

  TextFeatureSource text_source = text;
  text_source.dim = model_config.text_dim;
  std::map<int, VectorXd> text_cache;  // F_t depends only on the label path, i.e. the city
  std::vector<VectorXd> scene_targets;
  scene_targets.reserve(records.size());
  for (const auto& r : records) {
    scene_targets.push_back(scene_target(r.scene, train_config.scene_mode, model_config.scene_dim));
    if (!text_cache.contains(r.labels.city())) {
      VectorXd ft = compute_text_features(r.labels, text_source, train_config.alignment, taxonomy);
      require(ft.size() == model_config.text_dim, Errc::dimension, "text feature dimension differs from model text_dim");
      text_cache.emplace(r.labels.city(), std::move(ft));
    }
  }
  std::vector<TrainingSample> samples;
  samples.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    samples.push_back({&records[i].features, records[i].labels, &scene_targets[i],
                       &text_cache.at(records[i].labels.city())});
  }

  AdamState<double> adam;
  adam.lr = train_config.learning_rate;
  ModelParams grads = params;
  grads.set_zero();
  const std::uint64_t shuffle_seed = derive_seed(train_config.seed, seed_ordinal::shuffle);

  std::vector<std::size_t> order(samples.size());
  std::vector<TrainingSample> batch;
  for (std::size_t epoch = 0; epoch < train_config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(shuffle_seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);

    LossBreakdown epoch_sum;
    for (std::size_t start = 0, b = 0; start < order.size(); start += train_config.batch_size, ++b) {
      const std::size_t end = std::min(order.size(), start + train_config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(samples[order[i]]);
      const LossBreakdown loss = batch_gradients(batch, params, model_config.loss_weights, grads);
      if (!std::isfinite(loss.total)) {
        std::ostringstream msg;
        msg << "train: non-finite loss at epoch " << epoch << " batch " << b << " (geo " << loss.geo << ", scene "
            << loss.scene << ", tla " << loss.tla << ")";
        fail(Errc::evaluation, msg.str());
      }
      epoch_sum += loss.scaled(static_cast<double>(end - start));

      std::vector<std::span<double>> p;
      std::vector<std::span<const double>> g;
      for (auto& s : params.slots()) p.push_back(s.values);
      for (const auto& s : std::as_const(grads).slots()) g.push_back(s.values);
      adam_step<double>(p, g, adam);
    }
    EpochLog log;
    log.epoch = epoch;
    log.mean_loss = epoch_sum.scaled(1.0 / static_cast<double>(samples.size()));
    log.train_top1_city = top1_city(records, params, taxonomy, train_config.eval_mode);
    result.log.push_back(log);
  }
  return result;
}

}  // namespace hiergeo
