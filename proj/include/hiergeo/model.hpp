#pragma once

#include "hiergeo/attention.hpp"
#include "hiergeo/ffn.hpp"
#include "hiergeo/taxonomy.hpp"
#include "hiergeo/tensor.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace hiergeo {

struct LossWeights {
  double geo = 1.0;
  double scene = 1.0;
  double tla = 1.0;

  bool operator==(const LossWeights&) const = default;
};

struct ModelConfig {
  Index feature_dim = 384;
  std::array<Index, kNumHierarchies> hierarchy_sizes{};
  Index scene_dim = 16;
  Index text_dim = 512;
  Index num_heads = 2;
  Index token_embed_dim = 6;
  Index scene_depth = 6;
  Index text_depth = 3;
  std::uint64_t seed = 0;
  LossWeights loss_weights;
  /// Optional class list, so a checkpoint can be evaluated without a
  /// separate class file. Empty when not recorded.
  std::vector<ClassRecord> classes;

  /// d = d1 + d2 + d3 + d4, the length of the concatenated logit vector.
  Index joint_dim() const;
  void validate() const;

  /// Default dimensions with hierarchy sizes (and classes) taken from `taxonomy`.
  static ModelConfig for_taxonomy(const Taxonomy& taxonomy);

  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& config);
/// Missing keys keep their defaults.
ModelConfig model_config_from_json(const nlohmann::json& j);

/// All learnable weights of the head.
struct ModelParams {
  std::array<DenseLayer<double>, kNumHierarchies> heads;
  AttentionParams<double> attention;
  Ffn<double> scene_ffn;
  Ffn<double> text_ffn;

  static ModelParams zeros(const ModelConfig& config);

  /// Flat views of every tensor in a fixed order with stable names.
  ParamSlots<double> slots();
  ParamSlots<const double> slots() const;
  std::size_t parameter_count() const;
  void set_zero();
};

ModelParams init_model(const ModelConfig& config);

struct ForwardOutput {
  std::array<VectorXd, kNumHierarchies> logits;  // PV_H1..PV_H4
  VectorXd joint;                                // PV
  VectorXd attended;                             // PV'
  VectorXd scene_logits;                         // PV'_s
  VectorXd text_vector;                          // PV'_t
};

struct ForwardTrace {
  VectorXd features;
  AttentionTrace<double> attention;
  FfnTrace<double> scene;
  FfnTrace<double> text;
};

ForwardOutput forward(const VectorXd& features, const ModelParams& params, ForwardTrace* trace = nullptr);

/// Sum over hierarchies of -log softmax(PV_H)[label].
double loss_geo(const ForwardOutput& output, const LabelPath& labels);
/// -sum_j s_j log softmax(logits)_j.
double loss_scene(const VectorXd& scene_logits, const VectorXd& soft_label);
/// Negative cosine similarity.
double loss_tla(const VectorXd& text_vector, const VectorXd& text_target);

struct LossBreakdown {
  double geo = 0.0;
  double scene = 0.0;
  double tla = 0.0;
  double total = 0.0;

  LossBreakdown& operator+=(const LossBreakdown& o) {
    geo += o.geo;
    scene += o.scene;
    tla += o.tla;
    total += o.total;
    return *this;
  }
  LossBreakdown scaled(double s) const { return {geo * s, scene * s, tla * s, total * s}; }
};

LossBreakdown total_loss(const ForwardOutput& output, const LabelPath& labels, const VectorXd& soft_label,
                         const VectorXd& text_target, const LossWeights& weights = {});

/// Supervision for one sample, with scene and text targets already resolved.
struct TrainingSample {
  const VectorXd* features = nullptr;
  LabelPath labels;
  const VectorXd* soft_label = nullptr;
  const VectorXd* text_target = nullptr;
};

/// Loss of one sample; adds `scale` times its parameter gradient to `grads`.
LossBreakdown accumulate_gradients(const TrainingSample& sample, const ModelParams& params, const LossWeights& weights,
                                   double scale, ModelParams& grads);

/// Mean loss over the batch; `grads` is overwritten with the mean gradient.
LossBreakdown batch_gradients(std::span<const TrainingSample> batch, const ModelParams& params,
                              const LossWeights& weights, ModelParams& grads);

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::vector<unsigned char> encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::vector<unsigned char> bytes, const std::string& source = "checkpoint");

}  // namespace hiergeo
