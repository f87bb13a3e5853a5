#pragma once

#include "hiergeo/inference.hpp"
#include "hiergeo/model.hpp"
#include "hiergeo/taxonomy.hpp"
#include "hiergeo/tensor.hpp"
#include "hiergeo/textalign.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace hiergeo {

/// Per-frame scene ids, or a precomputed frame-fraction distribution.
using SceneInfo = std::variant<std::vector<int>, VectorXd>;

struct FeatureRecord {
  std::string id;
  VectorXd features;
  LabelPath labels;
  SceneInfo scene;
};

bool bitwise_equal(const FeatureRecord& a, const FeatureRecord& b);

// ---- binary feature files ("HGFT") ----

std::vector<unsigned char> encode_features(std::span<const FeatureRecord> records);
std::vector<FeatureRecord> decode_features(std::vector<unsigned char> bytes, const std::string& source = "features");
void write_features(const std::filesystem::path& path, std::span<const FeatureRecord> records);
std::vector<FeatureRecord> read_features(const std::filesystem::path& path);

// ---- JSON-lines manifests ----

/// One manifest line: {id, feature_file, feature_index, city, state,
/// country, continent, frame_scenes | soft_scene}.
struct ManifestEntry {
  std::string id;
  std::string feature_file;
  std::uint64_t feature_index = 0;
  ClassRecord names;
  SceneInfo scene;
};

std::vector<ManifestEntry> read_manifest_entries(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries);

/// Resolves labels against `taxonomy` and loads feature vectors from the
/// referenced feature files (relative paths are taken from the manifest's
/// directory).
std::vector<FeatureRecord> load_manifest(const std::filesystem::path& path, const Taxonomy& taxonomy);

// ---- splitting and synthetic data ----

struct Split {
  std::vector<FeatureRecord> train;
  std::vector<FeatureRecord> val;
};

/// Number of training samples for a class of `n` samples: `ratio * n`
/// rounded by largest remainder, clamped so both sides keep at least one.
std::size_t stratified_train_count(std::size_t n, double ratio);

/// Per-city stratified split; both sides keep input order.
Split stratified_split(std::vector<FeatureRecord> records, double ratio, std::uint64_t seed);

struct SynthConfig {
  std::size_t samples_per_city = 64;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;
  Index feature_dim = 384;
  Index scene_dim = 16;
  std::size_t frames_per_video = 15;
};

/// Each city gets a random unit prototype; samples are prototype plus
/// isotropic Gaussian noise. Frame scene ids come from a per-city
/// categorical distribution peaked on a few city-specific scenes.
std::vector<FeatureRecord> generate_synthetic(const Taxonomy& taxonomy, const SynthConfig& config);

// ---- training and evaluation ----

enum class SceneMode { soft, majority };

std::string_view to_string(SceneMode mode);
SceneMode parse_scene_mode(std::string_view text);

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 12;
  double learning_rate = 1e-3;
  AlignmentStrategy alignment = AlignmentStrategy::all_hierarchies;
  SceneMode scene_mode = SceneMode::soft;
  EvalMode eval_mode = EvalMode::codependent;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Scene supervision for a record under the given mode.
VectorXd scene_target(const SceneInfo& scene, SceneMode mode, Index num_scenes);

struct EpochLog {
  std::size_t epoch = 0;
  LossBreakdown mean_loss;
  double train_top1_city = 0.0;
};

nlohmann::json to_json(const EpochLog& log);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

/// Mini-batch Adam on the mean total loss. The model is initialized from
/// `model_config` (whose seed is used as-is); batch order per epoch is derived
/// from `train_config.seed`.
TrainResult train(std::span<const FeatureRecord> records, const Taxonomy& taxonomy, const ModelConfig& model_config,
                  const TrainConfig& train_config, const TextFeatureSource& text = {});

/// Per-hierarchy softmax of the classifier logits.
HierProbs hierarchy_probabilities(const ForwardOutput& output);

struct EvalReport {
  EvalMode mode = EvalMode::codependent;
  std::size_t samples = 0;
  std::size_t k = 5;
  std::array<double, kNumHierarchies> top1{};
  std::array<double, kNumHierarchies> topk{};
  /// Fraction of predicted paths that follow the taxonomy.
  double valid_path_fraction = 0.0;
  std::vector<PredictionReport> predictions;
};

nlohmann::json to_json(const EvalReport& report);

EvalReport evaluate(const Checkpoint& checkpoint, std::span<const FeatureRecord> records, const Taxonomy& taxonomy,
                    EvalMode mode, std::size_t k = 5);

}  // namespace hiergeo
