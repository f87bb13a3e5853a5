#pragma once

#include "hiergeo/taxonomy.hpp"
#include "hiergeo/tensor.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace hiergeo {

inline constexpr Index kDefaultTextDim = 512;

enum class AlignmentStrategy { city_only, all_hierarchies };

std::string_view to_string(AlignmentStrategy strategy);
AlignmentStrategy parse_alignment_strategy(std::string_view text);

/// Deterministic stand-in for a text encoder: seeds a generator from the
/// UTF-8 bytes, samples standard normals and L2-normalizes.
VectorXd stub_embed(std::string_view text, Index dim = kDefaultTextDim);

/// Label text to unit-norm embedding.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(Index dim = kDefaultTextDim) : dim_(dim) {}

  Index dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }

  /// Stores the renormalized vector; rejects wrong dimension or zero norm.
  void insert(const std::string& text, const VectorXd& embedding);
  const VectorXd* find(const std::string& text) const;
  const std::map<std::string, VectorXd>& entries() const { return entries_; }

  /// Binary "HGEM" file. Values are stored as little-endian float32.
  static EmbeddingTable load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  Index dim_;
  std::map<std::string, VectorXd> entries_;
};

struct TextFeatureSource {
  const EmbeddingTable* table = nullptr;
  bool stub_fallback = true;
  Index dim = kDefaultTextDim;

  VectorXd embed(const std::string& text) const;
};

/// CityOnly: the city embedding. AllHierarchies: the renormalized mean of
/// the four hierarchy embeddings.
VectorXd compute_text_features(const LabelPath& path, const TextFeatureSource& source, AlignmentStrategy strategy,
                               const Taxonomy& taxonomy);

}  // namespace hiergeo
