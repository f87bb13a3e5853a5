#include "hiergeo/textalign.hpp"

#include "hiergeo/binary_io.hpp"
#include "hiergeo/error.hpp"
#include "hiergeo/random.hpp"

#include <fstream>
#include <random>

namespace hiergeo {

namespace {

constexpr char kTableMagic[4] = {'H', 'G', 'E', 'M'};
constexpr std::uint32_t kTableVersion = 1;

VectorXd normalized(const VectorXd& v, const std::string& what) {
  const double norm = v.norm();
  require(std::isfinite(norm) && norm > 0.0, Errc::degenerate_input, what + ": zero or non-finite norm");
  return v / norm;
}

}  // namespace

std::string_view to_string(AlignmentStrategy strategy) {
  return strategy == AlignmentStrategy::city_only ? "city_only" : "all_hierarchies";
}

AlignmentStrategy parse_alignment_strategy(std::string_view text) {
  if (text == "city_only" || text == "city") return AlignmentStrategy::city_only;
  if (text == "all_hierarchies" || text == "all") return AlignmentStrategy::all_hierarchies;
  fail(Errc::config, "unknown alignment strategy '" + std::string(text) + "'");
}

VectorXd stub_embed(std::string_view text, Index dim) {
  require(!text.empty(), Errc::empty_input, "stub_embed: empty text");
  require(dim > 0, Errc::config, "stub_embed: dimension must be positive");
  Rng rng(splitmix64(fnv1a64(text)));
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd v(dim);
  for (Index i = 0; i < dim; ++i) v(i) = normal(rng);
  return normalized(v, "stub_embed");
}

void EmbeddingTable::insert(const std::string& text, const VectorXd& embedding) {
  require(embedding.size() == dim_, Errc::dimension,
          "embedding for '" + text + "' has dimension " + std::to_string(embedding.size()) + ", table uses " +
              std::to_string(dim_));
  entries_[text] = normalized(embedding, "embedding for '" + text + "'");
}

const VectorXd* EmbeddingTable::find(const std::string& text) const {
  const auto it = entries_.find(text);
  return it == entries_.end() ? nullptr : &it->second;
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  ByteReader in(read_file_bytes(path), path.string());
  in.expect_magic(kTableMagic);
  const auto version = in.u32();
  require(version == kTableVersion, Errc::format,
          path.string() + ": unsupported embedding table version " + std::to_string(version));
  const auto count = in.u64();
  const auto dim = in.u32();
  require(dim > 0, Errc::format, path.string() + ": embedding dimension is zero");
  EmbeddingTable table(dim);
  for (std::uint64_t e = 0; e < count; ++e) {
    const std::string text = in.string_u32();
    VectorXd v(dim);
    for (std::uint32_t i = 0; i < dim; ++i) v(i) = static_cast<double>(in.f32());
    table.insert(text, v);
  }
  in.expect_end();
  return table;
}

void EmbeddingTable::save(const std::filesystem::path& path) const {
  ByteWriter out;
  out.bytes(kTableMagic, 4);
  out.u32(kTableVersion);
  out.u64(entries_.size());
  out.u32(static_cast<std::uint32_t>(dim_));
  for (const auto& [text, v] : entries_) {
    out.string_u32(text);
    for (Index i = 0; i < dim_; ++i) out.f32(static_cast<float>(v(i)));
  }
  write_file_bytes(path, out.buffer());
}

VectorXd TextFeatureSource::embed(const std::string& text) const {
  if (table != nullptr) {
    if (const VectorXd* v = table->find(text)) return *v;
  }
  require(stub_fallback, Errc::lookup, "no text embedding for label '" + text + "'");
  return stub_embed(text, table != nullptr ? table->dim() : dim);
}

VectorXd compute_text_features(const LabelPath& path, const TextFeatureSource& source, AlignmentStrategy strategy,
                               const Taxonomy& taxonomy) {
  if (strategy == AlignmentStrategy::city_only) return source.embed(taxonomy.name(0, path.city()));
  VectorXd sum = source.embed(taxonomy.name(0, path.ids[0]));
  for (std::size_t h = 1; h < kNumHierarchies; ++h) {
    const VectorXd e = source.embed(taxonomy.name(h, path.ids[h]));
    require(e.size() == sum.size(), Errc::dimension, "text embeddings of differing dimension");
    sum += e;
  }
  return normalized(sum / static_cast<double>(kNumHierarchies), "mean text feature");
}

}  // namespace hiergeo
