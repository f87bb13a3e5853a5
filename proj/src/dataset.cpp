#include "hiergeo/binary_io.hpp"
#include "hiergeo/error.hpp"
#include "hiergeo/pipeline.hpp"

#include <cstring>
#include <fstream>
#include <map>

namespace hiergeo {

namespace {

constexpr char kFeatureMagic[4] = {'H', 'G', 'F', 'T'};
constexpr std::uint32_t kFeatureVersion = 1;
constexpr std::uint8_t kSceneFrames = 0;
constexpr std::uint8_t kSceneSoft = 1;

bool same_bits(const VectorXd& a, const VectorXd& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
}

}  // namespace

bool bitwise_equal(const FeatureRecord& a, const FeatureRecord& b) {
  if (a.id != b.id || a.labels != b.labels || !same_bits(a.features, b.features)) return false;
  if (a.scene.index() != b.scene.index()) return false;
  if (const auto* frames = std::get_if<std::vector<int>>(&a.scene)) return *frames == std::get<0>(b.scene);
  return same_bits(std::get<VectorXd>(a.scene), std::get<VectorXd>(b.scene));
}

// Layout: magic, version u32, record count u64, feature dim u32, then per
// record: id (u32 length + bytes), feature values f64, label ids 4 x u32,
// scene kind u8 (0 frames, 1 soft), entry count u32, then u32 frame ids or
// f64 fractions.
std::vector<unsigned char> encode_features(std::span<const FeatureRecord> records) {
  const Index dim = records.empty() ? 0 : records.front().features.size();
  ByteWriter out;
  out.bytes(kFeatureMagic, 4);
  out.u32(kFeatureVersion);
  out.u64(records.size());
  out.u32(static_cast<std::uint32_t>(dim));
  for (const auto& r : records) {
    require(r.features.size() == dim, Errc::dimension,
            "write_features: record '" + r.id + "' has dimension " + std::to_string(r.features.size()) +
                ", expected " + std::to_string(dim));
    out.string_u32(r.id);
    for (Index i = 0; i < dim; ++i) out.f64(r.features(i));
    for (int id : r.labels.ids) {
      require(id >= 0, Errc::index, "write_features: negative label id in record '" + r.id + "'");
      out.u32(static_cast<std::uint32_t>(id));
    }
    if (const auto* frames = std::get_if<std::vector<int>>(&r.scene)) {
      out.u8(kSceneFrames);
      out.u32(static_cast<std::uint32_t>(frames->size()));
      for (int f : *frames) {
        require(f >= 0, Errc::index, "write_features: negative scene id in record '" + r.id + "'");
        out.u32(static_cast<std::uint32_t>(f));
      }
    } else {
      const auto& soft = std::get<VectorXd>(r.scene);
      out.u8(kSceneSoft);
      out.u32(static_cast<std::uint32_t>(soft.size()));
      for (Index i = 0; i < soft.size(); ++i) out.f64(soft(i));
    }
  }
  return out.buffer();
}

std::vector<FeatureRecord> decode_features(std::vector<unsigned char> bytes, const std::string& source) {
  ByteReader in(std::move(bytes), source);
  in.expect_magic(kFeatureMagic);
  const auto version = in.u32();
  if (version != kFeatureVersion) in.error("unsupported feature file version " + std::to_string(version));
  const auto count = in.u64();
  const auto dim = in.u32();
  // Each record takes at least 4 + 8*dim + 16 + 1 + 4 bytes.
  in.need_items(count, 25 + 8 * std::size_t{dim}, "record table");

  std::vector<FeatureRecord> records;
  records.reserve(count);
  for (std::uint64_t r = 0; r < count; ++r) {
    FeatureRecord rec;
    rec.id = in.string_u32();
    rec.features.resize(dim);
    for (std::uint32_t i = 0; i < dim; ++i) rec.features(i) = in.f64();
    for (auto& id : rec.labels.ids) id = static_cast<int>(in.u32());
    const auto kind = in.u8();
    const auto n = in.u32();
    if (kind == kSceneFrames) {
      in.need_items(n, 4, "frame scene ids");
      std::vector<int> frames(n);
      for (auto& f : frames) f = static_cast<int>(in.u32());
      rec.scene = std::move(frames);
    } else if (kind == kSceneSoft) {
      in.need_items(n, 8, "soft scene label");
      VectorXd soft(n);
      for (std::uint32_t i = 0; i < n; ++i) soft(i) = in.f64();
      rec.scene = std::move(soft);
    } else {
      in.error("unknown scene kind " + std::to_string(kind));
    }
    records.push_back(std::move(rec));
  }
  in.expect_end();
  return records;
}

void write_features(const std::filesystem::path& path, std::span<const FeatureRecord> records) {
  write_file_bytes(path, encode_features(records));
}

std::vector<FeatureRecord> read_features(const std::filesystem::path& path) {
  return decode_features(read_file_bytes(path), path.string());
}

std::vector<ManifestEntry> read_manifest_entries(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), Errc::io, "cannot open manifest " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    try {
      const auto j = nlohmann::json::parse(line);
      ManifestEntry e;
      e.id = j.at("id").get<std::string>();
      e.feature_file = j.value("feature_file", std::string{});
      e.feature_index = j.value("feature_index", std::uint64_t{0});
      e.names = {j.at("city").get<std::string>(), j.at("state").get<std::string>(),
                 j.at("country").get<std::string>(), j.at("continent").get<std::string>()};
      const bool has_frames = j.contains("frame_scenes");
      const bool has_soft = j.contains("soft_scene");
      require(has_frames != has_soft, Errc::format, where + ": exactly one of frame_scenes / soft_scene is required");
      if (has_frames) {
        e.scene = j.at("frame_scenes").get<std::vector<int>>();
      } else {
        const auto soft = j.at("soft_scene").get<std::vector<double>>();
        e.scene = VectorXd(Eigen::Map<const VectorXd>(soft.data(), static_cast<Index>(soft.size())));
      }
      entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      fail(Errc::format, where + ": " + ex.what());
    }
  }
  return entries;
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), Errc::io, "cannot write manifest " + path.string());
  for (const auto& e : entries) {
    nlohmann::json j;
    j["id"] = e.id;
    j["feature_file"] = e.feature_file;
    j["feature_index"] = e.feature_index;
    j["city"] = e.names.city;
    j["state"] = e.names.state;
    j["country"] = e.names.country;
    j["continent"] = e.names.continent;
    if (const auto* frames = std::get_if<std::vector<int>>(&e.scene)) {
      j["frame_scenes"] = *frames;
    } else {
      const auto& soft = std::get<VectorXd>(e.scene);
      j["soft_scene"] = std::vector<double>(soft.data(), soft.data() + soft.size());
    }
    out << j.dump() << '\n';
  }
}

std::vector<FeatureRecord> load_manifest(const std::filesystem::path& path, const Taxonomy& taxonomy) {
  const auto entries = read_manifest_entries(path);
  std::map<std::string, std::vector<FeatureRecord>> files;
  std::vector<FeatureRecord> records;
  records.reserve(entries.size());
  for (const auto& e : entries) {
    require(!e.feature_file.empty(), Errc::format, "manifest entry '" + e.id + "' has no feature_file");
    std::filesystem::path file = e.feature_file;
    if (file.is_relative()) file = path.parent_path() / file;
    auto it = files.find(file.string());
    if (it == files.end()) it = files.emplace(file.string(), read_features(file)).first;
    require(e.feature_index < it->second.size(), Errc::index,
            "manifest entry '" + e.id + "': feature_index " + std::to_string(e.feature_index) + " beyond " +
                file.string());
    records.push_back({e.id, it->second[e.feature_index].features, taxonomy.resolve(e.names), e.scene});
  }
  return records;
}

}  // namespace hiergeo
