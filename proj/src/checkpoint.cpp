#include "hiergeo/binary_io.hpp"
#include "hiergeo/error.hpp"
#include "hiergeo/model.hpp"

#include <map>

namespace hiergeo {

namespace {

constexpr char kCheckpointMagic[4] = {'H', 'G', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

// Layout: magic, version u32, config JSON (u32 length + bytes), then one
// section per tensor until end of file: name (u32 length + bytes), element
// count u64, float64 values.
std::vector<unsigned char> encode_checkpoint(const Checkpoint& checkpoint) {
  ByteWriter out;
  out.bytes(kCheckpointMagic, 4);
  out.u32(kCheckpointVersion);
  out.string_u32(to_json(checkpoint.config).dump());
  for (const auto& slot : checkpoint.params.slots()) {
    out.string_u32(slot.name);
    out.u64(slot.values.size());
    for (double v : slot.values) out.f64(v);
  }
  return out.buffer();
}

Checkpoint decode_checkpoint(std::vector<unsigned char> bytes, const std::string& source) {
  ByteReader in(std::move(bytes), source);
  in.expect_magic(kCheckpointMagic);
  const auto version = in.u32();
  if (version != kCheckpointVersion) in.error("unsupported checkpoint version " + std::to_string(version));
  const std::string config_text = in.string_u32();
  nlohmann::json config_json;
  try {
    config_json = nlohmann::json::parse(config_text);
  } catch (const nlohmann::json::exception& e) {
    in.error(std::string("malformed config JSON (") + e.what() + ")");
  }

  Checkpoint ck;
  ck.config = model_config_from_json(config_json);
  ck.params = ModelParams::zeros(ck.config);
  std::map<std::string, std::span<double>> slots;
  for (auto& s : ck.params.slots()) slots.emplace(s.name, s.values);

  while (!in.at_end()) {
    const std::string name = in.string_u32();
    const auto count = in.u64();
    const auto it = slots.find(name);
    if (it == slots.end()) in.error("unknown parameter section '" + name + "'");
    if (count != it->second.size()) {
      in.error("section '" + name + "' has " + std::to_string(count) + " values, config implies " +
               std::to_string(it->second.size()));
    }
    in.need_items(count, 8, "parameter values");
    for (auto& v : it->second) v = in.f64();
    slots.erase(it);
  }
  if (!slots.empty()) in.error("missing parameter section '" + slots.begin()->first + "'");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  write_file_bytes(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file_bytes(path), path.string());
}

}  // namespace hiergeo
