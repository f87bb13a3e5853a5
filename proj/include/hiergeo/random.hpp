#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace hiergeo {

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for a submodule, mixed from the master seed and a fixed ordinal.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t ordinal) {
  return splitmix64(splitmix64(master) ^ splitmix64(ordinal + 0x632be59bd9b4e019ULL));
}

// Fixed ordinals for derive_seed. Never renumber: checkpoints depend on them.
namespace seed_ordinal {
inline constexpr std::uint64_t heads = 1;
inline constexpr std::uint64_t attention = 2;
inline constexpr std::uint64_t scene_ffn = 3;
inline constexpr std::uint64_t text_ffn = 4;
inline constexpr std::uint64_t split = 5;
inline constexpr std::uint64_t synth = 6;
inline constexpr std::uint64_t shuffle = 7;
}  // namespace seed_ordinal

using Rng = std::mt19937_64;

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Glorot-uniform fill: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
template <typename Scalar>
void glorot_fill(std::span<Scalar> values, long fan_in, long fan_out, Rng& rng) {
  const Scalar limit = std::sqrt(Scalar(6) / Scalar(fan_in + fan_out));
  std::uniform_real_distribution<Scalar> dist(-limit, limit);
  for (auto& v : values) v = dist(rng);
}

}  // namespace hiergeo
