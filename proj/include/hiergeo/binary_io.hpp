#pragma once

#include "hiergeo/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace hiergeo {

// Little-endian primitive encoding shared by the binary file formats.

template <typename T>
T to_little_endian(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  } else {
    return value;
  }
}

class ByteWriter {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void string_u32(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  const std::vector<unsigned char>& buffer() const { return buf_; }

 private:
  template <typename T>
  void put(T v) {
    v = to_little_endian(v);
    bytes(&v, sizeof v);
  }
  std::vector<unsigned char> buf_;
};

/// Bounds-checked reader; every failure reports the byte offset.
class ByteReader {
 public:
  ByteReader(std::vector<unsigned char> data, std::string source) : data_(std::move(data)), source_(std::move(source)) {}

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == data_.size(); }

  [[noreturn]] void error(const std::string& what) const {
    fail(Errc::format, source_ + ": " + what + " at byte offset " + std::to_string(pos_));
  }

  void expect_magic(const char (&magic)[4]) {
    need(4, "magic");
    if (std::memcmp(data_.data() + pos_, magic, 4) != 0) error("bad magic, expected '" + std::string(magic, 4) + "'");
    pos_ += 4;
  }
  void expect_end() const {
    if (!at_end()) error(std::to_string(data_.size() - pos_) + " trailing bytes");
  }

  std::uint8_t u8() {
    need(1, "u8");
    return data_[pos_++];
  }
  std::uint32_t u32() { return get<std::uint32_t>("u32"); }
  std::uint64_t u64() { return get<std::uint64_t>("u64"); }
  float f32() { return std::bit_cast<float>(get<std::uint32_t>("f32")); }
  double f64() { return std::bit_cast<double>(get<std::uint64_t>("f64")); }
  std::string string_u32() {
    const auto n = u32();
    need(n, "string");
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  /// Checks that `count` items of `width` bytes remain before allocating for them.
  void need_items(std::uint64_t count, std::size_t width, const char* what) {
    if (count > (data_.size() - pos_) / width) error(std::string("truncated ") + what);
  }

 private:
  void need(std::size_t n, const char* what) {
    if (data_.size() - pos_ < n) error(std::string("truncated ") + what);
  }
  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof v);
    pos_ += sizeof v;
    return to_little_endian(v);
  }

  std::vector<unsigned char> data_;
  std::string source_;
  std::size_t pos_ = 0;
};

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), Errc::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(out.good(), Errc::io, "write failed for " + path.string());
}

}  // namespace hiergeo
