#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hiergeo {

inline constexpr std::size_t kNumHierarchies = 4;

enum class Hierarchy : std::size_t { city = 0, state = 1, country = 2, continent = 3 };

constexpr std::string_view hierarchy_name(std::size_t h) {
  constexpr std::array<std::string_view, kNumHierarchies> names{"city", "state", "country", "continent"};
  return names[h];
}

/// One line of a class-definition file.
struct ClassRecord {
  std::string city;
  std::string state;
  std::string country;
  std::string continent;

  bool operator==(const ClassRecord&) const = default;
};

/// Dense class ids, one per hierarchy, forming an ancestor chain.
struct LabelPath {
  std::array<int, kNumHierarchies> ids{};

  int city() const { return ids[0]; }
  int state() const { return ids[1]; }
  int country() const { return ids[2]; }
  int continent() const { return ids[3]; }

  bool operator==(const LabelPath&) const = default;
};

/// The four-level label space. Immutable once built.
class Taxonomy {
 public:
  Taxonomy() = default;

  /// Deduplicates classes in first-appearance order and validates the
  /// single-parent structure: a name listed under two different parents is
  /// an inconsistency error.
  static Taxonomy build(std::span<const ClassRecord> records);

  std::size_t size(std::size_t hierarchy) const { return names_[hierarchy].size(); }
  std::array<std::size_t, kNumHierarchies> sizes() const;
  std::size_t total_classes() const;

  const std::string& name(std::size_t hierarchy, int id) const;
  const std::vector<std::string>& names(std::size_t hierarchy) const { return names_[hierarchy]; }

  /// Parent of `id` in the next-coarser hierarchy; `hierarchy` must be < 3.
  int parent(std::size_t hierarchy, int id) const;

  /// Id of `name` in `hierarchy`, or -1.
  int find(std::size_t hierarchy, const std::string& name) const;

  LabelPath ancestors_of(int city_id) const;
  bool is_valid(const LabelPath& path) const;

  /// Resolves a name record to ids; throws lookup/inconsistency errors.
  LabelPath resolve(const ClassRecord& record) const;

  /// One record per city, in id order.
  std::vector<ClassRecord> records() const;

 private:
  std::array<std::vector<std::string>, kNumHierarchies> names_;
  std::array<std::vector<int>, kNumHierarchies - 1> parents_;
};

inline LabelPath ancestors_of(int city_id, const Taxonomy& taxonomy) { return taxonomy.ancestors_of(city_id); }

/// Reads a tab-separated class-definition file (city, state, country,
/// continent per line; '#' lines and blank lines are skipped).
std::vector<ClassRecord> read_class_file(const std::filesystem::path& path);
std::vector<ClassRecord> parse_class_definitions(const std::string& text);
void write_class_file(const std::filesystem::path& path, std::span<const ClassRecord> records);

/// A balanced synthetic taxonomy: city i sits in state i*S/C, state j in
/// country j*K/S, country k in continent k*T/K.
Taxonomy synthetic_taxonomy(std::size_t cities, std::size_t states, std::size_t countries, std::size_t continents);

}  // namespace hiergeo
