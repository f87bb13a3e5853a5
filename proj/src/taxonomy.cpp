#include "hiergeo/taxonomy.hpp"

#include "hiergeo/error.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

namespace hiergeo {

namespace {

std::string path_key(const ClassRecord& r, std::size_t h) {
  switch (h) {
    case 0: return r.city;
    case 1: return r.state;
    case 2: return r.country;
    default: return r.continent;
  }
}

}  // namespace

Taxonomy Taxonomy::build(std::span<const ClassRecord> records) {
  require(!records.empty(), Errc::empty_input, "taxonomy: no class records");
  Taxonomy tax;
  std::array<std::unordered_map<std::string, int>, kNumHierarchies> index;
  for (std::size_t h = 0; h + 1 < kNumHierarchies; ++h) tax.parents_[h].clear();

  for (std::size_t line = 0; line < records.size(); ++line) {
    const auto& rec = records[line];
    std::array<int, kNumHierarchies> ids{};
    for (std::size_t h = 0; h < kNumHierarchies; ++h) {
      const std::string name = path_key(rec, h);
      require(!name.empty(), Errc::inconsistency,
              "taxonomy: record " + std::to_string(line) + " has an empty " + std::string(hierarchy_name(h)) +
                  " name");
      auto [it, inserted] = index[h].try_emplace(name, static_cast<int>(tax.names_[h].size()));
      if (inserted) {
        tax.names_[h].push_back(name);
        if (h + 1 < kNumHierarchies) tax.parents_[h].push_back(-1);
      }
      ids[h] = it->second;
    }
    for (std::size_t h = 0; h + 1 < kNumHierarchies; ++h) {
      int& parent = tax.parents_[h][ids[h]];
      if (parent == -1) {
        parent = ids[h + 1];
      } else if (parent != ids[h + 1]) {
        fail(Errc::inconsistency, "taxonomy: " + std::string(hierarchy_name(h)) + " '" + tax.names_[h][ids[h]] +
                                      "' appears under both " + std::string(hierarchy_name(h + 1)) + " '" +
                                      tax.names_[h + 1][parent] + "' and '" + tax.names_[h + 1][ids[h + 1]] + "'");
      }
    }
  }
  return tax;
}

std::array<std::size_t, kNumHierarchies> Taxonomy::sizes() const {
  return {names_[0].size(), names_[1].size(), names_[2].size(), names_[3].size()};
}

std::size_t Taxonomy::total_classes() const {
  std::size_t total = 0;
  for (const auto& n : names_) total += n.size();
  return total;
}

const std::string& Taxonomy::name(std::size_t hierarchy, int id) const {
  require(hierarchy < kNumHierarchies && id >= 0 && static_cast<std::size_t>(id) < names_[hierarchy].size(),
          Errc::index, "taxonomy: class id " + std::to_string(id) + " out of range");
  return names_[hierarchy][id];
}

int Taxonomy::parent(std::size_t hierarchy, int id) const {
  require(hierarchy + 1 < kNumHierarchies, Errc::index, "taxonomy: continents have no parent");
  require(id >= 0 && static_cast<std::size_t>(id) < names_[hierarchy].size(), Errc::index,
          "taxonomy: " + std::string(hierarchy_name(hierarchy)) + " id " + std::to_string(id) + " out of range");
  return parents_[hierarchy][id];
}

int Taxonomy::find(std::size_t hierarchy, const std::string& name) const {
  const auto& list = names_[hierarchy];
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (list[i] == name) return static_cast<int>(i);
  }
  return -1;
}

LabelPath Taxonomy::ancestors_of(int city_id) const {
  LabelPath path;
  path.ids[0] = city_id;
  for (std::size_t h = 0; h + 1 < kNumHierarchies; ++h) path.ids[h + 1] = parent(h, path.ids[h]);
  return path;
}

bool Taxonomy::is_valid(const LabelPath& path) const {
  for (std::size_t h = 0; h < kNumHierarchies; ++h) {
    if (path.ids[h] < 0 || static_cast<std::size_t>(path.ids[h]) >= names_[h].size()) return false;
  }
  for (std::size_t h = 0; h + 1 < kNumHierarchies; ++h) {
    if (parents_[h][path.ids[h]] != path.ids[h + 1]) return false;
  }
  return true;
}

LabelPath Taxonomy::resolve(const ClassRecord& record) const {
  LabelPath path;
  for (std::size_t h = 0; h < kNumHierarchies; ++h) {
    const std::string name = path_key(record, h);
    path.ids[h] = find(h, name);
    require(path.ids[h] >= 0, Errc::lookup,
            "taxonomy: unknown " + std::string(hierarchy_name(h)) + " '" + name + "'");
  }
  require(is_valid(path), Errc::inconsistency,
          "taxonomy: label path for city '" + record.city + "' does not follow the parent map");
  return path;
}

std::vector<ClassRecord> Taxonomy::records() const {
  std::vector<ClassRecord> out;
  for (std::size_t c = 0; c < names_[0].size(); ++c) {
    const LabelPath p = ancestors_of(static_cast<int>(c));
    out.push_back({names_[0][p.ids[0]], names_[1][p.ids[1]], names_[2][p.ids[2]], names_[3][p.ids[3]]});
  }
  return out;
}

std::vector<ClassRecord> parse_class_definitions(const std::string& text) {
  std::vector<ClassRecord> records;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    require(fields.size() == 4, Errc::format,
            "class file line " + std::to_string(lineno) + ": expected 4 tab-separated fields, got " +
                std::to_string(fields.size()));
    records.push_back({fields[0], fields[1], fields[2], fields[3]});
  }
  return records;
}

std::vector<ClassRecord> read_class_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::io, "cannot open class file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_class_definitions(buf.str());
}

void write_class_file(const std::filesystem::path& path, std::span<const ClassRecord> records) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Errc::io, "cannot write class file " + path.string());
  out << "# city\tstate\tcountry\tcontinent\n";
  for (const auto& r : records) out << r.city << '\t' << r.state << '\t' << r.country << '\t' << r.continent << '\n';
}

Taxonomy synthetic_taxonomy(std::size_t cities, std::size_t states, std::size_t countries, std::size_t continents) {
  require(cities >= states && states >= countries && countries >= continents && continents >= 1, Errc::config,
          "synthetic taxonomy: each hierarchy needs at least as many classes as the next-coarser one");
  std::vector<ClassRecord> records;
  for (std::size_t c = 0; c < cities; ++c) {
    const std::size_t s = c * states / cities;
    const std::size_t k = s * countries / states;
    const std::size_t t = k * continents / countries;
    records.push_back({"city_" + std::to_string(c), "state_" + std::to_string(s), "country_" + std::to_string(k),
                       "continent_" + std::to_string(t)});
  }
  return Taxonomy::build(records);
}

}  // namespace hiergeo
