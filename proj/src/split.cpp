#include "hiergeo/error.hpp"
#include "hiergeo/pipeline.hpp"
#include "hiergeo/random.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace hiergeo {

std::size_t stratified_train_count(std::size_t n, double ratio) {
  require(ratio > 0.0 && ratio < 1.0, Errc::config, "split ratio must lie strictly between 0 and 1");
  require(n >= 2, Errc::stratification, "a class needs at least 2 samples to appear on both sides of a split");
  // Largest remainder between the two sides; a tie goes to the training side.
  const double train_quota = ratio * static_cast<double>(n);
  const double val_quota = static_cast<double>(n) - train_quota;
  const double train_floor = std::floor(train_quota);
  const double val_floor = std::floor(val_quota);
  auto train = static_cast<std::size_t>(train_floor);
  const auto val = static_cast<std::size_t>(val_floor);
  if (train + val < n && train_quota - train_floor >= val_quota - val_floor) ++train;
  return std::clamp<std::size_t>(train, 1, n - 1);
}

Split stratified_split(std::vector<FeatureRecord> records, double ratio, std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_city;
  for (std::size_t i = 0; i < records.size(); ++i) by_city[records[i].labels.city()].push_back(i);

  std::vector<char> to_train(records.size(), 0);
  const std::uint64_t split_seed = derive_seed(seed, seed_ordinal::split);
  for (auto& [city, members] : by_city) {
    if (members.size() < 2) {
      fail(Errc::stratification, "city class " + std::to_string(city) + " (sample '" + records[members[0]].id +
                                     "') has a single sample and cannot be stratified");
    }
    const std::size_t n_train = stratified_train_count(members.size(), ratio);
    Rng rng(derive_seed(split_seed, static_cast<std::uint64_t>(city)));
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t j = 0; j < n_train; ++j) to_train[members[j]] = 1;
  }

  Split split;
  for (std::size_t i = 0; i < records.size(); ++i) {
    (to_train[i] ? split.train : split.val).push_back(std::move(records[i]));
  }
  return split;
}

}  // namespace hiergeo
