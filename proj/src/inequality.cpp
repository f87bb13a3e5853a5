#include "hiergeo/inequality.hpp"

#include "hiergeo/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hiergeo {

namespace {

std::vector<double> validated_sorted(const ClassCounts& c) {
  require(c.n() >= 1, Errc::empty_input, "class counts: no classes");
  for (double y : c.counts) {
    require(std::isfinite(y) && y >= 0.0, Errc::degenerate_input, "class counts must be finite and non-negative");
  }
  require(c.total() > 0.0, Errc::degenerate_input, "class counts: total is zero");
  std::vector<double> sorted = c.counts;
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

}  // namespace

double ClassCounts::total() const { return std::accumulate(counts.begin(), counts.end(), 0.0); }

double ClassCounts::mean() const { return counts.empty() ? 0.0 : total() / static_cast<double>(counts.size()); }

std::vector<LorenzPoint> lorenz_curve(const ClassCounts& counts) {
  const auto sorted = validated_sorted(counts);
  const double total = counts.total();
  const double n = static_cast<double>(sorted.size());
  std::vector<LorenzPoint> points{{0.0, 0.0}};
  double cumulative = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cumulative += sorted[i];
    points.push_back({static_cast<double>(i + 1) / n, cumulative / total});
  }
  points.back() = {1.0, 1.0};
  return points;
}

double gini(const ClassCounts& counts) {
  const auto sorted = validated_sorted(counts);
  const double n = static_cast<double>(sorted.size());
  double weighted = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) weighted += static_cast<double>(i + 1) * sorted[i];
  const double g = 2.0 * weighted / (n * counts.total()) - (n + 1.0) / n;
  return std::max(0.0, g);
}

double hoover(const ClassCounts& counts) {
  validated_sorted(counts);
  const double mean = counts.mean();
  double deviation = 0.0;
  for (double y : counts.counts) deviation += std::abs(y - mean);
  return 0.5 * deviation / counts.total();
}

}  // namespace hiergeo
