#pragma once

#include <span>
#include <utility>
#include <vector>

namespace hiergeo {

/// Per-class sample counts y_1..y_n.
struct ClassCounts {
  std::vector<double> counts;

  std::size_t n() const { return counts.size(); }
  double total() const;
  double mean() const;
};

struct LorenzPoint {
  double x = 0.0;
  double y = 0.0;
};

/// Classes sorted by ascending count; point i is (i/n, cumulative share).
/// Starts at (0,0) and ends at (1,1).
std::vector<LorenzPoint> lorenz_curve(const ClassCounts& counts);

/// G = 2 sum_i i*y_i / (n sum y) - (n+1)/n over ascending-sorted counts.
double gini(const ClassCounts& counts);

/// H = 1/2 sum |y_i - mean| / sum y.
double hoover(const ClassCounts& counts);

}  // namespace hiergeo
