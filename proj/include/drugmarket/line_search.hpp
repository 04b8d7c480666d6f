#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace drugmarket {

struct ScalarMaximum {
  double x = 0.0;
  double value = 0.0;
  std::size_t evaluations = 0;
};

/// Golden-section search for a maximum of f on [lo, hi], stopped when the
/// bracket is narrower than `width`. Returns the best point evaluated. Ties
/// shrink the bracket toward lo.
ScalarMaximum golden_section_maximize(const std::function<double(double)>& f, double lo, double hi,
                                      double width);

std::vector<double> linear_grid(double lo, double hi, std::size_t n);
std::vector<double> log_grid(double lo, double hi, std::size_t n);

/// Indices i where the forward difference changes sign from + to - (the
/// leftmost index of a plateau). The endpoints count when they dominate their
/// single neighbour.
std::vector<std::size_t> grid_local_maxima(const std::vector<double>& values);

/// Runs body(i) for i in [0, n) on `threads` workers. Each index is handled
/// exactly once and results are expected to be written by index, so the
/// outcome does not depend on scheduling.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace drugmarket
