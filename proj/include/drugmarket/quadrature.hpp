#pragma once

#include <cstddef>
#include <functional>

namespace drugmarket {

struct QuadratureOptions {
  double abs_tol = 1e-9;
  double rel_tol = 0.0;
  /// Maximum number of bisections applied to any sub-interval.
  int max_depth = 20;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t intervals = 0;
};

/// Globally adaptive 15-point Gauss-Kronrod integration of f over [a, b].
///
/// The sub-interval with the largest error estimate is bisected until the
/// summed estimate meets max(abs_tol, rel_tol * |value|). Throws NumericError
/// carrying the achieved estimate when an interval would exceed max_depth.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& options = {});

}  // namespace drugmarket
