#include "drugmarket/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <string>
#include <vector>

#include "drugmarket/errors.hpp"

namespace drugmarket {
namespace {

// Kronrod 15-point abscissae; even indices (1,3,5) and the centre are the
// embedded 7-point Gauss nodes.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a;
  double b;
  double value;
  double error;
  int depth;
  bool operator<(const Segment& other) const { return error < other.error; }
};

Segment gauss_kronrod15(const std::function<double(double)>& f, double a, double b, int depth) {
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(centre);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double sum = f(centre - dx) + f(centre + dx);
    kronrod += kWgk[j] * sum;
    if (j % 2 == 1) gauss += kWg[j / 2] * sum;
  }
  return {a, b, kronrod * half, std::fabs((kronrod - gauss) * half), depth};
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& options) {
  if (a == b) return {};
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  std::priority_queue<Segment> pending;
  Segment first = gauss_kronrod15(f, a, b, 0);
  double total = first.value;
  double error = first.error;
  pending.push(first);
  while (error > std::max(options.abs_tol, options.rel_tol * std::fabs(total))) {
    Segment worst = pending.top();
    if (worst.depth >= options.max_depth) {
      throw NumericError("quadrature did not converge on [" + std::to_string(a) + ", " +
                             std::to_string(b) + "], error estimate " + std::to_string(error),
                         error);
    }
    pending.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Segment left = gauss_kronrod15(f, worst.a, mid, worst.depth + 1);
    const Segment right = gauss_kronrod15(f, mid, worst.b, worst.depth + 1);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    pending.push(left);
    pending.push(right);
  }
  // Re-sum to shed cancellation drift from the incremental updates.
  double value = 0.0;
  double err = 0.0;
  const std::size_t count = pending.size();
  while (!pending.empty()) {
    value += pending.top().value;
    err += pending.top().error;
    pending.pop();
  }
  return {sign * value, err, count};
}

}  // namespace drugmarket
