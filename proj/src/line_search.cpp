#include "drugmarket/line_search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "drugmarket/errors.hpp"

namespace drugmarket {

ScalarMaximum golden_section_maximize(const std::function<double(double)>& f, double lo, double hi,
                                      double width) {
  if (hi < lo) std::swap(lo, hi);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  ScalarMaximum best{c, fc, 2};
  const auto consider = [&best](double x, double v) {
    if (v > best.value || (v == best.value && x < best.x)) {
      best.x = x;
      best.value = v;
    }
  };
  consider(d, fd);
  while (b - a > width && best.evaluations < 400) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
      consider(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
      consider(d, fd);
    }
    ++best.evaluations;
  }
  return best;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  if (n < 2) throw DomainError("grid needs at least two points");
  std::vector<double> out(n);
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + step * static_cast<double>(i);
  out.back() = hi;
  return out;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo)) throw DomainError("log grid needs 0 < lo < hi");
  std::vector<double> out = linear_grid(std::log(lo), std::log(hi), n);
  for (auto& x : out) x = std::exp(x);
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<std::size_t> grid_local_maxima(const std::vector<double>& values) {
  std::vector<std::size_t> out;
  const std::size_t n = values.size();
  if (n == 0) return out;
  if (n == 1) return {0};
  std::size_t i = 0;
  while (i < n) {
    // Extend over a plateau of equal values starting at i.
    std::size_t j = i;
    while (j + 1 < n && values[j + 1] == values[i]) ++j;
    // NaN neighbours count as lower.
    const bool left_ok = i == 0 || !(values[i - 1] >= values[i]);
    const bool right_ok = j + 1 == n || !(values[j + 1] >= values[i]);
    if (left_ok && right_ok && !std::isnan(values[i])) out.push_back(i);
    i = j + 1;
  }
  return out;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned count = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  pool.reserve(count);
  for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace drugmarket
