#include "sinoplace/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sinoplace {

double frobenius_norm(const Grid& g) {
  double acc = 0.0;
  for (double v : g.values()) acc += v * v;
  return std::sqrt(acc);
}

double sum(const Grid& g) {
  double acc = 0.0;
  for (double v : g.values()) acc += v;
  return acc;
}

double relative_l2(const Grid& reference, const Grid& other) {
  if (!reference.same_shape(other)) throw std::invalid_argument("relative_l2: shape mismatch");
  double diff = 0.0;
  double ref = 0.0;
  auto a = reference.values();
  auto b = other.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    ref += a[i] * a[i];
  }
  if (ref == 0.0) return diff == 0.0 ? 0.0 : INFINITY;
  return std::sqrt(diff / ref);
}

Grid shift_rows(const Grid& g, long k) {
  Grid out(g.rows(), g.cols());
  const long n = static_cast<long>(g.rows());
  if (n == 0) return out;
  for (long i = 0; i < n; ++i) {
    const long src = ((i - k) % n + n) % n;
    auto from = g.row(static_cast<std::size_t>(src));
    std::copy(from.begin(), from.end(), out.row(static_cast<std::size_t>(i)).begin());
  }
  return out;
}

}  // namespace sinoplace
