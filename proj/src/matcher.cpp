#include "sinoplace/matcher.hpp"

#include <cmath>
#include <numbers>

#include "sinoplace/errors.hpp"
#include "sinoplace/fft.hpp"
#include "sinoplace/parallel.hpp"

namespace sinoplace {

namespace {

void require_normalized(const Descriptor& d, const char* which) {
  if (!d.normalized || std::abs(frobenius_norm(d.data) - 1.0) > kNormTolerance) {
    throw NotNormalized(std::string(which) + " descriptor is not normalized");
  }
}

}  // namespace

Descriptor normalize_descriptor(const Descriptor& d) {
  const double norm = frobenius_norm(d.data);
  if (norm == 0.0) throw ZeroDescriptor("cannot normalize an all-zero descriptor");
  Descriptor out{d.data, true};
  for (double& v : out.data.values()) v /= norm;
  return out;
}

Grid normalize_backward(const Descriptor& raw, const Grid& grad_normalized) {
  const double norm = frobenius_norm(raw.data);
  if (norm == 0.0) throw ZeroDescriptor("cannot differentiate normalization at zero");
  if (!raw.data.same_shape(grad_normalized)) throw ShapeMismatch("normalize_backward shape mismatch");
  auto x = raw.data.values();
  auto g = grad_normalized.values();
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dot += g[i] * x[i];
  dot /= norm;  // g . y with y = x / norm
  Grid out(raw.data.rows(), raw.data.cols());
  auto o = out.values();
  for (std::size_t i = 0; i < x.size(); ++i) o[i] = (g[i] - dot * x[i] / norm) / norm;
  return out;
}

MatchResult correlate(const Descriptor& d1, const Descriptor& d2, bool keep_profile) {
  if (!d1.data.same_shape(d2.data) || d1.data.empty()) {
    throw ShapeMismatch("descriptors have shapes " + std::to_string(d1.data.rows()) + "x" +
                        std::to_string(d1.data.cols()) + " and " + std::to_string(d2.data.rows()) +
                        "x" + std::to_string(d2.data.cols()));
  }
  require_normalized(d1, "first");
  require_normalized(d2, "second");

  const std::size_t n = d1.data.rows();
  const std::size_t bins = fft::half_bins(n);
  std::vector<fft::Complex> acc(bins);
  std::vector<fft::Complex> a(bins);
  std::vector<fft::Complex> b(bins);
  std::vector<double> col1(n);
  std::vector<double> col2(n);
  for (std::size_t w = 0; w < d1.data.cols(); ++w) {
    for (std::size_t r = 0; r < n; ++r) {
      col1[r] = d1.data(r, w);
      col2[r] = d2.data(r, w);
    }
    fft::real_forward(col1, a);
    fft::real_forward(col2, b);
    // Cross-correlation theorem: DFT[sum_t x(t) y(t + a)] = conj(X) Y.
    for (std::size_t k = 0; k < bins; ++k) acc[k] += std::conj(a[k]) * b[k];
  }
  std::vector<double> profile(n);
  fft::real_inverse(acc, profile);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (double& v : profile) v *= inv_n;

  MatchResult result;
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (profile[i] > profile[best]) best = i;
  }
  result.score = profile[best];
  result.alpha_bin = static_cast<long>(best);
  result.alpha_hat = 2.0 * std::numbers::pi * static_cast<double>(best) / static_cast<double>(n);
  if (keep_profile) result.profile = std::move(profile);
  return result;
}

std::vector<Correlation> correlation_vector(const Descriptor& query,
                                            std::span<const Descriptor> support) {
  std::vector<Correlation> out(support.size());
  parallel_for(support.size(), [&](std::size_t i) {
    const MatchResult m = correlate(query, support[i], false);
    out[i] = {m.score, m.alpha_bin};
  });
  return out;
}

}  // namespace sinoplace
