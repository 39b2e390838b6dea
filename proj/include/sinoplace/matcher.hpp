#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sinoplace/featnet.hpp"

namespace sinoplace {

// Normalized descriptors must have unit Frobenius norm within this tolerance.
// Stored descriptors are float32, hence the slack over exact normalization.
inline constexpr double kNormTolerance = 1e-6;

struct MatchResult {
  double score = 0.0;
  long alpha_bin = 0;
  double alpha_hat = 0.0;  // radians, alpha_bin * 2pi / n_theta
  std::vector<double> profile;
};

// Throws ZeroDescriptor for an all-zero input.
Descriptor normalize_descriptor(const Descriptor& d);

// Gradient of a loss through normalize_descriptor: given the raw descriptor
// and dL/d(normalized), returns dL/d(raw).
Grid normalize_backward(const Descriptor& raw, const Grid& grad_normalized);

/// Circular cross-correlation over theta:
///   profile[a] = sum_theta sum_omega d1(theta, omega) * d2(theta + a, omega)
/// evaluated for every shift a by per-column FFTs. If d2 is d1 with its rows
/// shifted by k (d2 = shift_rows(d1, k)) the peak sits at a = k. Ties resolve
/// to the smallest bin. Both inputs must be normalized and equally shaped.
MatchResult correlate(const Descriptor& d1, const Descriptor& d2, bool keep_profile = true);

struct Correlation {
  double score = 0.0;
  long alpha_bin = 0;
};

// Element i is correlate(query, support[i]).
std::vector<Correlation> correlation_vector(const Descriptor& query,
                                            std::span<const Descriptor> support);

}  // namespace sinoplace
