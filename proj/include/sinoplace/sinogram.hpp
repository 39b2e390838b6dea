#pragma once

#include <cstddef>

#include "sinoplace/bev.hpp"
#include "sinoplace/grid.hpp"

namespace sinoplace {

/// Radon transform R(theta, tau) of a BEV image.
///
/// Row i holds theta_i = 2*pi*i / n_theta over the full turn, so a planar
/// rotation acts as a cyclic row shift of period n_theta. Column k holds the
/// line offset tau_k = (k - n_tau/2) * tau_step, with tau_step chosen so the
/// columns tile [-extent*sqrt(2), extent*sqrt(2)): no line through the window
/// is clipped. Each entry is the mean line integral over its tau bin, in
/// meters x occupancy.
class Sinogram {
 public:
  Sinogram() = default;
  Sinogram(std::size_t n_theta, std::size_t n_tau, double tau_step);
  Sinogram(Grid data, double tau_step);

  std::size_t n_theta() const { return data_.rows(); }
  std::size_t n_tau() const { return data_.cols(); }
  double tau_step() const { return tau_step_; }
  double theta(std::size_t i) const;
  double tau(std::size_t k) const;

  const Grid& data() const { return data_; }
  Grid& data() { return data_; }

  friend bool operator==(const Sinogram&, const Sinogram&) = default;

 private:
  Grid data_;
  double tau_step_ = 0.0;
};

// tau_step for an image window of the given extent.
double tau_step_for(double extent, std::size_t n_tau);

// n_theta must be even; both sizes >= 8.
Sinogram radon(const BevImage& img, std::size_t n_theta = 120, std::size_t n_tau = 120);

// round(alpha * n_theta / 2pi) mod n_theta.
long expected_row_shift(double alpha, std::size_t n_theta);

// Offset change of the line at angle theta under a translation (dx, dy).
double expected_tau_shift(double dx, double dy, double theta);

// Row i of the output is row (i - k) mod n_theta of the input.
Sinogram circular_shift_rows(const Sinogram& s, long k);

}  // namespace sinoplace
