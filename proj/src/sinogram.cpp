#include "sinoplace/sinogram.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include "sinoplace/errors.hpp"
#include "sinoplace/parallel.hpp"

namespace sinoplace {

Sinogram::Sinogram(std::size_t n_theta, std::size_t n_tau, double tau_step)
    : data_(n_theta, n_tau), tau_step_(tau_step) {}

Sinogram::Sinogram(Grid data, double tau_step) : data_(std::move(data)), tau_step_(tau_step) {}

double Sinogram::theta(std::size_t i) const {
  return 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_theta());
}

double Sinogram::tau(std::size_t k) const {
  return (static_cast<double>(k) - static_cast<double>(n_tau() / 2)) * tau_step_;
}

double tau_step_for(double extent, std::size_t n_tau) {
  return 2.0 * extent * std::numbers::sqrt2 / static_cast<double>(n_tau);
}

Sinogram radon(const BevImage& img, std::size_t n_theta, std::size_t n_tau) {
  if (n_theta < 8 || n_tau < 8) throw InvalidArgument("radon: n_theta and n_tau must be >= 8");
  if (n_theta % 2 != 0) throw InvalidArgument("radon: n_theta must be even");
  img.spec.validate();

  const double step = tau_step_for(img.spec.extent, n_tau);
  const double pillar = img.spec.pillar();
  // Supersample the rotated canvas so its spacing does not exceed one pillar;
  // each tau bin averages `sub` columns.
  const auto sub = static_cast<std::size_t>(std::ceil(step / pillar - 1e-12));
  const double h = step / static_cast<double>(sub);
  const double half_span = img.spec.extent * std::numbers::sqrt2;
  const auto n_s = static_cast<std::size_t>(std::ceil(2.0 * half_span / h));

  Sinogram sino(n_theta, n_tau, step);
  parallel_for(n_theta, [&](std::size_t i) {
    const double theta = sino.theta(i);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    auto row = sino.data().row(i);
    for (std::size_t k = 0; k < n_tau; ++k) {
      double bin = 0.0;
      for (std::size_t q = 0; q < sub; ++q) {
        const double u = sino.tau(k) - 0.5 * step + (static_cast<double>(q) + 0.5) * h;
        // Column of the image rotated by -theta: the line x cos + y sin = u,
        // walked along its direction (-sin, cos).
        double column = 0.0;
        for (std::size_t j = 0; j < n_s; ++j) {
          const double v = -half_span + (static_cast<double>(j) + 0.5) * h;
          column += bilinear_sample(img, u * c - v * s, u * s + v * c);
        }
        bin += column * h;
      }
      row[k] = bin / static_cast<double>(sub);
    }
  });
  return sino;
}

long expected_row_shift(double alpha, std::size_t n_theta) {
  const auto n = static_cast<long>(n_theta);
  const long k = std::lround(alpha * static_cast<double>(n_theta) / (2.0 * std::numbers::pi));
  return ((k % n) + n) % n;
}

double expected_tau_shift(double dx, double dy, double theta) {
  return dx * std::cos(theta) + dy * std::sin(theta);
}

Sinogram circular_shift_rows(const Sinogram& s, long k) {
  return Sinogram(shift_rows(s.data(), k), s.tau_step());
}

}  // namespace sinoplace
