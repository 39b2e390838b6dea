#include "sinoplace/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace sinoplace::fft {

namespace {

struct Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

// The FFTW planner is not thread-safe; execution with the new-array API is.
// Plans are created once per length and live for the process.
const Plans& plans_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, Plans> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  std::vector<double> real(n);
  std::vector<fftw_complex> spec(half_bins(n));
  const int len = static_cast<int>(n);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  Plans p;
  p.forward = fftw_plan_dft_r2c_1d(len, real.data(), spec.data(), flags);
  p.inverse = fftw_plan_dft_c2r_1d(len, spec.data(), real.data(), flags);
  if (!p.forward || !p.inverse) throw std::runtime_error("fftw planning failed");
  return cache.emplace(n, p).first->second;
}

}  // namespace

void real_forward(std::span<const double> in, std::span<Complex> out) {
  if (in.empty()) return;
  if (out.size() != half_bins(in.size())) throw std::invalid_argument("real_forward: bad output size");
  const Plans& p = plans_for(in.size());
  // r2c does not write to its input.
  fftw_execute_dft_r2c(p.forward, const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void real_inverse(std::span<const Complex> in, std::span<double> out) {
  if (out.empty()) return;
  if (in.size() != half_bins(out.size())) throw std::invalid_argument("real_inverse: bad input size");
  const Plans& p = plans_for(out.size());
  // c2r overwrites its input.
  std::vector<Complex> scratch(in.begin(), in.end());
  fftw_execute_dft_c2r(p.inverse, reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
}

void magnitude_forward(std::span<const double> in, std::span<Complex> spectrum,
                       std::span<double> mag) {
  real_forward(in, spectrum);
  for (std::size_t k = 0; k < spectrum.size(); ++k) mag[k] = std::abs(spectrum[k]);
}

void magnitude_backward(std::span<const double> grad_mag, std::span<const Complex> spectrum,
                        std::span<double> grad_in) {
  // d|z_k|/dx_n = Re(conj(z_k)/|z_k| * e^{-2 pi i k n/N}), so the gradient is
  // Re(sum_k c_k e^{+2 pi i k n/N}) with c_k = g_k z_k/|z_k| over the kept
  // bins. A c2r of c (with interior bins halved to undo the Hermitian
  // doubling) evaluates exactly that sum.
  const std::size_t n = grad_in.size();
  const std::size_t bins = spectrum.size();
  std::vector<Complex> c(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const double m = std::abs(spectrum[k]);
    if (m == 0.0 || grad_mag[k] == 0.0) continue;
    c[k] = grad_mag[k] * spectrum[k] / m;
    const bool self_conjugate = (k == 0) || (n % 2 == 0 && k == n / 2);
    if (!self_conjugate) c[k] *= 0.5;
  }
  std::vector<double> out(n);
  real_inverse(c, out);
  for (std::size_t i = 0; i < n; ++i) grad_in[i] += out[i];
}

}  // namespace sinoplace::fft
