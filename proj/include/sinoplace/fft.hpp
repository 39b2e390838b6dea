#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace sinoplace::fft {

using Complex = std::complex<double>;

// Number of non-redundant bins of a length-n real DFT.
constexpr std::size_t half_bins(std::size_t n) { return n / 2 + 1; }

// out[k] = sum_n in[n] exp(-2 pi i k n / N), k in [0, N/2]. out.size() must be
// half_bins(in.size()).
void real_forward(std::span<const double> in, std::span<Complex> out);

// Inverse of real_forward without the 1/N factor: out[n] = sum over the full
// Hermitian-completed spectrum. Imaginary parts of DC and Nyquist are ignored.
void real_inverse(std::span<const Complex> in, std::span<double> out);

// mag[k] = |DFT(in)[k]| for the half spectrum; the complex spectrum is written
// to `spectrum` for a later backward pass.
void magnitude_forward(std::span<const double> in, std::span<Complex> spectrum,
                       std::span<double> mag);

// Accumulates d(sum_k grad_mag[k] * mag[k]) / d in into grad_in. Bins with
// |z| = 0 contribute nothing (subgradient 0).
void magnitude_backward(std::span<const double> grad_mag, std::span<const Complex> spectrum,
                        std::span<double> grad_in);

}  // namespace sinoplace::fft
