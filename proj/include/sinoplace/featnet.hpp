#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sinoplace/fft.hpp"
#include "sinoplace/grid.hpp"
#include "sinoplace/sinogram.hpp"

namespace sinoplace {

/// channels x rows x cols, row-major within each channel plane. Rows are the
/// theta axis, columns the tau axis.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(std::size_t channels, std::size_t rows, std::size_t cols, double fill = 0.0)
      : channels_(channels), rows_(rows), cols_(cols), values_(channels * rows * cols, fill) {}

  static FeatureMap from_grid(const Grid& g);

  std::size_t channels() const { return channels_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t plane_size() const { return rows_ * cols_; }

  double& at(std::size_t c, std::size_t r, std::size_t k) { return values_[(c * rows_ + r) * cols_ + k]; }
  double at(std::size_t c, std::size_t r, std::size_t k) const { return values_[(c * rows_ + r) * cols_ + k]; }

  std::span<double> row(std::size_t c, std::size_t r) { return {values_.data() + (c * rows_ + r) * cols_, cols_}; }
  std::span<const double> row(std::size_t c, std::size_t r) const {
    return {values_.data() + (c * rows_ + r) * cols_, cols_};
  }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool same_shape(const FeatureMap& o) const {
    return channels_ == o.channels_ && rows_ == o.rows_ && cols_ == o.cols_;
  }
  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::size_t channels_ = 0;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Place signature: rows follow theta, columns are the per-head feature axis
/// (frequency bins for dft_mag, channels for pooling).
struct Descriptor {
  Grid data;
  bool normalized = false;

  friend bool operator==(const Descriptor&, const Descriptor&) = default;
};

/// Odd k x k kernels over c_in -> c_out channels. weights are indexed
/// [o][c][a][b] with (a, b) = (h, h), h = k/2, the center tap.
struct ConvKernel {
  std::size_t c_out = 0;
  std::size_t c_in = 0;
  std::size_t k = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  ConvKernel() = default;
  ConvKernel(std::size_t c_out, std::size_t c_in, std::size_t k);

  static ConvKernel delta(std::size_t k = 1);

  double& w(std::size_t o, std::size_t c, std::size_t a, std::size_t b) {
    return weights[((o * c_in + c) * k + a) * k + b];
  }
  double w(std::size_t o, std::size_t c, std::size_t a, std::size_t b) const {
    return weights[((o * c_in + c) * k + a) * k + b];
  }
  void validate() const;  // throws ShapeMismatch / BadConfig

  friend bool operator==(const ConvKernel&, const ConvKernel&) = default;
};

enum class Activation : std::uint8_t { none = 0, relu = 1 };
enum class Aggregation : std::uint8_t { dft_mag = 0, gmp = 1, gap = 2, multi_gap = 3, dft2_mag = 4 };

const char* to_string(Activation a);
const char* to_string(Aggregation a);
Aggregation parse_aggregation(const std::string& name);  // throws BadConfig

struct Layer {
  ConvKernel kernel;
  Activation activation = Activation::relu;

  friend bool operator==(const Layer&, const Layer&) = default;
};

/// Additive skip: the output of layer `from` is added to the (activated)
/// output of layer `to`. Indices are zero-based and from < to.
struct SkipPair {
  std::size_t from = 0;
  std::size_t to = 0;

  friend bool operator==(const SkipPair&, const SkipPair&) = default;
};

struct Network {
  std::vector<Layer> layers;
  std::vector<SkipPair> skips;
  Aggregation aggregation = Aggregation::dft_mag;

  std::size_t in_channels() const { return layers.empty() ? 0 : layers.front().kernel.c_in; }
  std::size_t out_channels() const { return layers.empty() ? 0 : layers.back().kernel.c_out; }
  std::size_t parameter_count() const;
  void validate() const;  // throws BadConfig

  friend bool operator==(const Network&, const Network&) = default;
};

struct LayerSpec {
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  Activation activation = Activation::relu;
};

/// Textual layer stack, one directive per line or ';'-separated:
///   layer <out_channels> <kernel> <relu|none>
///   skip <from> <to>
///   aggregation <dft_mag|gmp|gap|multi_gap|dft2_mag>
struct NetworkConfig {
  std::size_t in_channels = 1;
  std::vector<LayerSpec> layers;
  std::vector<SkipPair> skips;
  Aggregation aggregation = Aggregation::dft_mag;
};

NetworkConfig parse_network_config(const std::string& text);
std::string to_string(const NetworkConfig& cfg);

// 1 -> 8 -> 16 -> 8 -> 4 channels, 5x5 kernels, ReLU between layers, skip
// from the first layer's output to the third's.
NetworkConfig default_network_config();

// Same stack with the last layer widened to `width` channels: the wide
// pooling head.
NetworkConfig widen_last_layer(NetworkConfig cfg, std::size_t width);

/// Weights ~ N(0, 1/fan_in) rounded to float32 precision, biases zero.
Network init_network(const NetworkConfig& cfg, std::uint64_t seed);

// One 1x1 delta layer without activation: forward reduces to the aggregation.
Network identity_network(Aggregation agg = Aggregation::dft_mag);

/// Circular convolution on both axes: out[o][i][j] = bias[o] +
/// sum_{c,a,b} w[o][c][a][b] * in[c][(i - (a-h)) mod M][(j - (b-h)) mod N].
FeatureMap circular_conv2d(const FeatureMap& input, const ConvKernel& kernel);

// Per channel, per row real DFT magnitudes of the n/2 + 1 non-redundant bins,
// summed over channels.
Descriptor dft_magnitude_rows(const FeatureMap& f);

// gmp / gap squeeze tau per (channel, theta): the result is n_theta x channels.
Descriptor aggregate_pool(const FeatureMap& f, Aggregation mode);

// dft_magnitude_rows followed by a DFT magnitude down each column; the
// result has n_theta/2 + 1 rows and is invariant to row shifts.
Descriptor dft2_magnitude(const FeatureMap& f);

/// Intermediates from forward(), sufficient for backward().
struct ForwardTape {
  std::vector<std::size_t> signature;
  Aggregation aggregation = Aggregation::dft_mag;
  std::vector<FeatureMap> layer_inputs;
  std::vector<FeatureMap> pre_activations;
  FeatureMap features;
  // dft heads: c x rows x bins spectra of the feature rows.
  std::vector<fft::Complex> row_spectra;
  // dft2 head: row-magnitude grid and its column spectra.
  Grid row_magnitudes;
  std::vector<fft::Complex> column_spectra;
  // gmp head: argmax column per (channel, row).
  std::vector<std::size_t> argmax;
};

struct ForwardResult {
  Descriptor descriptor;
  ForwardTape tape;
};

struct NetworkGradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  static NetworkGradients zeros_like(const Network& net);
  NetworkGradients& operator+=(const NetworkGradients& other);
  NetworkGradients& operator*=(double s);
};

// Runs the stack on a single-channel sinogram. `aggregation` overrides the
// network's own head when set.
ForwardResult forward(const Network& net, const Sinogram& s);
ForwardResult forward(const Network& net, const Sinogram& s, Aggregation aggregation);

// Feature map only (no aggregation, no tape).
FeatureMap extract_features(const Network& net, const Sinogram& s);

// Exact gradients of sum(grad_out * descriptor) with respect to every weight
// and bias. Throws TapeMismatch if the tape was not produced by `net` or
// grad_out has the wrong shape.
NetworkGradients backward(const Network& net, const ForwardTape& tape, const Grid& grad_out);

}  // namespace sinoplace
