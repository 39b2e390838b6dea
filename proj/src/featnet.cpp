#include "sinoplace/featnet.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "sinoplace/errors.hpp"

namespace sinoplace {

namespace {

std::size_t wrap(long v, std::size_t n) {
  const long m = static_cast<long>(n);
  return static_cast<std::size_t>(((v % m) + m) % m);
}

// out[j] += w * in[(j - shift) mod n]
void axpy_circular(double* out, const double* in, std::size_t n, double w, long shift) {
  const std::size_t s = wrap(shift, n);
  for (std::size_t j = 0; j < s; ++j) out[j] += w * in[j + n - s];
  for (std::size_t j = s; j < n; ++j) out[j] += w * in[j - s];
}

// sum_j g[j] * in[(j - shift) mod n]
double dot_circular(const double* g, const double* in, std::size_t n, long shift) {
  const std::size_t s = wrap(shift, n);
  double acc = 0.0;
  for (std::size_t j = 0; j < s; ++j) acc += g[j] * in[j + n - s];
  for (std::size_t j = s; j < n; ++j) acc += g[j] * in[j - s];
  return acc;
}

std::vector<std::size_t> signature_of(const Network& net, const FeatureMap& input, Aggregation agg) {
  std::vector<std::size_t> sig{input.channels(), input.rows(), input.cols(),
                               static_cast<std::size_t>(agg)};
  for (const Layer& l : net.layers) {
    sig.insert(sig.end(), {l.kernel.c_out, l.kernel.c_in, l.kernel.k,
                           static_cast<std::size_t>(l.activation)});
  }
  for (const SkipPair& s : net.skips) sig.insert(sig.end(), {s.from, s.to});
  return sig;
}

// Gradient of a dft-magnitude-rows descriptor back onto the feature map.
void dft_rows_backward(const FeatureMap& f, std::span<const fft::Complex> spectra,
                       const Grid& grad, FeatureMap& grad_f) {
  const std::size_t bins = fft::half_bins(f.cols());
  for (std::size_t c = 0; c < f.channels(); ++c) {
    for (std::size_t r = 0; r < f.rows(); ++r) {
      fft::magnitude_backward(grad.row(r), spectra.subspan((c * f.rows() + r) * bins, bins),
                              grad_f.row(c, r));
    }
  }
}

Descriptor dft_rows_forward(const FeatureMap& f, std::vector<fft::Complex>* spectra_out) {
  const std::size_t bins = fft::half_bins(f.cols());
  Descriptor d{Grid(f.rows(), bins), false};
  std::vector<fft::Complex> spectra(f.channels() * f.rows() * bins);
  std::vector<double> mag(bins);
  for (std::size_t c = 0; c < f.channels(); ++c) {
    for (std::size_t r = 0; r < f.rows(); ++r) {
      auto spec = std::span(spectra).subspan((c * f.rows() + r) * bins, bins);
      fft::magnitude_forward(f.row(c, r), spec, mag);
      auto out = d.data.row(r);
      for (std::size_t k = 0; k < bins; ++k) out[k] += mag[k];
    }
  }
  if (spectra_out) *spectra_out = std::move(spectra);
  return d;
}

// Column-wise DFT magnitude of a grid: rows/2 + 1 output rows.
Grid column_dft_magnitude(const Grid& m, std::vector<fft::Complex>* spectra_out) {
  const std::size_t n = m.rows();
  const std::size_t bins = fft::half_bins(n);
  Grid out(bins, m.cols());
  std::vector<fft::Complex> spectra(m.cols() * bins);
  std::vector<double> column(n);
  std::vector<double> mag(bins);
  for (std::size_t w = 0; w < m.cols(); ++w) {
    for (std::size_t r = 0; r < n; ++r) column[r] = m(r, w);
    auto spec = std::span(spectra).subspan(w * bins, bins);
    fft::magnitude_forward(column, spec, mag);
    for (std::size_t k = 0; k < bins; ++k) out(k, w) = mag[k];
  }
  if (spectra_out) *spectra_out = std::move(spectra);
  return out;
}

Descriptor pool_forward(const FeatureMap& f, Aggregation mode, std::vector<std::size_t>* argmax) {
  if (mode == Aggregation::multi_gap && f.channels() < 2) {
    throw ShapeMismatch("multi_gap needs at least 2 channels");
  }
  Descriptor d{Grid(f.rows(), f.channels()), false};
  if (argmax) argmax->assign(f.channels() * f.rows(), 0);
  for (std::size_t c = 0; c < f.channels(); ++c) {
    for (std::size_t r = 0; r < f.rows(); ++r) {
      auto row = f.row(c, r);
      if (mode == Aggregation::gmp) {
        const auto it = std::max_element(row.begin(), row.end());
        d.data(r, c) = *it;
        if (argmax) (*argmax)[c * f.rows() + r] = static_cast<std::size_t>(it - row.begin());
      } else {
        double acc = 0.0;
        for (double v : row) acc += v;
        d.data(r, c) = acc / static_cast<double>(row.size());
      }
    }
  }
  return d;
}

void conv_forward_into(const FeatureMap& input, const ConvKernel& kernel, FeatureMap& out) {
  const std::size_t rows = input.rows();
  const std::size_t cols = input.cols();
  const long h = static_cast<long>(kernel.k / 2);
  for (std::size_t o = 0; o < kernel.c_out; ++o) {
    for (std::size_t r = 0; r < rows; ++r) {
      auto dst = out.row(o, r);
      std::fill(dst.begin(), dst.end(), kernel.bias[o]);
    }
    for (std::size_t c = 0; c < kernel.c_in; ++c) {
      for (std::size_t a = 0; a < kernel.k; ++a) {
        const long da = static_cast<long>(a) - h;
        for (std::size_t b = 0; b < kernel.k; ++b) {
          const double w = kernel.w(o, c, a, b);
          if (w == 0.0) continue;
          const long db = static_cast<long>(b) - h;
          for (std::size_t i = 0; i < rows; ++i) {
            const std::size_t src = wrap(static_cast<long>(i) - da, rows);
            axpy_circular(out.row(o, i).data(), input.row(c, src).data(), cols, w, db);
          }
        }
      }
    }
  }
}

}  // namespace

FeatureMap FeatureMap::from_grid(const Grid& g) {
  FeatureMap f(1, g.rows(), g.cols());
  std::copy(g.values().begin(), g.values().end(), f.values().begin());
  return f;
}

ConvKernel::ConvKernel(std::size_t c_out_, std::size_t c_in_, std::size_t k_)
    : c_out(c_out_), c_in(c_in_), k(k_), weights(c_out_ * c_in_ * k_ * k_, 0.0), bias(c_out_, 0.0) {}

ConvKernel ConvKernel::delta(std::size_t k) {
  ConvKernel kernel(1, 1, k);
  kernel.w(0, 0, k / 2, k / 2) = 1.0;
  return kernel;
}

void ConvKernel::validate() const {
  if (k == 0 || k % 2 == 0) throw BadConfig("kernel size must be odd, got " + std::to_string(k));
  if (c_out == 0 || c_in == 0) throw BadConfig("kernel channel counts must be >= 1");
  if (weights.size() != c_out * c_in * k * k || bias.size() != c_out) {
    throw ShapeMismatch("kernel storage does not match its declared shape");
  }
  for (double v : weights) {
    if (!std::isfinite(v)) throw BadConfig("non-finite kernel weight");
  }
  for (double v : bias) {
    if (!std::isfinite(v)) throw BadConfig("non-finite kernel bias");
  }
}

const char* to_string(Activation a) { return a == Activation::relu ? "relu" : "none"; }

const char* to_string(Aggregation a) {
  switch (a) {
    case Aggregation::dft_mag: return "dft_mag";
    case Aggregation::gmp: return "gmp";
    case Aggregation::gap: return "gap";
    case Aggregation::multi_gap: return "multi_gap";
    case Aggregation::dft2_mag: return "dft2_mag";
  }
  return "?";
}

Aggregation parse_aggregation(const std::string& name) {
  for (auto a : {Aggregation::dft_mag, Aggregation::gmp, Aggregation::gap, Aggregation::multi_gap,
                 Aggregation::dft2_mag}) {
    if (name == to_string(a)) return a;
  }
  throw BadConfig("unknown aggregation '" + name + "'");
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += l.kernel.weights.size() + l.kernel.bias.size();
  return n;
}

void Network::validate() const {
  if (layers.empty()) throw BadConfig("network has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].kernel.validate();
    if (i > 0 && layers[i].kernel.c_in != layers[i - 1].kernel.c_out) {
      throw BadConfig("layer " + std::to_string(i) + " expects " +
                      std::to_string(layers[i].kernel.c_in) + " channels but receives " +
                      std::to_string(layers[i - 1].kernel.c_out));
    }
  }
  for (const SkipPair& s : skips) {
    if (s.from >= s.to || s.to >= layers.size()) {
      throw BadConfig("skip " + std::to_string(s.from) + "->" + std::to_string(s.to) +
                      " is out of order or out of range");
    }
    if (layers[s.from].kernel.c_out != layers[s.to].kernel.c_out) {
      throw BadConfig("skip " + std::to_string(s.from) + "->" + std::to_string(s.to) +
                      " joins feature maps of different channel counts");
    }
  }
  if (aggregation == Aggregation::multi_gap && out_channels() < 2) {
    throw BadConfig("multi_gap needs a last layer with >= 2 channels");
  }
}

namespace {

void check_config(const NetworkConfig& cfg) {
  if (cfg.layers.empty()) throw BadConfig("network config declares no layers");
  if (cfg.in_channels == 0) throw BadConfig("input channel count must be >= 1");
  for (const LayerSpec& spec : cfg.layers) {
    if (spec.out_channels == 0) throw BadConfig("layer with zero output channels");
    if (spec.kernel == 0 || spec.kernel % 2 == 0) {
      throw BadConfig("kernel size must be odd, got " + std::to_string(spec.kernel));
    }
  }
  for (const SkipPair& sk : cfg.skips) {
    if (sk.from >= sk.to || sk.to >= cfg.layers.size()) {
      throw BadConfig("skip " + std::to_string(sk.from) + "->" + std::to_string(sk.to) +
                      " is out of order or out of range");
    }
    if (cfg.layers[sk.from].out_channels != cfg.layers[sk.to].out_channels) {
      throw BadConfig("skip " + std::to_string(sk.from) + "->" + std::to_string(sk.to) +
                      " joins feature maps of different channel counts");
    }
  }
  if (cfg.aggregation == Aggregation::multi_gap && cfg.layers.back().out_channels < 2) {
    throw BadConfig("multi_gap needs a last layer with >= 2 channels");
  }
}

}  // namespace

NetworkConfig parse_network_config(const std::string& text) {
  NetworkConfig cfg;
  std::string normalized = text;
  std::replace(normalized.begin(), normalized.end(), ';', '\n');
  std::istringstream lines(normalized);
  std::string line;
  while (std::getline(lines, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string head;
    if (!(ss >> head)) continue;
    if (head == "layer") {
      LayerSpec l;
      std::string act;
      if (!(ss >> l.out_channels >> l.kernel >> act)) throw BadConfig("bad layer line: " + line);
      if (act == "relu") {
        l.activation = Activation::relu;
      } else if (act == "none") {
        l.activation = Activation::none;
      } else {
        throw BadConfig("unknown activation '" + act + "'");
      }
      cfg.layers.push_back(l);
    } else if (head == "skip") {
      SkipPair s;
      if (!(ss >> s.from >> s.to)) throw BadConfig("bad skip line: " + line);
      cfg.skips.push_back(s);
    } else if (head == "aggregation") {
      std::string name;
      if (!(ss >> name)) throw BadConfig("bad aggregation line: " + line);
      cfg.aggregation = parse_aggregation(name);
    } else if (head == "input") {
      if (!(ss >> cfg.in_channels)) throw BadConfig("bad input line: " + line);
    } else {
      throw BadConfig("unknown directive '" + head + "'");
    }
    std::string extra;
    if (ss >> extra) throw BadConfig("trailing token '" + extra + "' in: " + line);
  }
  check_config(cfg);
  return cfg;
}

std::string to_string(const NetworkConfig& cfg) {
  std::ostringstream out;
  if (cfg.in_channels != 1) out << "input " << cfg.in_channels << "\n";
  for (const LayerSpec& l : cfg.layers) {
    out << "layer " << l.out_channels << ' ' << l.kernel << ' ' << to_string(l.activation) << "\n";
  }
  for (const SkipPair& s : cfg.skips) out << "skip " << s.from << ' ' << s.to << "\n";
  out << "aggregation " << to_string(cfg.aggregation) << "\n";
  return out.str();
}

NetworkConfig default_network_config() {
  return parse_network_config(
      "layer 8 5 relu; layer 16 5 relu; layer 8 5 relu; layer 4 5 none; skip 0 2; "
      "aggregation dft_mag");
}

NetworkConfig widen_last_layer(NetworkConfig cfg, std::size_t width) {
  if (cfg.layers.empty()) throw BadConfig("cannot widen an empty network");
  cfg.layers.back().out_channels = width;
  return cfg;
}

Network init_network(const NetworkConfig& cfg, std::uint64_t seed) {
  check_config(cfg);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Network net;
  net.aggregation = cfg.aggregation;
  net.skips = cfg.skips;
  std::size_t c_in = cfg.in_channels;
  for (const LayerSpec& spec : cfg.layers) {
    Layer layer{ConvKernel(spec.out_channels, c_in, spec.kernel), spec.activation};
    const double scale = 1.0 / std::sqrt(static_cast<double>(c_in * spec.kernel * spec.kernel));
    for (double& w : layer.kernel.weights) {
      // Float-representable so a saved weights file reloads to the same network.
      w = static_cast<double>(static_cast<float>(scale * gauss(rng)));
    }
    net.layers.push_back(std::move(layer));
    c_in = spec.out_channels;
  }
  net.validate();
  return net;
}

Network identity_network(Aggregation agg) {
  Network net;
  net.layers.push_back({ConvKernel::delta(1), Activation::none});
  net.aggregation = agg;
  return net;
}

FeatureMap circular_conv2d(const FeatureMap& input, const ConvKernel& kernel) {
  kernel.validate();
  if (input.channels() != kernel.c_in) {
    throw ShapeMismatch("input has " + std::to_string(input.channels()) +
                        " channels, kernel expects " + std::to_string(kernel.c_in));
  }
  FeatureMap out(kernel.c_out, input.rows(), input.cols());
  conv_forward_into(input, kernel, out);
  return out;
}

Descriptor dft_magnitude_rows(const FeatureMap& f) { return dft_rows_forward(f, nullptr); }

Descriptor aggregate_pool(const FeatureMap& f, Aggregation mode) {
  if (mode != Aggregation::gmp && mode != Aggregation::gap && mode != Aggregation::multi_gap) {
    throw InvalidArgument("aggregate_pool: mode must be gmp, gap or multi_gap");
  }
  return pool_forward(f, mode, nullptr);
}

Descriptor dft2_magnitude(const FeatureMap& f) {
  const Descriptor rows = dft_rows_forward(f, nullptr);
  return {column_dft_magnitude(rows.data, nullptr), false};
}

NetworkGradients NetworkGradients::zeros_like(const Network& net) {
  NetworkGradients g;
  for (const Layer& l : net.layers) {
    g.weights.emplace_back(l.kernel.weights.size(), 0.0);
    g.biases.emplace_back(l.kernel.bias.size(), 0.0);
  }
  return g;
}

NetworkGradients& NetworkGradients::operator+=(const NetworkGradients& other) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (std::size_t i = 0; i < weights[l].size(); ++i) weights[l][i] += other.weights[l][i];
    for (std::size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += other.biases[l][i];
  }
  return *this;
}

NetworkGradients& NetworkGradients::operator*=(double s) {
  for (auto& w : weights) {
    for (double& v : w) v *= s;
  }
  for (auto& b : biases) {
    for (double& v : b) v *= s;
  }
  return *this;
}

namespace {

FeatureMap run_layers(const Network& net, const FeatureMap& input, ForwardTape* tape) {
  std::vector<FeatureMap> outputs;
  outputs.reserve(net.layers.size());
  FeatureMap current = input;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& layer = net.layers[l];
    FeatureMap pre(layer.kernel.c_out, current.rows(), current.cols());
    conv_forward_into(current, layer.kernel, pre);
    FeatureMap out = pre;
    if (layer.activation == Activation::relu) {
      for (double& v : out.values()) v = std::max(v, 0.0);
    }
    for (const SkipPair& s : net.skips) {
      if (s.to != l) continue;
      auto src = outputs[s.from].values();
      auto dst = out.values();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
    if (tape) {
      tape->layer_inputs.push_back(std::move(current));
      tape->pre_activations.push_back(std::move(pre));
    }
    outputs.push_back(out);
    current = std::move(out);
  }
  return current;
}

void check_input(const Network& net, const Sinogram& s) {
  net.validate();
  if (net.in_channels() != 1) {
    throw ShapeMismatch("network expects " + std::to_string(net.in_channels()) +
                        " input channels; sinograms have 1");
  }
  if (s.n_theta() == 0 || s.n_tau() == 0) throw ShapeMismatch("empty sinogram");
}

}  // namespace

FeatureMap extract_features(const Network& net, const Sinogram& s) {
  check_input(net, s);
  return run_layers(net, FeatureMap::from_grid(s.data()), nullptr);
}

ForwardResult forward(const Network& net, const Sinogram& s) { return forward(net, s, net.aggregation); }

ForwardResult forward(const Network& net, const Sinogram& s, Aggregation aggregation) {
  check_input(net, s);
  ForwardResult result;
  ForwardTape& tape = result.tape;
  const FeatureMap input = FeatureMap::from_grid(s.data());
  tape.signature = signature_of(net, input, aggregation);
  tape.aggregation = aggregation;
  tape.features = run_layers(net, input, &tape);

  switch (aggregation) {
    case Aggregation::dft_mag:
      result.descriptor = dft_rows_forward(tape.features, &tape.row_spectra);
      break;
    case Aggregation::dft2_mag: {
      const Descriptor rows = dft_rows_forward(tape.features, &tape.row_spectra);
      tape.row_magnitudes = rows.data;
      result.descriptor = {column_dft_magnitude(rows.data, &tape.column_spectra), false};
      break;
    }
    case Aggregation::gmp:
    case Aggregation::gap:
    case Aggregation::multi_gap:
      result.descriptor = pool_forward(tape.features, aggregation, &tape.argmax);
      break;
  }
  return result;
}

NetworkGradients backward(const Network& net, const ForwardTape& tape, const Grid& grad_out) {
  if (tape.layer_inputs.size() != net.layers.size() || tape.layer_inputs.empty() ||
      tape.signature != signature_of(net, tape.layer_inputs.front(), tape.aggregation)) {
    throw TapeMismatch("tape was recorded with a different network structure");
  }
  const FeatureMap& f = tape.features;

  // Gradient with respect to the final feature map.
  FeatureMap grad_f(f.channels(), f.rows(), f.cols());
  switch (tape.aggregation) {
    case Aggregation::dft_mag: {
      if (grad_out.rows() != f.rows() || grad_out.cols() != fft::half_bins(f.cols())) {
        throw TapeMismatch("gradient shape does not match the descriptor");
      }
      dft_rows_backward(f, tape.row_spectra, grad_out, grad_f);
      break;
    }
    case Aggregation::dft2_mag: {
      const Grid& m = tape.row_magnitudes;
      const std::size_t bins = fft::half_bins(m.rows());
      if (grad_out.rows() != bins || grad_out.cols() != m.cols()) {
        throw TapeMismatch("gradient shape does not match the descriptor");
      }
      Grid grad_m(m.rows(), m.cols());
      std::vector<double> g_col(bins);
      std::vector<double> out_col(m.rows());
      for (std::size_t w = 0; w < m.cols(); ++w) {
        for (std::size_t k = 0; k < bins; ++k) g_col[k] = grad_out(k, w);
        std::fill(out_col.begin(), out_col.end(), 0.0);
        fft::magnitude_backward(g_col, std::span(tape.column_spectra).subspan(w * bins, bins), out_col);
        for (std::size_t r = 0; r < m.rows(); ++r) grad_m(r, w) = out_col[r];
      }
      dft_rows_backward(f, tape.row_spectra, grad_m, grad_f);
      break;
    }
    case Aggregation::gmp:
    case Aggregation::gap:
    case Aggregation::multi_gap: {
      if (grad_out.rows() != f.rows() || grad_out.cols() != f.channels()) {
        throw TapeMismatch("gradient shape does not match the descriptor");
      }
      const double inv_n = 1.0 / static_cast<double>(f.cols());
      for (std::size_t c = 0; c < f.channels(); ++c) {
        for (std::size_t r = 0; r < f.rows(); ++r) {
          const double g = grad_out(r, c);
          if (tape.aggregation == Aggregation::gmp) {
            grad_f.at(c, r, tape.argmax[c * f.rows() + r]) += g;
          } else {
            for (double& v : grad_f.row(c, r)) v += g * inv_n;
          }
        }
      }
      break;
    }
  }

  NetworkGradients grads = NetworkGradients::zeros_like(net);
  const std::size_t n_layers = net.layers.size();
  std::vector<FeatureMap> grad_outputs(n_layers);
  grad_outputs[n_layers - 1] = std::move(grad_f);

  for (std::size_t li = n_layers; li-- > 0;) {
    const ConvKernel& kernel = net.layers[li].kernel;
    const FeatureMap& input = tape.layer_inputs[li];
    const FeatureMap& pre = tape.pre_activations[li];
    FeatureMap& g_out = grad_outputs[li];
    if (g_out.values().empty()) g_out = FeatureMap(pre.channels(), pre.rows(), pre.cols());

    for (const SkipPair& s : net.skips) {
      if (s.to != li) continue;
      FeatureMap& dst = grad_outputs[s.from];
      if (dst.values().empty()) dst = FeatureMap(g_out.channels(), g_out.rows(), g_out.cols());
      auto a = dst.values();
      auto b = g_out.values();
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    }

    FeatureMap g_pre = g_out;
    if (net.layers[li].activation == Activation::relu) {
      auto gp = g_pre.values();
      auto pv = pre.values();
      for (std::size_t i = 0; i < gp.size(); ++i) {
        if (!(pv[i] > 0.0)) gp[i] = 0.0;
      }
    }

    const std::size_t rows = input.rows();
    const std::size_t cols = input.cols();
    const long h = static_cast<long>(kernel.k / 2);
    auto& dw = grads.weights[li];
    auto& dbias = grads.biases[li];
    FeatureMap g_in;
    if (li > 0) g_in = FeatureMap(kernel.c_in, rows, cols);

    for (std::size_t o = 0; o < kernel.c_out; ++o) {
      double bsum = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        for (double v : g_pre.row(o, r)) bsum += v;
      }
      dbias[o] += bsum;
      for (std::size_t c = 0; c < kernel.c_in; ++c) {
        for (std::size_t a = 0; a < kernel.k; ++a) {
          const long da = static_cast<long>(a) - h;
          for (std::size_t b = 0; b < kernel.k; ++b) {
            const long db = static_cast<long>(b) - h;
            double acc = 0.0;
            for (std::size_t i = 0; i < rows; ++i) {
              const std::size_t src = wrap(static_cast<long>(i) - da, rows);
              acc += dot_circular(g_pre.row(o, i).data(), input.row(c, src).data(), cols, db);
            }
            dw[((o * kernel.c_in + c) * kernel.k + a) * kernel.k + b] += acc;
            if (li > 0) {
              const double w = kernel.w(o, c, a, b);
              if (w == 0.0) continue;
              for (std::size_t p = 0; p < rows; ++p) {
                const std::size_t src = wrap(static_cast<long>(p) + da, rows);
                axpy_circular(g_in.row(c, p).data(), g_pre.row(o, src).data(), cols, w, -db);
              }
            }
          }
        }
      }
    }
    if (li > 0) {
      FeatureMap& prev = grad_outputs[li - 1];
      if (prev.values().empty()) {
        prev = std::move(g_in);
      } else {
        auto a = prev.values();
        auto b = g_in.values();
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
      }
    }
  }
  return grads;
}

}  // namespace sinoplace
