#include "sinoplace/weights_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "sinoplace/errors.hpp"

namespace sinoplace {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

namespace wire {

void Writer::bytes(const void* data, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  buf_.insert(buf_.end(), p, p + n);
}

void Reader::bytes(void* out, std::size_t n) {
  if (remaining() < n) throw CorruptFile("unexpected end of data at offset " + std::to_string(pos_));
  std::memcpy(out, data_.data() + pos_, n);
  pos_ += n;
}

std::uint8_t Reader::u8() { std::uint8_t v; bytes(&v, 1); return v; }
std::uint16_t Reader::u16() { std::uint16_t v; bytes(&v, 2); return v; }
std::uint32_t Reader::u32() { std::uint32_t v; bytes(&v, 4); return v; }
std::uint64_t Reader::u64() { std::uint64_t v; bytes(&v, 8); return v; }
float Reader::f32() { float v; bytes(&v, 4); return v; }
double Reader::f64() { double v; bytes(&v, 8); return v; }

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace wire

std::vector<std::uint8_t> serialize_network(const Network& net) {
  net.validate();
  if (net.layers.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw BadConfig("too many layers for the weights format");
  }
  wire::Writer w;
  w.bytes("DRNW", 4);
  w.u16(kWeightsVersion);
  w.u16(static_cast<std::uint16_t>(net.layers.size()));
  for (const Layer& l : net.layers) {
    w.u32(static_cast<std::uint32_t>(l.kernel.c_out));
    w.u32(static_cast<std::uint32_t>(l.kernel.c_in));
    w.u32(static_cast<std::uint32_t>(l.kernel.k));
    w.u8(static_cast<std::uint8_t>(l.activation));
    for (double v : l.kernel.weights) w.f32(static_cast<float>(v));
    for (double v : l.kernel.bias) w.f32(static_cast<float>(v));
  }
  w.u8(static_cast<std::uint8_t>(net.aggregation));
  w.u32(static_cast<std::uint32_t>(net.skips.size()));
  for (const SkipPair& s : net.skips) {
    w.u32(static_cast<std::uint32_t>(s.from));
    w.u32(static_cast<std::uint32_t>(s.to));
  }
  return std::move(w.data());
}

Network deserialize_network(std::span<const std::uint8_t> bytes, std::size_t* used) {
  wire::Reader r(bytes);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, "DRNW", 4) != 0) throw CorruptFile("bad magic; not a DRNW weights file");
  const std::uint16_t version = r.u16();
  if (version != kWeightsVersion) throw CorruptFile("unsupported weights version " + std::to_string(version));
  const std::uint16_t n_layers = r.u16();
  Network net;
  for (std::uint16_t i = 0; i < n_layers; ++i) {
    const std::uint32_t c_out = r.u32();
    const std::uint32_t c_in = r.u32();
    const std::uint32_t k = r.u32();
    const std::uint8_t act = r.u8();
    if (act > 1) throw CorruptFile("unknown activation code " + std::to_string(act));
    if (c_out == 0 || c_in == 0 || k == 0 || k % 2 == 0 || k > 255) {
      throw CorruptFile("implausible layer shape");
    }
    const std::uint64_t n_w = std::uint64_t{c_out} * c_in * k * k;
    if (n_w * 4 > r.remaining()) throw CorruptFile("truncated layer weights");
    Layer layer{ConvKernel(c_out, c_in, k), static_cast<Activation>(act)};
    for (double& v : layer.kernel.weights) v = r.f32();
    for (double& v : layer.kernel.bias) v = r.f32();
    net.layers.push_back(std::move(layer));
  }
  const std::uint8_t agg = r.u8();
  if (agg > static_cast<std::uint8_t>(Aggregation::dft2_mag)) {
    throw CorruptFile("unknown aggregation code " + std::to_string(agg));
  }
  net.aggregation = static_cast<Aggregation>(agg);
  const std::uint32_t n_skips = r.u32();
  if (std::uint64_t{n_skips} * 8 > r.remaining()) throw CorruptFile("truncated skip list");
  for (std::uint32_t i = 0; i < n_skips; ++i) {
    SkipPair s;
    s.from = r.u32();
    s.to = r.u32();
    net.skips.push_back(s);
  }
  try {
    net.validate();
  } catch (const BadConfig& e) {
    throw CorruptFile(std::string("inconsistent network: ") + e.what());
  }
  if (used) *used = r.offset();
  return net;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void save_network(const std::filesystem::path& path, const Network& net) {
  write_file_bytes(path, serialize_network(net));
}

Network load_network(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  std::size_t used = 0;
  Network net = deserialize_network(bytes, &used);
  const std::size_t tail = bytes.size() - used;
  if (tail != 0 && tail != kCheckpointTailBytes) {
    throw CorruptFile(path.string() + ": " + std::to_string(tail) + " unexpected trailing bytes");
  }
  return net;
}

std::uint64_t network_fingerprint(const Network& net) { return wire::fnv1a64(serialize_network(net)); }

}  // namespace sinoplace
