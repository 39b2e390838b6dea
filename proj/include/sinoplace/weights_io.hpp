#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sinoplace/featnet.hpp"

namespace sinoplace {

/// DRNW weights file, all little-endian:
///   "DRNW" | version u16 | layer count u16
///   per layer: c_out u32, c_in u32, k u32, activation u8,
///              weights float32[c_out*c_in*k*k], bias float32[c_out]
///   aggregation u8 | skip count u32 | (from u32, to u32) per skip
/// Weights narrow to float32 on save.
inline constexpr std::uint16_t kWeightsVersion = 1;
inline constexpr std::size_t kCheckpointTailBytes = 16;

std::vector<std::uint8_t> serialize_network(const Network& net);

// Parses a DRNW image. Returns the number of bytes consumed in `used` so
// callers can read trailing sections (checkpoints append head scalars).
Network deserialize_network(std::span<const std::uint8_t> bytes, std::size_t* used = nullptr);

void save_network(const std::filesystem::path& path, const Network& net);
// Accepts a bare weights file or a checkpoint (the weights plus 16 bytes of
// head scalars); any other trailing data is CorruptFile.
Network load_network(const std::filesystem::path& path);

// FNV-1a 64 over the serialized weights.
std::uint64_t network_fingerprint(const Network& net);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

namespace wire {

// Little-endian append/read helpers shared by the binary formats.
class Writer {
 public:
  void bytes(const void* data, std::size_t n);
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u16(std::uint16_t v) { bytes(&v, 2); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void f32(float v) { bytes(&v, 4); }
  void f64(double v) { bytes(&v, 8); }
  std::vector<std::uint8_t>& data() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

// Throws CorruptFile on reads past the end.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}
  void bytes(void* out, std::size_t n);
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

}  // namespace wire

}  // namespace sinoplace
