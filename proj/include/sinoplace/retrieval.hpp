#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sinoplace/bev.hpp"
#include "sinoplace/featnet.hpp"
#include "sinoplace/ingest.hpp"
#include "sinoplace/sinogram.hpp"

namespace sinoplace {

/// Scan -> descriptor: ground band filter, BEV occupancy, Radon transform,
/// network forward pass, normalization.
struct DescriptorPipeline {
  GridSpec grid;
  std::size_t n_theta = 120;
  std::size_t n_tau = 120;
  bool remove_ground = true;
  double z_min = -0.9;
  double z_max = 2.5;

  Sinogram sinogram(const PointCloud& pc) const;
  Descriptor describe(const PointCloud& pc, const Network& net) const;
};

struct DatabaseEntry {
  std::uint64_t frame_id = 0;
  Se2Pose pose;
  Descriptor descriptor;

  friend bool operator==(const DatabaseEntry&, const DatabaseEntry&) = default;
};

struct DatabaseMeta {
  std::size_t n_theta = 0;
  std::size_t n_omega = 0;
  std::uint64_t fingerprint = 0;
  // Not persisted; known only for databases built in this process.
  std::optional<GridSpec> grid;
  // Set by load_database when an expected fingerprint was given and differs.
  bool fingerprint_mismatch = false;

  friend bool operator==(const DatabaseMeta&, const DatabaseMeta&) = default;
};

/// Immutable after construction; descriptors are stored at float32
/// precision so the file round trip is exact.
struct PlaceDatabase {
  std::vector<DatabaseEntry> entries;
  DatabaseMeta meta;

  std::size_t size() const { return entries.size(); }
  void validate() const;  // unique ids, uniform shape, normalized entries

  friend bool operator==(const PlaceDatabase&, const PlaceDatabase&) = default;
};

// Indices of frames kept by greedy spatial sampling: the first frame, then
// every frame at least sampling_dist from the last kept one.
std::vector<std::size_t> select_keyframes(std::span<const FramePose> frames, double sampling_dist);

using ScanLoader = std::function<PointCloud(const FramePose&)>;

// Loads and describes only the kept frames.
PlaceDatabase build_database(std::span<const FramePose> frames, const ScanLoader& load,
                             const Network& net, const DescriptorPipeline& pipeline,
                             double sampling_dist = 20.0);

struct PosedScan {
  std::uint64_t id = 0;
  Se2Pose pose;
  PointCloud cloud;
};
PlaceDatabase build_database(std::span<const PosedScan> scans, const Network& net,
                             const DescriptorPipeline& pipeline, double sampling_dist = 20.0);

// Database from already computed descriptors (normalized on insertion).
PlaceDatabase make_database(std::vector<DatabaseEntry> entries, std::uint64_t fingerprint);

struct QueryHit {
  std::uint64_t frame_id = 0;
  double score = 0.0;
  long alpha_bin = 0;  // rotation of the query relative to the entry

  friend bool operator==(const QueryHit&, const QueryHit&) = default;
};

// Descending score, ties by ascending frame id; at most k hits.
std::vector<QueryHit> query_topk(const PlaceDatabase& db, const Descriptor& q, std::size_t k);

/// DRDB file, all little-endian:
///   "DRDB" | version u16 | n_theta u32 | n_omega u32 | count u32 |
///   fingerprint u64 | per entry: frame_id u64, x/y/yaw float64,
///   descriptor float32[n_theta * n_omega] row-major
inline constexpr std::uint16_t kDatabaseVersion = 1;

void save_database(const PlaceDatabase& db, const std::filesystem::path& path);
PlaceDatabase load_database(const std::filesystem::path& path,
                            std::optional<std::uint64_t> expected_fingerprint = std::nullopt);

}  // namespace sinoplace
