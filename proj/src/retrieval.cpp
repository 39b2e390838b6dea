#include "sinoplace/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include "sinoplace/errors.hpp"
#include "sinoplace/matcher.hpp"
#include "sinoplace/parallel.hpp"
#include "sinoplace/weights_io.hpp"

namespace sinoplace {

namespace {

// Quantize to float32 and renormalize in that representation; the stored
// values are exactly what the file holds.
Descriptor storable(const Descriptor& d) {
  Descriptor n = normalize_descriptor(d);
  for (double& v : n.data.values()) v = static_cast<double>(static_cast<float>(v));
  return n;
}

}  // namespace

Sinogram DescriptorPipeline::sinogram(const PointCloud& pc) const {
  const PointCloud filtered = remove_ground ? sinoplace::remove_ground(pc, z_min, z_max) : pc;
  return radon(rasterize_bev(filtered, grid), n_theta, n_tau);
}

Descriptor DescriptorPipeline::describe(const PointCloud& pc, const Network& net) const {
  return normalize_descriptor(forward(net, sinogram(pc)).descriptor);
}

void PlaceDatabase::validate() const {
  std::set<std::uint64_t> ids;
  for (const DatabaseEntry& e : entries) {
    if (!ids.insert(e.frame_id).second) throw InvalidArgument("duplicate frame id " + std::to_string(e.frame_id));
    if (e.descriptor.data.rows() != meta.n_theta || e.descriptor.data.cols() != meta.n_omega) {
      throw ShapeMismatch("entry " + std::to_string(e.frame_id) + " has a mismatched descriptor shape");
    }
    if (!e.descriptor.normalized || std::abs(frobenius_norm(e.descriptor.data) - 1.0) > kNormTolerance) {
      throw NotNormalized("entry " + std::to_string(e.frame_id) + " is not normalized");
    }
  }
}

std::vector<std::size_t> select_keyframes(std::span<const FramePose> frames, double sampling_dist) {
  if (!(sampling_dist > 0.0)) throw InvalidArgument("sampling distance must be positive");
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (kept.empty() || planar_distance(frames[i].pose, frames[kept.back()].pose) >= sampling_dist) {
      kept.push_back(i);
    }
  }
  return kept;
}

PlaceDatabase make_database(std::vector<DatabaseEntry> entries, std::uint64_t fingerprint) {
  PlaceDatabase db;
  db.meta.fingerprint = fingerprint;
  for (DatabaseEntry& e : entries) e.descriptor = storable(e.descriptor);
  if (!entries.empty()) {
    db.meta.n_theta = entries.front().descriptor.data.rows();
    db.meta.n_omega = entries.front().descriptor.data.cols();
  }
  db.entries = std::move(entries);
  db.validate();
  return db;
}

PlaceDatabase build_database(std::span<const FramePose> frames, const ScanLoader& load,
                             const Network& net, const DescriptorPipeline& pipeline,
                             double sampling_dist) {
  if (frames.empty()) throw EmptyInput("build_database: no frames");
  const std::vector<std::size_t> kept = select_keyframes(frames, sampling_dist);
  std::vector<DatabaseEntry> entries(kept.size());
  parallel_for(kept.size(), [&](std::size_t i) {
    const FramePose& f = frames[kept[i]];
    entries[i] = {f.id, f.pose, pipeline.describe(load(f), net)};
  });
  PlaceDatabase db = make_database(std::move(entries), network_fingerprint(net));
  db.meta.grid = pipeline.grid;
  return db;
}

PlaceDatabase build_database(std::span<const PosedScan> scans, const Network& net,
                             const DescriptorPipeline& pipeline, double sampling_dist) {
  std::vector<FramePose> frames;
  frames.reserve(scans.size());
  for (const PosedScan& s : scans) frames.push_back({s.id, s.pose});
  return build_database(frames, [&](const FramePose& f) -> PointCloud {
    for (const PosedScan& s : scans) {
      if (s.id == f.id) return s.cloud;
    }
    throw InvalidArgument("no scan for frame " + std::to_string(f.id));
  }, net, pipeline, sampling_dist);
}

std::vector<QueryHit> query_topk(const PlaceDatabase& db, const Descriptor& q, std::size_t k) {
  if (k == 0) throw InvalidArgument("k must be >= 1");
  if (!db.entries.empty() && (q.data.rows() != db.meta.n_theta || q.data.cols() != db.meta.n_omega)) {
    throw ShapeMismatch("query descriptor is " + std::to_string(q.data.rows()) + "x" +
                        std::to_string(q.data.cols()) + ", database holds " +
                        std::to_string(db.meta.n_theta) + "x" + std::to_string(db.meta.n_omega));
  }
  std::vector<QueryHit> hits(db.entries.size());
  parallel_for(db.entries.size(), [&](std::size_t i) {
    const DatabaseEntry& e = db.entries[i];
    const MatchResult m = correlate(e.descriptor, q, false);
    hits[i] = {e.frame_id, m.score, m.alpha_bin};
  });
  std::sort(hits.begin(), hits.end(), [](const QueryHit& a, const QueryHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.frame_id < b.frame_id;
  });
  if (hits.size() > k) hits.resize(k);
  return hits;
}

void save_database(const PlaceDatabase& db, const std::filesystem::path& path) {
  db.validate();
  wire::Writer w;
  w.bytes("DRDB", 4);
  w.u16(kDatabaseVersion);
  w.u32(static_cast<std::uint32_t>(db.meta.n_theta));
  w.u32(static_cast<std::uint32_t>(db.meta.n_omega));
  w.u32(static_cast<std::uint32_t>(db.entries.size()));
  w.u64(db.meta.fingerprint);
  for (const DatabaseEntry& e : db.entries) {
    w.u64(e.frame_id);
    w.f64(e.pose.x());
    w.f64(e.pose.y());
    w.f64(e.pose.yaw());
    for (double v : e.descriptor.data.values()) w.f32(static_cast<float>(v));
  }
  write_file_bytes(path, w.data());
}

PlaceDatabase load_database(const std::filesystem::path& path,
                            std::optional<std::uint64_t> expected_fingerprint) {
  const auto bytes = read_file_bytes(path);
  wire::Reader r(bytes);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, "DRDB", 4) != 0) throw CorruptFile(path.string() + ": bad magic");
  const std::uint16_t version = r.u16();
  if (version != kDatabaseVersion) {
    throw CorruptFile(path.string() + ": unsupported version " + std::to_string(version));
  }
  PlaceDatabase db;
  db.meta.n_theta = r.u32();
  db.meta.n_omega = r.u32();
  const std::uint32_t count = r.u32();
  db.meta.fingerprint = r.u64();
  const std::uint64_t cells = std::uint64_t{db.meta.n_theta} * db.meta.n_omega;
  if (count > 0 && cells == 0) throw CorruptFile(path.string() + ": zero descriptor shape");
  const std::uint64_t entry_bytes = 32 + cells * 4;
  if (r.remaining() != std::uint64_t{count} * entry_bytes) {
    throw CorruptFile(path.string() + ": expected " + std::to_string(count) + " entries of " +
                      std::to_string(entry_bytes) + " bytes, found " + std::to_string(r.remaining()) +
                      " bytes");
  }
  db.entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    DatabaseEntry e;
    e.frame_id = r.u64();
    const double x = r.f64();
    const double y = r.f64();
    const double yaw = r.f64();
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(yaw)) {
      throw CorruptFile(path.string() + ": non-finite pose in entry " + std::to_string(i));
    }
    e.pose = Se2Pose(x, y, yaw);
    e.descriptor = {Grid(db.meta.n_theta, db.meta.n_omega), true};
    for (double& v : e.descriptor.data.values()) {
      v = r.f32();
      if (!std::isfinite(v)) throw CorruptFile(path.string() + ": non-finite descriptor value");
    }
    db.entries.push_back(std::move(e));
  }
  try {
    db.validate();
  } catch (const Error& e) {
    throw CorruptFile(path.string() + ": " + e.what());
  }
  if (expected_fingerprint && *expected_fingerprint != db.meta.fingerprint) {
    db.meta.fingerprint_mismatch = true;
  }
  return db;
}

}  // namespace sinoplace
