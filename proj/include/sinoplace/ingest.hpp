#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace sinoplace {

/// Planar rigid motion. yaw is kept normalized into [0, 2*pi).
class Se2Pose {
 public:
  Se2Pose() = default;
  Se2Pose(double x, double y, double yaw);

  double x() const { return x_; }
  double y() const { return y_; }
  double yaw() const { return yaw_; }

  // (after * before): apply `before` first, then `after`.
  friend Se2Pose compose(const Se2Pose& after, const Se2Pose& before);
  Se2Pose inverse() const;

  friend bool operator==(const Se2Pose&, const Se2Pose&) = default;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
  double yaw_ = 0.0;
};

double normalize_angle(double radians);
double planar_distance(const Se2Pose& a, const Se2Pose& b);

struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct PointCloud {
  std::vector<Point> points;
  std::int64_t frame_id = 0;
  std::optional<Se2Pose> pose;
  bool has_intensity = false;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

enum class CloudFormat { bin_xyzi, ascii_xyz };

struct LoadedCloud {
  PointCloud cloud;
  std::size_t dropped_count = 0;  // non-finite records skipped
};

/// bin_xyzi: little-endian float32 x,y,z,intensity records with no header.
/// ascii_xyz: one "x y z" per line; blank lines and '#' comments skipped.
LoadedCloud load_point_cloud(const std::filesystem::path& path, CloudFormat format);

// Writes bin_xyzi. Coordinates are narrowed to float32.
void save_point_cloud_bin(const std::filesystem::path& path, const PointCloud& pc);

// Keeps points with z_min <= z < z_max, in input order.
PointCloud remove_ground(const PointCloud& pc, double z_min = -0.9, double z_max = 2.5);

// Rotates (x, y) by t.yaw() then translates by (t.x(), t.y()).
PointCloud apply_se2(const PointCloud& pc, const Se2Pose& t);

// Deterministic test scene: Gaussian blobs, poles and a couple of wall
// segments, all within |x|,|y| <= extent and z in [0, 3].
PointCloud synth_scene(std::uint64_t seed, int n_clusters, double extent);

struct FramePose {
  std::uint64_t id = 0;
  Se2Pose pose;
};

// "id,x,y,yaw" rows; an optional non-numeric header line is skipped.
std::vector<FramePose> load_pose_csv(const std::filesystem::path& path);
void save_pose_csv(const std::filesystem::path& path, const std::vector<FramePose>& frames);

}  // namespace sinoplace
