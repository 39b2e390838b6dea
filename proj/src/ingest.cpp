#include "sinoplace/ingest.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "sinoplace/errors.hpp"

namespace sinoplace {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

bool finite(const Point& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z) &&
         std::isfinite(p.intensity);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

double normalize_angle(double radians) {
  double a = std::fmod(radians, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  // fmod of a tiny negative can round up to exactly 2*pi.
  if (a >= kTwoPi) a = 0.0;
  return a;
}

Se2Pose::Se2Pose(double x, double y, double yaw) : x_(x), y_(y), yaw_(normalize_angle(yaw)) {}

Se2Pose compose(const Se2Pose& after, const Se2Pose& before) {
  const double c = std::cos(after.yaw_);
  const double s = std::sin(after.yaw_);
  return Se2Pose(after.x_ + c * before.x_ - s * before.y_,
                 after.y_ + s * before.x_ + c * before.y_, after.yaw_ + before.yaw_);
}

Se2Pose Se2Pose::inverse() const {
  const double c = std::cos(yaw_);
  const double s = std::sin(yaw_);
  return Se2Pose(-(c * x_ + s * y_), -(-s * x_ + c * y_), -yaw_);
}

double planar_distance(const Se2Pose& a, const Se2Pose& b) {
  return std::hypot(a.x() - b.x(), a.y() - b.y());
}

LoadedCloud load_point_cloud(const std::filesystem::path& path, CloudFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  LoadedCloud result;
  if (format == CloudFormat::bin_xyzi) {
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path.string());
    if (bytes.size() % 16 != 0) {
      throw FormatError(path.string() + ": size " + std::to_string(bytes.size()) +
                        " is not a multiple of 16 bytes");
    }
    const std::size_t n = bytes.size() / 16;
    result.cloud.points.reserve(n);
    result.cloud.has_intensity = true;
    for (std::size_t i = 0; i < n; ++i) {
      float rec[4];
      std::memcpy(rec, bytes.data() + i * 16, 16);
      Point p{rec[0], rec[1], rec[2], rec[3]};
      if (finite(p)) {
        result.cloud.points.push_back(p);
      } else {
        ++result.dropped_count;
      }
    }
    return result;
  }

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream ss(t);
    Point p;
    if (!(ss >> p.x >> p.y >> p.z)) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected 'x y z'");
    }
    std::string extra;
    if (ss >> extra) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": trailing token '" +
                        extra + "'");
    }
    if (finite(p)) {
      result.cloud.points.push_back(p);
    } else {
      ++result.dropped_count;
    }
  }
  if (in.bad()) throw IoError("read failed: " + path.string());
  return result;
}

void save_point_cloud_bin(const std::filesystem::path& path, const PointCloud& pc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const Point& p : pc.points) {
    const float rec[4] = {static_cast<float>(p.x), static_cast<float>(p.y),
                          static_cast<float>(p.z), static_cast<float>(p.intensity)};
    out.write(reinterpret_cast<const char*>(rec), sizeof rec);
  }
  if (!out) throw IoError("write failed: " + path.string());
}

PointCloud remove_ground(const PointCloud& pc, double z_min, double z_max) {
  if (!(z_min < z_max)) {
    throw InvalidBounds("z_min (" + std::to_string(z_min) + ") must be below z_max (" +
                        std::to_string(z_max) + ")");
  }
  PointCloud out;
  out.frame_id = pc.frame_id;
  out.pose = pc.pose;
  out.has_intensity = pc.has_intensity;
  for (const Point& p : pc.points) {
    if (p.z >= z_min && p.z < z_max) out.points.push_back(p);
  }
  return out;
}

PointCloud apply_se2(const PointCloud& pc, const Se2Pose& t) {
  PointCloud out = pc;
  const double c = std::cos(t.yaw());
  const double s = std::sin(t.yaw());
  for (Point& p : out.points) {
    const double x = c * p.x - s * p.y + t.x();
    const double y = s * p.x + c * p.y + t.y();
    p.x = x;
    p.y = y;
  }
  return out;
}

PointCloud synth_scene(std::uint64_t seed, int n_clusters, double extent) {
  if (n_clusters < 1) throw InvalidArgument("synth_scene: n_clusters must be >= 1");
  if (!(extent > 0.0)) throw InvalidArgument("synth_scene: extent must be positive");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  auto clamp_xy = [&](double v) { return std::clamp(v, -extent, extent); };

  PointCloud pc;
  pc.frame_id = static_cast<std::int64_t>(seed);
  auto add = [&](double x, double y, double z) {
    pc.points.push_back({clamp_xy(x), clamp_xy(y), std::clamp(z, 0.0, 3.0), 0.0});
  };

  const double inner = 0.85 * extent;
  for (int c = 0; c < n_clusters; ++c) {
    const double cx = uniform(-inner, inner);
    const double cy = uniform(-inner, inner);
    const double sx = uniform(0.4, 2.5);
    const double sy = uniform(0.4, 2.5);
    const int count = 80 + static_cast<int>(unit(rng) * 220);
    for (int i = 0; i < count; ++i) {
      add(cx + sx * gauss(rng), cy + sy * gauss(rng), uniform(0.0, 3.0));
    }
  }

  // Poles: thin vertical point columns.
  const int poles = 2 * n_clusters + 3;
  for (int k = 0; k < poles; ++k) {
    const double px = uniform(-extent, extent);
    const double py = uniform(-extent, extent);
    for (double z = 0.0; z <= 3.0; z += 0.15) {
      add(px + 0.05 * gauss(rng), py + 0.05 * gauss(rng), z);
    }
  }

  // Two wall segments of unequal length; their layout has no rotational
  // symmetry with probability one.
  for (int w = 0; w < 2; ++w) {
    const double x0 = uniform(-inner, inner);
    const double y0 = uniform(-inner, inner);
    const double heading = uniform(0.0, kTwoPi);
    const double length = uniform(5.0, 0.5 * extent);
    for (double s = 0.0; s <= length; s += 0.4) {
      add(x0 + s * std::cos(heading), y0 + s * std::sin(heading), uniform(0.0, 3.0));
    }
  }
  return pc;
}

std::vector<FramePose> load_pose_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<FramePose> frames;
  std::string line;
  std::size_t line_no = 0;
  bool first_row = true;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const bool may_be_header = first_row;
    first_row = false;
    std::vector<std::string> fields;
    std::stringstream ss(t);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(trim(f));
    auto bad = [&](const std::string& why) {
      return FormatError(path.string() + ":" + std::to_string(line_no) + ": " + why);
    };
    if (fields.size() != 4) {
      if (may_be_header) continue;
      throw bad("expected 4 fields 'id,x,y,yaw'");
    }
    try {
      std::size_t used = 0;
      const unsigned long long id = std::stoull(fields[0], &used);
      if (used != fields[0].size()) throw std::invalid_argument("id");
      double v[3];
      for (int i = 0; i < 3; ++i) {
        v[i] = std::stod(fields[i + 1], &used);
        if (used != fields[i + 1].size() || !std::isfinite(v[i])) throw std::invalid_argument("v");
      }
      frames.push_back({id, Se2Pose(v[0], v[1], v[2])});
    } catch (const std::logic_error&) {
      if (may_be_header) continue;
      throw bad("unparsable pose row");
    }
  }
  return frames;
}

void save_pose_csv(const std::filesystem::path& path, const std::vector<FramePose>& frames) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "id,x,y,yaw\n";
  out.precision(17);
  for (const auto& f : frames) {
    out << f.id << ',' << f.pose.x() << ',' << f.pose.y() << ',' << f.pose.yaw() << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace sinoplace
