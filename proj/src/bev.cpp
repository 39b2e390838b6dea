#include "sinoplace/bev.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <vector>

#include "sinoplace/errors.hpp"

namespace sinoplace {

void GridSpec::validate() const {
  if (size_cells < 8 || size_cells % 2 != 0) {
    throw InvalidArgument("grid size_cells must be even and >= 8, got " +
                          std::to_string(size_cells));
  }
  if (!(extent > 0.0) || !std::isfinite(extent)) throw InvalidArgument("grid extent must be > 0");
}

BevImage rasterize_bev(const PointCloud& pc, const GridSpec& spec) {
  spec.validate();
  BevImage img{Grid(spec.size_cells, spec.size_cells), spec};
  const auto n = static_cast<double>(spec.size_cells);
  const double scale = n / (2.0 * spec.extent);
  for (const Point& p : pc.points) {
    // Scale by cells-per-meter so grid-aligned coordinates bin exactly.
    const double fr = std::floor((p.x + spec.extent) * scale);
    const double fc = std::floor((p.y + spec.extent) * scale);
    if (fr < 0.0 || fc < 0.0 || fr >= n || fc >= n) continue;
    img.data(static_cast<std::size_t>(fr), static_cast<std::size_t>(fc)) = 1.0;
  }
  return img;
}

PolarGram rasterize_polar(const PointCloud& pc, std::size_t n_r, std::size_t n_theta, double r_max) {
  if (n_r < 8 || n_theta < 8) throw InvalidArgument("polar gram needs n_r, n_theta >= 8");
  if (!(r_max > 0.0)) throw InvalidArgument("polar gram r_max must be > 0");
  PolarGram pg{Grid(n_r, n_theta), r_max};
  const double r_step = r_max / static_cast<double>(n_r);
  const double theta_step = 2.0 * std::numbers::pi / static_cast<double>(n_theta);
  for (const Point& p : pc.points) {
    const double r = std::hypot(p.x, p.y);
    if (r >= r_max) continue;
    const double theta = normalize_angle(std::atan2(p.y, p.x));
    const auto ri = std::min(n_r - 1, static_cast<std::size_t>(r / r_step));
    const auto ti = static_cast<std::size_t>(theta / theta_step) % n_theta;
    pg.data(ri, ti) = 1.0;
  }
  return pg;
}

double bilinear_sample(const BevImage& img, double x, double y) {
  const double pillar = img.spec.pillar();
  // Fractional index with pixel centers at integers.
  const double fr = (x + img.spec.extent) / pillar - 0.5;
  const double fc = (y + img.spec.extent) / pillar - 0.5;
  const double r0f = std::floor(fr);
  const double c0f = std::floor(fc);
  const long n = static_cast<long>(img.spec.size_cells);
  if (r0f < -1.0 || c0f < -1.0 || r0f >= static_cast<double>(n) || c0f >= static_cast<double>(n)) {
    return 0.0;
  }
  const long r0 = static_cast<long>(r0f);
  const long c0 = static_cast<long>(c0f);
  const double tr = fr - r0f;
  const double tc = fc - c0f;
  auto at = [&](long r, long c) -> double {
    if (r < 0 || c < 0 || r >= n || c >= n) return 0.0;
    return img.data(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  };
  return (1.0 - tr) * ((1.0 - tc) * at(r0, c0) + tc * at(r0, c0 + 1)) +
         tr * ((1.0 - tc) * at(r0 + 1, c0) + tc * at(r0 + 1, c0 + 1));
}

BevImage rotate_bev(const BevImage& img, double alpha) {
  BevImage out{Grid(img.data.rows(), img.data.cols()), img.spec};
  const double c = std::cos(alpha);
  const double s = std::sin(alpha);
  const double pillar = img.spec.pillar();
  const std::size_t n = img.spec.size_cells;
  for (std::size_t r = 0; r < n; ++r) {
    const double x = (static_cast<double>(r) + 0.5) * pillar - img.spec.extent;
    for (std::size_t col = 0; col < n; ++col) {
      const double y = (static_cast<double>(col) + 0.5) * pillar - img.spec.extent;
      // Pull from the inverse-rotated position.
      const double v = bilinear_sample(img, c * x + s * y, -s * x + c * y);
      out.data(r, col) = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const Grid& g, bool normalize) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  double scale = 1.0;
  if (normalize) {
    double mx = 0.0;
    for (double v : g.values()) mx = std::max(mx, v);
    scale = mx > 0.0 ? 1.0 / mx : 0.0;
  }
  out << "P5\n" << g.cols() << ' ' << g.rows() << "\n255\n";
  std::vector<unsigned char> bytes;
  bytes.reserve(g.size());
  for (double v : g.values()) {
    bytes.push_back(static_cast<unsigned char>(std::lround(std::clamp(v * scale, 0.0, 1.0) * 255.0)));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace sinoplace
