#pragma once

#include <cstddef>
#include <filesystem>

#include "sinoplace/grid.hpp"
#include "sinoplace/ingest.hpp"

namespace sinoplace {

/// Square BEV window of size_cells x size_cells pillars covering
/// [-extent, extent)^2 meters.
struct GridSpec {
  std::size_t size_cells = 120;
  double extent = 70.0;

  double pillar() const { return 2.0 * extent / static_cast<double>(size_cells); }
  void validate() const;  // throws InvalidArgument

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Occupancy image. Cell (0, 0) is the corner at (-extent, -extent); the row
/// index grows with x and the column index with y.
struct BevImage {
  Grid data;
  GridSpec spec;
};

/// Occupancy over (radius, azimuth): n_r rows of radius bins over [0, r_max),
/// n_theta columns of azimuth bins over [0, 2*pi).
struct PolarGram {
  Grid data;
  double r_max = 0.0;
};

BevImage rasterize_bev(const PointCloud& pc, const GridSpec& spec);
PolarGram rasterize_polar(const PointCloud& pc, std::size_t n_r, std::size_t n_theta, double r_max);

// Bilinear read of the image at metric position (x, y). Samples falling
// outside the window read as zero.
double bilinear_sample(const BevImage& img, double x, double y);

// Rotates image content counter-clockwise by alpha about the window center.
BevImage rotate_bev(const BevImage& img, double alpha);

// P5 8-bit dump, value = round(255 * v / max) with max = 1 for occupancy
// images. normalize=true scales by the grid maximum instead.
void write_pgm(const std::filesystem::path& path, const Grid& g, bool normalize = false);

}  // namespace sinoplace
