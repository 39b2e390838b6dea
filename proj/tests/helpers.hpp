#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "sinoplace/grid.hpp"

namespace testing {

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("sinoplace_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline sinoplace::Grid random_grid(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double lo = 0.0,
                                   double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  sinoplace::Grid g(rows, cols);
  for (double& v : g.values()) v = u(rng);
  return g;
}

inline double max_abs_diff(const sinoplace::Grid& a, const sinoplace::Grid& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  }
  return m;
}

}  // namespace testing
