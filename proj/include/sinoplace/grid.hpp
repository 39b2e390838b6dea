#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sinoplace {

/// Dense row-major 2D array of doubles. Used for BEV images, polar grams,
/// sinograms and descriptors.
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool same_shape(const Grid& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

double frobenius_norm(const Grid& g);
double sum(const Grid& g);

// ||a - b|| / ||a||; 0 when both are zero.
double relative_l2(const Grid& reference, const Grid& other);

// Row i of the result is row (i - k) mod rows of the input.
Grid shift_rows(const Grid& g, long k);

}  // namespace sinoplace
