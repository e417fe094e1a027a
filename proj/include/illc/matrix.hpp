#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "illc/errors.hpp"

namespace illc {

// Dense row-major matrix of doubles. Arithmetic helpers below use fixed
// loop orders so results are bitwise reproducible.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double> column(std::size_t c) const;
  Matrix transposed() const;
  Matrix select_rows(std::span<const std::size_t> idx) const;

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Plain left-to-right dot product.
double dot(std::span<const double> a, std::span<const double> b);

double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace illc
