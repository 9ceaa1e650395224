#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace crof {

/// Dense row-major double matrix used for all arithmetic.
///
/// Storage files hold float32 (see EmbeddingMatrix); computation is carried
/// out in double so that gradient checks and reductions are reproducible.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  void fill(double value);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);

/// Copy of `m` with every row scaled to unit L2 norm. Zero rows raise a
/// degenerate error.
Matrix normalize_rows(const Matrix& m);

/// Rows of `m` selected by `indices`, in that order.
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices);

}  // namespace crof
