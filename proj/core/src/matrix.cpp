#include "crof/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crof/error.hpp"

namespace crof {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows_ * cols_, ErrorKind::kShape,
          "matrix data has " + std::to_string(data_.size()) + " values, expected " +
              std::to_string(rows_ * cols_));
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

Matrix normalize_rows(const Matrix& m) {
  Matrix out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double norm = l2_norm(row);
    if (!(norm > 0.0 && std::isfinite(norm))) {
      fail(ErrorKind::kDegenerate, "row " + std::to_string(r) + " has zero or non-finite norm");
    }
    for (double& v : row) v /= norm;
  }
  return out;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), m.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= m.rows()) {
      fail(ErrorKind::kIndex, "row index " + std::to_string(indices[i]) + " out of range");
    }
    std::ranges::copy(m.row(indices[i]), out.row(i).begin());
  }
  return out;
}

}  // namespace crof
