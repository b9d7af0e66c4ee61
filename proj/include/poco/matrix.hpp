#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "poco/errors.hpp"

namespace poco {

/// Row-major dense real matrix. Carries token features, Q/K/V and attention
/// scores/probabilities throughout the library.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool all_finite() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// a * b with reductions accumulated in fixed index order.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

/// a * b^T.
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);

/// a^T * b.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);

/// Fixed-order dot product.
double dot(std::span<const double> a, std::span<const double> b);

double norm2(std::span<const double> v);

}  // namespace poco
