#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace voidp {

/// Dense row-major matrix of doubles. Used for transition, emission and pairwise tables.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Row-major product `lhs * rhs`.
Matrix multiply(const Matrix& lhs, const Matrix& rhs);

/// Max-product analogue of `multiply`: out(i,k) = max_j lhs(i,j) * rhs(j,k).
Matrix max_multiply(const Matrix& lhs, const Matrix& rhs);

}  // namespace voidp
