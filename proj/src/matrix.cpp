#include "voidp/matrix.hpp"

#include <algorithm>
#include <stdexcept>

namespace voidp {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw std::invalid_argument("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix multiply(const Matrix& lhs, const Matrix& rhs) {
  if (lhs.cols() != rhs.rows()) throw std::invalid_argument("matrix dimension mismatch");
  Matrix out(lhs.rows(), rhs.cols());
  for (std::size_t i = 0; i < lhs.rows(); ++i) {
    for (std::size_t j = 0; j < lhs.cols(); ++j) {
      const double v = lhs(i, j);
      if (v == 0.0) continue;
      for (std::size_t k = 0; k < rhs.cols(); ++k) out(i, k) += v * rhs(j, k);
    }
  }
  return out;
}

Matrix max_multiply(const Matrix& lhs, const Matrix& rhs) {
  if (lhs.cols() != rhs.rows()) throw std::invalid_argument("matrix dimension mismatch");
  Matrix out(lhs.rows(), rhs.cols());
  for (std::size_t i = 0; i < lhs.rows(); ++i) {
    for (std::size_t j = 0; j < lhs.cols(); ++j) {
      const double v = lhs(i, j);
      for (std::size_t k = 0; k < rhs.cols(); ++k) out(i, k) = std::max(out(i, k), v * rhs(j, k));
    }
  }
  return out;
}

}  // namespace voidp
