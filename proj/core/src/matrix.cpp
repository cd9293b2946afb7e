#include "gak/matrix.hpp"

#include <string>

#include "gak/error.hpp"

namespace gak {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols) {
    throw Error(ErrorKind::ShapeError, std::to_string(rows) + "x" + std::to_string(cols) +
                                           " matrix given " + std::to_string(data_.size()) +
                                           " values");
  }
}

Matrix Matrix::from_array(const Array& array) {
  if (array.rank() != 2) {
    throw Error(ErrorKind::ShapeError,
                "expected a rank-2 array, got rank " + std::to_string(array.rank()));
  }
  return Matrix(array.shape()[0], array.shape()[1], array.to_f64());
}

Array Matrix::to_array(ElementKind kind) const {
  if (kind == ElementKind::Float32) {
    return Array({rows_, cols_}, std::vector<float>(data_.begin(), data_.end()));
  }
  return Array({rows_, cols_}, data_);
}

Matrix Matrix::transposed() const {
  Matrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
  return out;
}

Tensor3 Tensor3::from_array(const Array& array) {
  if (array.rank() != 3) {
    throw Error(ErrorKind::ShapeError,
                "expected a rank-3 array, got rank " + std::to_string(array.rank()));
  }
  Tensor3 t(array.shape()[0], array.shape()[1], array.shape()[2]);
  t.data_ = array.to_f64();
  return t;
}

Array Tensor3::to_array(ElementKind kind) const {
  if (kind == ElementKind::Float32) {
    return Array({d0_, d1_, d2_}, std::vector<float>(data_.begin(), data_.end()));
  }
  return Array({d0_, d1_, d2_}, data_);
}

}  // namespace gak
