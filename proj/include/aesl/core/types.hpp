#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "aesl/core/error.hpp"

namespace aesl {

/// Dense real vector. The universal numeric carrier for images, latent codes
/// and residuals. 64-bit throughout; files persist 32-bit.
struct DenseVector {
  std::vector<double> data;

  DenseVector() = default;
  explicit DenseVector(std::size_t n, double fill = 0.0) : data(n, fill) {}
  DenseVector(std::initializer_list<double> init) : data(init) {}

  std::size_t size() const { return data.size(); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  double* ptr() { return data.data(); }
  const double* ptr() const { return data.data(); }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

/// Dense row-major real matrix.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major, length rows*cols

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  double* ptr() { return data.data(); }
  const double* ptr() const { return data.data(); }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  DenseMatrix transposed() const {
    DenseMatrix t(cols, rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) t(c, r) = (*this)(r, c);
    return t;
  }
};

inline double dot(const DenseVector& a, const DenseVector& b) {
  require(a.size() == b.size(), "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const DenseVector& a) { return std::sqrt(dot(a, a)); }

}  // namespace aesl
