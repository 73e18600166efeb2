#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstddef>
#include <functional>

#include "aesl/core/error.hpp"
#include "aesl/core/types.hpp"

namespace aesl {

using EigenRowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EigenMapRow = Eigen::Map<EigenRowMat>;
using EigenMapRowConst = Eigen::Map<const EigenRowMat>;

inline EigenMapRow as_eigen(DenseMatrix& m) {
  return EigenMapRow(m.ptr(), static_cast<Eigen::Index>(m.rows),
                     static_cast<Eigen::Index>(m.cols));
}
inline EigenMapRowConst as_eigen(const DenseMatrix& m) {
  return EigenMapRowConst(m.ptr(), static_cast<Eigen::Index>(m.rows),
                          static_cast<Eigen::Index>(m.cols));
}
inline Eigen::Map<Eigen::VectorXd> as_eigen(DenseVector& v) {
  return Eigen::Map<Eigen::VectorXd>(v.ptr(), static_cast<Eigen::Index>(v.size()));
}
inline Eigen::Map<const Eigen::VectorXd> as_eigen(const DenseVector& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.ptr(),
                                           static_cast<Eigen::Index>(v.size()));
}

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols == b.rows, "matmul: inner dimensions disagree");
  DenseMatrix out(a.rows, b.cols);
  as_eigen(out).noalias() = as_eigen(a) * as_eigen(b);
  return out;
}

inline DenseVector matvec(const DenseMatrix& a, const DenseVector& x) {
  require(a.cols == x.size(), "matvec: dimension mismatch");
  DenseVector out(a.rows);
  as_eigen(out).noalias() = as_eigen(a) * as_eigen(x);
  return out;
}

/// In-place lower Cholesky of an SPD matrix. Throws SingularityError with the
/// failing pivot index when a pivot is not strictly positive.
inline DenseMatrix cholesky_factor(const DenseMatrix& s) {
  require(s.rows == s.cols, "cholesky: matrix must be square");
  const std::size_t n = s.rows;
  DenseMatrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = s(i, j);
      for (std::size_t k = 0; k < j; ++k) sum -= l(i, k) * l(j, k);
      if (i == j) {
        if (sum <= 0.0 || !std::isfinite(sum))
          throw SingularityError("cholesky: non-positive pivot", i);
        l(i, i) = std::sqrt(sum);
      } else {
        l(i, j) = sum / l(j, j);
      }
    }
  }
  return l;
}

/// log det of an SPD matrix via 2*sum(log L_ii). Symmetry is checked to
/// 1e-9 absolute, then the input is symmetrized as (S+S^T)/2 because products
/// like W^T W are symmetric analytically but not bit-exactly.
inline double cholesky_logdet(const DenseMatrix& s) {
  require(s.rows == s.cols, "cholesky_logdet: matrix must be square");
  const std::size_t n = s.rows;
  DenseMatrix sym(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      require(std::abs(s(i, j) - s(j, i)) <= 1e-9,
              "cholesky_logdet: matrix not symmetric within 1e-9");
      sym(i, j) = 0.5 * (s(i, j) + s(j, i));
    }
  DenseMatrix l = cholesky_factor(sym);
  double logdet = 0.0;
  for (std::size_t i = 0; i < n; ++i) logdet += std::log(l(i, i));
  return 2.0 * logdet;
}

/// Solves L y = b with L lower-triangular (forward substitution).
inline DenseVector forward_subst(const DenseMatrix& l, const DenseVector& b) {
  require(l.rows == l.cols && l.rows == b.size(), "forward_subst: shape mismatch");
  const std::size_t n = l.rows;
  DenseVector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = b[i];
    for (std::size_t k = 0; k < i; ++k) sum -= l(i, k) * y[k];
    y[i] = sum / l(i, i);
  }
  return y;
}

/// Solves a small dense system A x = b by Gaussian elimination with partial
/// pivoting. Used for homography fitting (8x8); not a performance path.
inline DenseVector solve_dense(DenseMatrix a, DenseVector b) {
  require(a.rows == a.cols && a.rows == b.size(), "solve_dense: shape mismatch");
  const std::size_t n = a.rows;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    if (std::abs(a(piv, col)) < 1e-12)
      throw SingularityError("solve_dense: singular system", col);
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(piv, c), a(col, c));
      std::swap(b[piv], b[col]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      b[r] -= f * b[col];
    }
  }
  DenseVector x(n);
  for (std::size_t i = n; i-- > 0;) {
    double sum = b[i];
    for (std::size_t c = i + 1; c < n; ++c) sum -= a(i, c) * x[c];
    x[i] = sum / a(i, i);
  }
  return x;
}

using VectorMap = std::function<DenseVector(const DenseVector&)>;

/// Central-difference Jacobian, column i = (f(z+h e_i) - f(z-h e_i)) / 2h.
/// The independent oracle for analytic Jacobians and gradient checks.
inline DenseMatrix finite_diff_jacobian(const VectorMap& f, const DenseVector& z,
                                        double h) {
  require(h > 0.0, "finite_diff_jacobian: h must be positive");
  DenseVector zp = z, zm = z;
  const std::size_t n = z.size();
  DenseMatrix jac;
  for (std::size_t i = 0; i < n; ++i) {
    zp[i] = z[i] + h;
    zm[i] = z[i] - h;
    DenseVector fp = f(zp);
    DenseVector fm = f(zm);
    if (i == 0) jac = DenseMatrix(fp.size(), n);
    require(fp.size() == jac.rows && fm.size() == jac.rows,
            "finite_diff_jacobian: f output length changed");
    for (std::size_t r = 0; r < jac.rows; ++r)
      jac(r, i) = (fp[r] - fm[r]) / (2.0 * h);
    zp[i] = z[i];
    zm[i] = z[i];
  }
  return jac;
}

}  // namespace aesl
