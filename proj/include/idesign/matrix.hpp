#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "idesign/rational.hpp"

namespace idesign {

/// Small dense row-major matrix over an arbitrary field-like scalar.
///
/// Only what the information-matrix algebra needs: sums, products,
/// transposes, Kronecker products and traces. Sizes are at most a few
/// dozen, so everything is straightforward triple loops.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }
  static Matrix ones(std::size_t rows, std::size_t cols) { return Matrix(rows, cols, T{1}); }

  /// I_n - J_n / n
  static Matrix centering(std::size_t n) {
    Matrix m(n, n, -(T{1} / T(static_cast<long>(n))));
    for (std::size_t i = 0; i < n; ++i) m(i, i) += T{1};
    return m;
  }

  /// Subdiagonal shift: entry (i, j) is 1 iff i - j = 1.
  static Matrix shift(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 1; i < n; ++i) m(i, i - 1) = T{1};
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  T& operator()(std::size_t i, std::size_t j) {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }
  const T& operator()(std::size_t i, std::size_t j) const {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }

  const std::vector<T>& data() const { return data_; }

  Matrix transpose() const {
    Matrix r(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
    return r;
  }

  T trace() const {
    T s{};
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) s += (*this)(i, i);
    return s;
  }

  T sum() const {
    T s{};
    for (const auto& v : data_) s += v;
    return s;
  }

  template <class U>
  Matrix<U> cast() const {
    Matrix<U> r(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) r(i, j) = convert<U>((*this)(i, j));
    return r;
  }

  Matrix& operator+=(const Matrix& o) {
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  Matrix& operator*=(const T& s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  friend Matrix operator+(Matrix x, const Matrix& y) { return x += y; }
  friend Matrix operator-(Matrix x, const Matrix& y) { return x -= y; }
  friend Matrix operator*(Matrix x, const T& s) { return x *= s; }
  friend Matrix operator*(const T& s, Matrix x) { return x *= s; }

  friend Matrix operator*(const Matrix& x, const Matrix& y) {
    if (x.cols_ != y.rows_) throw std::invalid_argument("matrix product: dimension mismatch");
    Matrix r(x.rows_, y.cols_);
    for (std::size_t i = 0; i < x.rows_; ++i) {
      for (std::size_t k = 0; k < x.cols_; ++k) {
        const T& xik = x(i, k);
        if (xik == T{}) continue;
        for (std::size_t j = 0; j < y.cols_; ++j) r(i, j) += xik * y(k, j);
      }
    }
    return r;
  }

  friend bool operator==(const Matrix& x, const Matrix& y) {
    return x.rows_ == y.rows_ && x.cols_ == y.cols_ && x.data_ == y.data_;
  }

 private:
  template <class U, class V>
  static U convert(const V& v) {
    if constexpr (std::is_same_v<V, Rational> && std::is_same_v<U, double>) {
      return v.to_double();
    } else {
      return static_cast<U>(v);
    }
  }

  void check_same(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("matrix sum: dimension mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <class T>
Matrix<T> kron(const Matrix<T>& x, const Matrix<T>& y) {
  Matrix<T> r(x.rows() * y.rows(), x.cols() * y.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (x(i, j) == T{}) continue;
      for (std::size_t k = 0; k < y.rows(); ++k)
        for (std::size_t l = 0; l < y.cols(); ++l) r(i * y.rows() + k, j * y.cols() + l) = x(i, j) * y(k, l);
    }
  return r;
}

/// tr(XY) without forming the product.
template <class T>
T trace_product(const Matrix<T>& x, const Matrix<T>& y) {
  if (x.cols() != y.rows() || x.rows() != y.cols()) throw std::invalid_argument("trace_product: dimension mismatch");
  T s{};
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t k = 0; k < x.cols(); ++k) s += x(i, k) * y(k, i);
  return s;
}

inline double abs_value(double v) { return std::fabs(v); }
inline double abs_value(const Rational& v) { return std::fabs(v.to_double()); }

template <class T>
double max_abs(const Matrix<T>& m) {
  double best = 0.0;
  for (const auto& v : m.data()) best = std::max(best, abs_value(v));
  return best;
}

template <class T>
double frobenius(const Matrix<T>& m) {
  double s = 0.0;
  for (const auto& v : m.data()) {
    const double d = abs_value(v);
    s += d * d;
  }
  return std::sqrt(s);
}

/// Exact generalized inverse of a symmetric positive semidefinite matrix.
///
/// Symmetric elimination with diagonal pivoting picks a maximal nonsingular
/// principal submatrix; its inverse padded with zeros is a g-inverse G with
/// A G A = A. For PSD A a zero pivot implies the entire remaining row is zero,
/// so rank is detected exactly.
Matrix<Rational> psd_ginverse(const Matrix<Rational>& a);

/// Inverse of a nonsingular matrix by Gauss-Jordan elimination; throws
/// std::domain_error when singular.
Matrix<Rational> inverse(const Matrix<Rational>& a);

/// Moore-Penrose pseudo-inverse of a symmetric matrix through its
/// eigendecomposition; eigenvalues below rel_cutoff * max|eigenvalue| are
/// treated as zero.
Matrix<double> symmetric_pinv(const Matrix<double>& a, double rel_cutoff = 1e-10);

/// Ascending eigenvalues of a symmetric matrix.
std::vector<double> symmetric_eigenvalues(const Matrix<double>& a);

/// Inverse of a symmetric positive-definite matrix; throws std::domain_error
/// when the Cholesky factorisation fails.
Matrix<double> spd_inverse(const Matrix<double>& a);

}  // namespace idesign
