#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "fne/errors.hpp"

namespace fne {

/// Largest matrix dimension supported by the small-matrix kernels.
inline constexpr std::size_t kMaxMatrixDim = 8;

/// Dense square matrix of dimension n <= kMaxMatrixDim, row-major, stored inline.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t n) : n_(n) {
    if (n == 0 || n > kMaxMatrixDim) throw DomainError("Matrix: dimension out of range");
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  /// Row-major construction; the list must hold n*n entries.
  Matrix(std::size_t n, std::initializer_list<double> rows) : Matrix(n) {
    if (rows.size() != n * n) throw DomainError("Matrix: wrong number of entries");
    std::size_t k = 0;
    for (double v : rows) a_[k++] = v;
  }

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return a_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return a_[i * n_ + j]; }

  Matrix transposed() const {
    Matrix t(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    assert(a.n_ == b.n_);
    Matrix c(a.n_);
    for (std::size_t i = 0; i < a.n_; ++i)
      for (std::size_t k = 0; k < a.n_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < a.n_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

 private:
  std::size_t n_ = 0;
  std::array<double, kMaxMatrixDim * kMaxMatrixDim> a_{};
};

/// Symmetric matrix; only the upper triangle is stored, so A(i,j) and A(j,i)
/// alias the same entry.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t n) : n_(n) {
    if (n == 0 || n > kMaxMatrixDim) throw DomainError("SymMatrix: dimension out of range");
  }

  static SymMatrix identity(std::size_t n, double scale = 1.0) {
    SymMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = scale;
    return m;
  }

  static SymMatrix diagonal(std::initializer_list<double> d) {
    SymMatrix m(d.size());
    std::size_t i = 0;
    for (double v : d) {
      m(i, i) = v;
      ++i;
    }
    return m;
  }

  /// Symmetric part of a dense matrix.
  static SymMatrix from_dense(const Matrix& a) {
    SymMatrix s(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = i; j < a.size(); ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
    return s;
  }

  /// Row-major construction from a full square listing; the lower triangle
  /// must mirror the upper one.
  SymMatrix(std::size_t n, std::initializer_list<double> rows) : SymMatrix(n) {
    if (rows.size() != n * n) throw DomainError("SymMatrix: wrong number of entries");
    std::size_t k = 0;
    for (double v : rows) {
      const std::size_t i = k / n;
      const std::size_t j = k % n;
      if (j >= i) (*this)(i, j) = v;
      else if (v != (*this)(i, j)) throw DomainError("SymMatrix: listing is not symmetric");
      ++k;
    }
  }

  std::size_t size() const noexcept { return n_; }

  /// Number of stored entries, n(n+1)/2.
  std::size_t packed_size() const noexcept { return n_ * (n_ + 1) / 2; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return u_[index(i, j)]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return u_[index(i, j)]; }

  /// Packed upper-triangle access, row by row: (0,0),(0,1),..,(0,n-1),(1,1),...
  double& packed(std::size_t k) noexcept { return u_[k]; }
  double packed(std::size_t k) const noexcept { return u_[k]; }

  Matrix dense() const {
    Matrix a(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) a(i, j) = (*this)(i, j);
    return a;
  }

  double trace() const noexcept {
    double t = 0.0;
    for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
  }

  double frobenius_norm() const noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) s += (*this)(i, j) * (*this)(i, j);
    return std::sqrt(s);
  }

  double max_abs() const noexcept {
    double m = 0.0;
    for (std::size_t k = 0; k < packed_size(); ++k) m = std::fmax(m, std::fabs(u_[k]));
    return m;
  }

  SymMatrix& operator+=(const SymMatrix& o) noexcept {
    for (std::size_t k = 0; k < packed_size(); ++k) u_[k] += o.u_[k];
    return *this;
  }
  SymMatrix& operator-=(const SymMatrix& o) noexcept {
    for (std::size_t k = 0; k < packed_size(); ++k) u_[k] -= o.u_[k];
    return *this;
  }
  SymMatrix& operator*=(double s) noexcept {
    for (std::size_t k = 0; k < packed_size(); ++k) u_[k] *= s;
    return *this;
  }
  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) noexcept { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) noexcept { return a -= b; }
  friend SymMatrix operator*(double s, SymMatrix a) noexcept { return a *= s; }

  /// Full double contraction sum_ij A_ij B_ij.
  friend double contract(const SymMatrix& a, const SymMatrix& b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.n_; ++i) {
      s += a(i, i) * b(i, i);
      for (std::size_t j = i + 1; j < a.n_; ++j) s += 2.0 * a(i, j) * b(i, j);
    }
    return s;
  }

 private:
  std::size_t index(std::size_t i, std::size_t j) const noexcept {
    if (i > j) std::swap(i, j);
    return i * n_ - i * (i + 1) / 2 + j;
  }

  std::size_t n_ = 0;
  std::array<double, kMaxMatrixDim * (kMaxMatrixDim + 1) / 2> u_{};
};

/// Heap-backed square matrix for dimensions beyond kMaxMatrixDim (lambda-space
/// Hessians of operators in up to 16 variables).
class DynMatrix {
 public:
  DynMatrix() = default;
  explicit DynMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return a_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return a_[i * n_ + j]; }

  double frobenius_norm() const noexcept {
    double s = 0.0;
    for (double v : a_) s += v * v;
    return std::sqrt(s);
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

/// S * A * S for symmetric S and A (congruence with a symmetric factor).
inline SymMatrix congruence(const SymMatrix& s, const SymMatrix& a) {
  const std::size_t n = a.size();
  Matrix sa(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < n; ++k) v += s(i, k) * a(k, j);
      sa(i, j) = v;
    }
  SymMatrix out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < n; ++k) v += sa(i, k) * s(k, j);
      out(i, j) = v;
    }
  return out;
}

/// Q^T A Q for a dense Q.
inline SymMatrix rotate(const SymMatrix& a, const Matrix& q) {
  const std::size_t n = a.size();
  Matrix aq(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < n; ++k) v += a(i, k) * q(k, j);
      aq(i, j) = v;
    }
  SymMatrix out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < n; ++k) v += q(k, i) * aq(k, j);
      out(i, j) = v;
    }
  return out;
}

}  // namespace fne
