#pragma once

// Compressed sparse rows and restarted GMRES with right preconditioning.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fne/errors.hpp"

namespace fne {

class CsrMatrix {
 public:
  CsrMatrix() = default;
  explicit CsrMatrix(std::size_t cols) : cols_(cols) { row_ptr_.push_back(0); }

  std::size_t rows() const noexcept { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nonzeros() const noexcept { return val_.size(); }

  /// Appends a row; duplicate columns are summed, entries kept sorted.
  void push_row(std::vector<std::pair<std::size_t, double>> entries) {
    std::sort(entries.begin(), entries.end(), [](auto& a, auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < entries.size();) {
      std::size_t j = i;
      double v = 0.0;
      while (j < entries.size() && entries[j].first == entries[i].first) v += entries[j++].second;
      col_.push_back(entries[i].first);
      val_.push_back(v);
      i = j;
    }
    row_ptr_.push_back(col_.size());
  }

  void apply(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(rows(), 0.0);
    for (std::size_t r = 0; r < rows(); ++r) {
      double s = 0.0;
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += val_[k] * x[col_[k]];
      y[r] = s;
    }
  }

  /// sum_k a_rk x_k for one row.
  double row_dot(std::size_t r, const std::vector<double>& x) const {
    double s = 0.0;
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += val_[k] * x[col_[k]];
    return s;
  }

  double diagonal(std::size_t r) const {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      if (col_[k] == r) return val_[k];
    return 0.0;
  }

  const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
  const std::vector<std::size_t>& col() const noexcept { return col_; }
  const std::vector<double>& val() const noexcept { return val_; }

 private:
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> col_;
  std::vector<double> val_;
};

/// z = M^{-1} r.
using Preconditioner = std::function<void(const std::vector<double>& r, std::vector<double>& z)>;

inline Preconditioner jacobi_preconditioner(const CsrMatrix& a) {
  std::vector<double> inv(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double d = a.diagonal(r);
    inv[r] = d != 0.0 ? 1.0 / d : 1.0;
  }
  return [inv = std::move(inv)](const std::vector<double>& r, std::vector<double>& z) {
    z.resize(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv[i] * r[i];
  };
}

/// Incomplete LU with zero fill on the sparsity pattern of a.
inline Preconditioner ilu0_preconditioner(const CsrMatrix& a) {
  const std::size_t n = a.rows();
  const auto& rp = a.row_ptr();
  const auto& ci = a.col();
  std::vector<double> lu = a.val();
  std::vector<std::size_t> diag(n);
  for (std::size_t r = 0; r < n; ++r) {
    diag[r] = rp[r + 1];
    for (std::size_t k = rp[r]; k < rp[r + 1]; ++k)
      if (ci[k] == r) diag[r] = k;
    if (diag[r] == rp[r + 1]) throw LinearSolverError("ilu0: missing diagonal entry in row " + std::to_string(r));
  }
  std::vector<std::ptrdiff_t> pos(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) pos[ci[k]] = static_cast<std::ptrdiff_t>(k);
    for (std::size_t k = rp[i]; k < rp[i + 1] && ci[k] < i; ++k) {
      const std::size_t j = ci[k];
      lu[k] /= lu[diag[j]];
      for (std::size_t m = diag[j] + 1; m < rp[j + 1]; ++m)
        if (pos[ci[m]] >= 0) lu[static_cast<std::size_t>(pos[ci[m]])] -= lu[k] * lu[m];
    }
    for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) pos[ci[k]] = -1;
    if (lu[diag[i]] == 0.0) throw LinearSolverError("ilu0: zero pivot in row " + std::to_string(i));
  }
  return [n, rp, ci, lu = std::move(lu), diag = std::move(diag)](const std::vector<double>& r,
                                                                 std::vector<double>& z) {
    z = r;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = rp[i]; k < diag[i]; ++k) z[i] -= lu[k] * z[ci[k]];
    for (std::size_t i = n; i-- > 0;) {
      for (std::size_t k = diag[i] + 1; k < rp[i + 1]; ++k) z[i] -= lu[k] * z[ci[k]];
      z[i] /= lu[diag[i]];
    }
  };
}

struct GmresOptions {
  double rel_tol = 1e-10;
  std::size_t restart = 100;
  std::size_t max_iters = 20000;
};

struct GmresResult {
  std::size_t iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
};

/// Solves A x = b by GMRES(m) with right preconditioning; x holds the
/// initial guess on entry. Throws LinearSolverError on breakdown or when the
/// iteration budget is exhausted.
inline GmresResult gmres(const CsrMatrix& a, const std::vector<double>& b, std::vector<double>& x,
                         const Preconditioner& precond, const GmresOptions& opt = {}) {
  const std::size_t n = b.size();
  if (a.rows() != n || a.cols() != n) throw LinearSolverError("gmres: dimension mismatch");
  x.resize(n, 0.0);
  auto norm = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return std::sqrt(s);
  };
  const double bnorm = norm(b);
  GmresResult res;
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    res.converged = true;
    return res;
  }
  const std::size_t m = std::max<std::size_t>(1, opt.restart);
  std::vector<std::vector<double>> v(m + 1, std::vector<double>(n));
  std::vector<std::vector<double>> h(m + 1, std::vector<double>(m, 0.0));
  std::vector<double> cs(m), sn(m), g(m + 1), y(m), w(n), z(n), r(n);

  while (res.iterations < opt.max_iters) {
    a.apply(x, r);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    double beta = norm(r);
    res.rel_residual = beta / bnorm;
    if (res.rel_residual <= opt.rel_tol) {
      res.converged = true;
      return res;
    }
    for (std::size_t i = 0; i < n; ++i) v[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;
    std::size_t j = 0;
    for (; j < m && res.iterations < opt.max_iters; ++j) {
      ++res.iterations;
      precond(v[j], z);
      a.apply(z, w);
      // modified Gram-Schmidt
      for (std::size_t i = 0; i <= j; ++i) {
        double d = 0.0;
        for (std::size_t k = 0; k < n; ++k) d += w[k] * v[i][k];
        h[i][j] = d;
        for (std::size_t k = 0; k < n; ++k) w[k] -= d * v[i][k];
      }
      const double hn = norm(w);
      h[j + 1][j] = hn;
      if (!std::isfinite(hn)) throw LinearSolverError("gmres: non-finite Krylov vector");
      if (hn > 0.0)
        for (std::size_t k = 0; k < n; ++k) v[j + 1][k] = w[k] / hn;
      for (std::size_t i = 0; i < j; ++i) {
        const double t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
        h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
        h[i][j] = t;
      }
      const double den = std::hypot(h[j][j], h[j + 1][j]);
      if (den == 0.0) throw LinearSolverError("gmres: breakdown (singular Hessenberg matrix)");
      cs[j] = h[j][j] / den;
      sn[j] = h[j + 1][j] / den;
      h[j][j] = den;
      h[j + 1][j] = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      res.rel_residual = std::fabs(g[j + 1]) / bnorm;
      if (res.rel_residual <= opt.rel_tol || hn == 0.0) {
        ++j;
        break;
      }
    }
    // x += M^{-1} V y
    for (std::size_t i = j; i-- > 0;) {
      double s = g[i];
      for (std::size_t k = i + 1; k < j; ++k) s -= h[i][k] * y[k];
      y[i] = s / h[i][i];
    }
    std::fill(w.begin(), w.end(), 0.0);
    for (std::size_t i = 0; i < j; ++i)
      for (std::size_t k = 0; k < n; ++k) w[k] += y[i] * v[i][k];
    precond(w, z);
    for (std::size_t k = 0; k < n; ++k) x[k] += z[k];
  }
  a.apply(x, r);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  res.rel_residual = norm(r) / bnorm;
  res.converged = res.rel_residual <= opt.rel_tol;
  if (!res.converged)
    throw LinearSolverError("gmres: relative residual " + std::to_string(res.rel_residual) + " after " +
                            std::to_string(res.iterations) + " iterations");
  return res;
}

}  // namespace fne
