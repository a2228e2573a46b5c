#pragma once

// Test-side oracles and samplers, deliberately independent of the library's
// own samplers.

#include <algorithm>
#include <cmath>
#include <vector>

#include "fne/jacobi.hpp"
#include "fne/random.hpp"
#include "fne/small_matrix.hpp"
#include "fne/symfun.hpp"

namespace fne::test {

/// Rejection sample of a point well inside the cone (margin >= 25% of the
/// largest entry), radius log-uniform in [0.1, 10].
inline Spectrum random_cone_point(const ConeSpec& cone, RandomStream& rng, double min_rel_margin = 0.25) {
  const std::size_t n = cone.n;
  while (true) {
    const double shift = rng.uniform(0.0, 2.0);
    const double r = rng.log_uniform(0.1, 10.0);
    std::vector<double> v(n);
    for (auto& x : v) x = r * (rng.normal() + shift);
    const Spectrum l(v);
    if (cone_margin(cone, l) > min_rel_margin * l.max_abs()) return l;
  }
}

inline double rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::fabs(a[i] - b[i]));
    den = std::max(den, std::fabs(b[i]));
  }
  return den > 0.0 ? num / den : num;
}

inline double rel_err(const DynMatrix& a, const DynMatrix& b) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) {
      num = std::max(num, std::fabs(a(i, j) - b(i, j)));
      den = std::max(den, std::fabs(b(i, j)));
    }
  return den > 0.0 ? num / den : num;
}

inline Spectrum bumped(const Spectrum& l, std::size_t i, double h) {
  std::vector<double> v = l.vector();
  v[i] += h;
  return Spectrum(v);
}

/// Step scale for central differences: the smallest |lambda_i|, floored at
/// 1e-3 |lambda|_inf. Scaling by the largest entry instead lets truncation
/// error dominate on widely spread spectra such as (0.06, 0.06, 20).
inline double fd_scale(const Spectrum& l) {
  double lo = l.max_abs();
  for (double v : l.vector()) lo = std::min(lo, std::fabs(v));
  return std::max(lo, 1e-3 * l.max_abs());
}

/// Central differences of f_eval with step h * fd_scale(lambda).
inline std::vector<double> fd_gradient(const OperatorSpec& spec, const Spectrum& l, double h) {
  const double step = h * fd_scale(l);
  std::vector<double> g(l.size());
  for (std::size_t i = 0; i < l.size(); ++i)
    g[i] = (f_eval(spec, bumped(l, i, step)) - f_eval(spec, bumped(l, i, -step))) / (2.0 * step);
  return g;
}

/// Central differences of f_grad.
inline DynMatrix fd_hessian(const OperatorSpec& spec, const Spectrum& l, double h) {
  const double step = h * fd_scale(l);
  DynMatrix out(l.size());
  for (std::size_t j = 0; j < l.size(); ++j) {
    const auto gp = f_grad(spec, bumped(l, j, step));
    const auto gm = f_grad(spec, bumped(l, j, -step));
    for (std::size_t i = 0; i < l.size(); ++i) out(i, j) = (gp[i] - gm[i]) / (2.0 * step);
  }
  return out;
}

// Random matrices for the spectral identities.

inline Matrix random_orthogonal(std::size_t n, RandomStream& rng) {
  Matrix q(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    for (std::size_t p = 0; p < c; ++p) {
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) d += v[i] * q(i, p);
      for (std::size_t i = 0; i < n; ++i) v[i] -= d * q(i, p);
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < n; ++i) q(i, c) = v[i] / norm;
  }
  return q;
}

inline SymMatrix from_spectrum(const Spectrum& l, const Matrix& q) {
  const std::size_t n = l.size();
  SymMatrix a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < n; ++k) v += q(i, k) * l[k] * q(j, k);
      a(i, j) = v;
    }
  return a;
}

inline SymMatrix random_spd(std::size_t n, RandomStream& rng) {
  std::vector<double> d(n);
  for (auto& x : d) x = rng.log_uniform(0.3, 3.0);
  return from_spectrum(Spectrum(d), random_orthogonal(n, rng));
}

inline SymMatrix random_sym(std::size_t n, RandomStream& rng) {
  SymMatrix b(n);
  for (std::size_t k = 0; k < b.packed_size(); ++k) b.packed(k) = rng.normal();
  return b;
}

// A with g-eigenvalues l: A = g^{1/2} Q diag(l) Q^T g^{1/2}.
inline SymMatrix admissible_matrix(const Spectrum& l, const SymMatrix& g, RandomStream& rng) {
  const SymMatrix m = from_spectrum(l, random_orthogonal(l.size(), rng));
  const auto e = jacobi_eigen(g.dense());
  SymMatrix root(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = i; j < g.size(); ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k) v += e.vectors(i, k) * std::sqrt(e.values[k]) * e.vectors(j, k);
      root(i, j) = v;
    }
  return congruence(root, m);
}

}  // namespace fne::test
