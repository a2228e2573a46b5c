#pragma once

// Test-side PDE oracles: the manufactured Monge-Ampere problem and direct
// solvers that share no code with the library's Krylov path.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "fne/dirichlet_solver.hpp"

namespace fne::test {

inline double r2(const Point& x) { return x[0] * x[0] + x[1] * x[1]; }

inline GridPtr unit_square(std::size_t n) { return make_grid({n, n}, {0, 0}, {1, 1}); }

inline ScalarField quadratic(const GridPtr& g, double a) {
  return ScalarField::from_function(g, [a](const Point& x) {
    double s = 0.0;
    for (double c : x) s += c * c;
    return 0.5 * a * s;
  });
}

// u* = exp(|x|^2 / 2): det D^2 u* = exp(|x|^2) (1 + |x|^2).
inline ProblemSpec monge_ampere(const GridPtr& g, double a = 8.0) {
  return {OperatorSpec::sigma_root(2, 2), SymMatrixField(g),
          ScalarField::from_function(g, [](const Point& x) { return std::exp(0.5 * r2(x)) * std::sqrt(1 + r2(x)); }),
          ScalarField::from_function(g, [](const Point& x) { return std::exp(0.5 * r2(x)); }), quadratic(g, a)};
}

inline double max_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) m = std::max(m, std::fabs(a[p] - b[p]));
  return m;
}

inline double manufactured_error(std::size_t n) {
  const auto g = unit_square(n);
  const auto p = monge_ampere(g);
  return max_diff(newton_solve(p).u, p.phi);
}

// Dense Gaussian elimination with partial pivoting, test-side only.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double m = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= m * a[c][k];
      b[r] -= m * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

// 5-point Poisson problem Delta u = f, u = phi on the faces of [0,1]^2, by
// banded elimination on the interior unknowns (no pivoting: the matrix is
// diagonally dominant).
inline std::vector<double> poisson_direct(std::size_t n, const std::vector<double>& f, const std::vector<double>& phi) {
  const std::size_t m = n - 2;
  const double h = 1.0 / static_cast<double>(n - 1);
  const std::size_t bw = m;
  const std::size_t N = m * m;
  std::vector<std::vector<double>> band(N, std::vector<double>(2 * bw + 1, 0.0));
  std::vector<double> rhs(N);
  auto at = [&](std::size_t r, std::size_t c) -> double& { return band[r][c + bw - r]; };
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t r = j * m + i;
      const std::size_t node = (j + 1) * n + (i + 1);
      rhs[r] = f[node] * h * h;
      at(r, r) = -4.0;
      const std::array<std::pair<long, long>, 4> nb{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
      for (auto [di, dj] : nb) {
        const long ii = static_cast<long>(i) + di;
        const long jj = static_cast<long>(j) + dj;
        if (ii < 0 || jj < 0 || ii >= static_cast<long>(m) || jj >= static_cast<long>(m)) {
          rhs[r] -= phi[static_cast<std::size_t>(jj + 1) * n + static_cast<std::size_t>(ii + 1)];
        } else {
          at(r, static_cast<std::size_t>(jj) * m + static_cast<std::size_t>(ii)) = 1.0;
        }
      }
    }
  for (std::size_t c = 0; c < N; ++c)
    for (std::size_t r = c + 1; r <= std::min(N - 1, c + bw); ++r) {
      const double mult = at(r, c) / at(c, c);
      if (mult == 0.0) continue;
      for (std::size_t k = c; k <= std::min(N - 1, c + bw); ++k) at(r, k) -= mult * at(c, k);
      rhs[r] -= mult * rhs[c];
    }
  std::vector<double> x(N);
  for (std::size_t i = N; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t k = i + 1; k <= std::min(N - 1, i + bw); ++k) s -= at(i, k) * x[k];
    x[i] = s / at(i, i);
  }
  std::vector<double> u = phi;
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < m; ++i) u[(j + 1) * n + (i + 1)] = x[j * m + i];
  return u;
}

}  // namespace fne::test
