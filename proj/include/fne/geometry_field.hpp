#pragma once

// Box grids carrying a Riemannian metric: finite-difference derivative
// operators, Christoffel symbols, covariant gradient and Hessian, boundary
// distance, and node-valued fields.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "fne/errors.hpp"
#include "fne/krylov.hpp"
#include "fne/matrix_calculus.hpp"
#include "fne/small_matrix.hpp"

namespace fne {

using Point = std::array<double, 3>;

/// sum_m c_m x^p_m, the expression grammar for conformal factors and fields.
struct Polynomial {
  struct Term {
    double c = 0.0;
    std::array<int, 3> p{0, 0, 0};
  };
  std::vector<Term> terms;

  double operator()(const Point& x) const {
    double s = 0.0;
    for (const Term& t : terms) {
      double v = t.c;
      for (int a = 0; a < 3; ++a) v *= std::pow(x[a], t.p[a]);
      s += v;
    }
    return s;
  }

  static Polynomial constant(double c) { return {{{c, {0, 0, 0}}}}; }
};

/// Uniform box grid with an optional metric field. Non-periodic axes carry
/// nodes on both faces, spacing (hi - lo)/(N - 1); periodic axes identify hi
/// with lo, spacing (hi - lo)/N.
class MetricGrid {
 public:
  MetricGrid(std::vector<std::size_t> shape, std::vector<double> lo, std::vector<double> hi,
             std::vector<bool> periodic = {}) {
    dims_ = shape.size();
    if (dims_ != 2 && dims_ != 3) throw DomainError("MetricGrid: dims must be 2 or 3");
    if (lo.size() != dims_ || hi.size() != dims_) throw DomainError("MetricGrid: box corners do not match dims");
    if (periodic.empty()) periodic.assign(dims_, false);
    if (periodic.size() != dims_) throw DomainError("MetricGrid: periodic flags do not match dims");
    size_ = 1;
    for (std::size_t a = 0; a < dims_; ++a) {
      if (shape[a] < 5) throw DomainError("MetricGrid: at least 5 nodes per axis are required");
      if (!(hi[a] > lo[a])) throw DomainError("MetricGrid: empty box");
      shape_[a] = shape[a];
      lo_[a] = lo[a];
      hi_[a] = hi[a];
      periodic_[a] = periodic[a];
      h_[a] = (hi[a] - lo[a]) / static_cast<double>(periodic[a] ? shape[a] : shape[a] - 1);
      stride_[a] = size_;
      size_ *= shape[a];
    }
    identity_ = MetricTensor::identity(dims_);
    build_operators();
  }

  std::size_t dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return size_; }
  std::size_t shape(std::size_t a) const noexcept { return shape_[a]; }
  double spacing(std::size_t a) const noexcept { return h_[a]; }
  double lo(std::size_t a) const noexcept { return lo_[a]; }
  double hi(std::size_t a) const noexcept { return hi_[a]; }
  bool periodic(std::size_t a) const noexcept { return periodic_[a]; }
  std::size_t stride(std::size_t a) const noexcept { return stride_[a]; }

  std::array<std::size_t, 3> multi_index(std::size_t p) const noexcept {
    std::array<std::size_t, 3> m{0, 0, 0};
    for (std::size_t a = 0; a < dims_; ++a) m[a] = (p / stride_[a]) % shape_[a];
    return m;
  }
  std::size_t index(const std::array<std::size_t, 3>& m) const noexcept {
    std::size_t p = 0;
    for (std::size_t a = 0; a < dims_; ++a) p += m[a] * stride_[a];
    return p;
  }
  Point coords(std::size_t p) const noexcept {
    const auto m = multi_index(p);
    Point x{0, 0, 0};
    for (std::size_t a = 0; a < dims_; ++a) x[a] = lo_[a] + static_cast<double>(m[a]) * h_[a];
    return x;
  }
  bool on_boundary(std::size_t p) const noexcept {
    const auto m = multi_index(p);
    for (std::size_t a = 0; a < dims_; ++a)
      if (!periodic_[a] && (m[a] == 0 || m[a] + 1 == shape_[a])) return true;
    return false;
  }
  bool has_boundary() const noexcept {
    for (std::size_t a = 0; a < dims_; ++a)
      if (!periodic_[a]) return true;
    return false;
  }

  bool is_flat() const noexcept { return metric_.empty(); }
  const MetricTensor& metric(std::size_t p) const noexcept { return is_flat() ? identity_ : metric_[p]; }

  /// Gamma^k_ij at node p (zero for the flat metric).
  double christoffel(std::size_t p, std::size_t k, std::size_t i, std::size_t j) const noexcept {
    return is_flat() ? 0.0 : christoffel_[((p * dims_ + k) * dims_ + i) * dims_ + j];
  }

  /// First-derivative operator along axis a.
  const CsrMatrix& d1(std::size_t a) const noexcept { return d1_[a]; }
  /// Second-derivative operator d_a d_b (a == b: second difference along a).
  const CsrMatrix& d2(std::size_t a, std::size_t b) const noexcept { return d2_[a < b ? a * 3 + b : b * 3 + a]; }

  /// Per-node metric tensor; throws DomainError at the first node where g is
  /// not positive definite. Recomputes the Christoffel symbols.
  void set_metric(const std::vector<SymMatrix>& g) {
    if (g.size() != size_) throw DomainError("MetricGrid::set_metric: one tensor per node is required");
    std::vector<MetricTensor> m;
    m.reserve(size_);
    for (std::size_t p = 0; p < size_; ++p) {
      if (g[p].size() != dims_) throw DomainError("MetricGrid::set_metric: tensor dimension mismatch");
      try {
        m.push_back(MetricTensor::from(g[p]));
      } catch (const DomainError&) {
        throw DomainError("MetricGrid::set_metric: metric not positive definite at node " + std::to_string(p));
      }
    }
    metric_ = std::move(m);
    build_christoffel();
  }

  /// g = exp(2 w) delta; w is any callable on Point (a Polynomial, say).
  template <class W>
  void set_conformal(const W& w) {
    std::vector<SymMatrix> g(size_);
    for (std::size_t p = 0; p < size_; ++p) g[p] = SymMatrix::identity(dims_, std::exp(2.0 * w(coords(p))));
    set_metric(g);
  }

 private:
  struct AxisStencil {
    std::size_t count = 0;
    std::array<std::ptrdiff_t, 4> offset{};
    std::array<double, 4> weight{};
  };

  AxisStencil first_stencil(std::size_t a, std::size_t i) const {
    const double h = h_[a];
    const std::size_t n = shape_[a];
    if (periodic_[a] || (i > 0 && i + 1 < n)) return {2, {-1, 1}, {-0.5 / h, 0.5 / h}};
    if (i == 0) return {3, {0, 1, 2}, {-1.5 / h, 2.0 / h, -0.5 / h}};
    return {3, {0, -1, -2}, {1.5 / h, -2.0 / h, 0.5 / h}};
  }

  AxisStencil second_stencil(std::size_t a, std::size_t i) const {
    const double h2 = h_[a] * h_[a];
    const std::size_t n = shape_[a];
    if (periodic_[a] || (i > 0 && i + 1 < n)) return {3, {-1, 0, 1}, {1.0 / h2, -2.0 / h2, 1.0 / h2}};
    const std::ptrdiff_t s = i == 0 ? 1 : -1;
    return {4, {0, s, 2 * s, 3 * s}, {2.0 / h2, -5.0 / h2, 4.0 / h2, -1.0 / h2}};
  }

  std::size_t shifted(std::size_t p, std::size_t a, std::ptrdiff_t off) const {
    const auto m = multi_index(p);
    const auto n = static_cast<std::ptrdiff_t>(shape_[a]);
    std::ptrdiff_t i = static_cast<std::ptrdiff_t>(m[a]) + off;
    if (periodic_[a]) i = ((i % n) + n) % n;
    return p - m[a] * stride_[a] + static_cast<std::size_t>(i) * stride_[a];
  }

  void build_operators() {
    for (std::size_t a = 0; a < dims_; ++a) {
      d1_[a] = CsrMatrix(size_);
      d2_[a * 3 + a] = CsrMatrix(size_);
      for (std::size_t p = 0; p < size_; ++p) {
        const std::size_t i = multi_index(p)[a];
        const auto s1 = first_stencil(a, i);
        std::vector<std::pair<std::size_t, double>> row;
        for (std::size_t k = 0; k < s1.count; ++k) row.emplace_back(shifted(p, a, s1.offset[k]), s1.weight[k]);
        d1_[a].push_row(std::move(row));
        const auto s2 = second_stencil(a, i);
        row.clear();
        for (std::size_t k = 0; k < s2.count; ++k) row.emplace_back(shifted(p, a, s2.offset[k]), s2.weight[k]);
        d2_[a * 3 + a].push_row(std::move(row));
      }
    }
    // mixed derivatives: D_a (D_b u), a tensor product of the two axis stencils
    for (std::size_t a = 0; a < dims_; ++a)
      for (std::size_t b = a + 1; b < dims_; ++b) {
        CsrMatrix m(size_);
        for (std::size_t p = 0; p < size_; ++p) {
          const auto sa = first_stencil(a, multi_index(p)[a]);
          const auto sb = first_stencil(b, multi_index(p)[b]);
          std::vector<std::pair<std::size_t, double>> row;
          for (std::size_t i = 0; i < sa.count; ++i)
            for (std::size_t j = 0; j < sb.count; ++j)
              row.emplace_back(shifted(shifted(p, a, sa.offset[i]), b, sb.offset[j]), sa.weight[i] * sb.weight[j]);
          m.push_row(std::move(row));
        }
        d2_[a * 3 + b] = std::move(m);
      }
  }

  void build_christoffel() {
    const std::size_t n = dims_;
    // dg[c][p] = d_c g at node p
    std::vector<std::vector<SymMatrix>> dg(n, std::vector<SymMatrix>(size_, SymMatrix(n)));
    std::vector<double> comp(size_), out;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        for (std::size_t p = 0; p < size_; ++p) comp[p] = metric_[p].g()(i, j);
        for (std::size_t c = 0; c < n; ++c) {
          d1_[c].apply(comp, out);
          for (std::size_t p = 0; p < size_; ++p) dg[c][p](i, j) = out[p];
        }
      }
    christoffel_.assign(size_ * n * n * n, 0.0);
    for (std::size_t p = 0; p < size_; ++p) {
      const SymMatrix& ginv = metric_[p].g_inv();
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t l = 0; l < n; ++l)
              s += ginv(k, l) * (dg[i][p](j, l) + dg[j][p](i, l) - dg[l][p](i, j));
            christoffel_[((p * n + k) * n + i) * n + j] = 0.5 * s;
          }
    }
  }

  std::size_t dims_ = 2;
  std::size_t size_ = 0;
  std::array<std::size_t, 3> shape_{1, 1, 1};
  std::array<std::size_t, 3> stride_{0, 0, 0};
  std::array<double, 3> lo_{0, 0, 0};
  std::array<double, 3> hi_{0, 0, 0};
  std::array<double, 3> h_{0, 0, 0};
  std::array<bool, 3> periodic_{false, false, false};
  std::array<CsrMatrix, 3> d1_;
  std::array<CsrMatrix, 9> d2_;
  std::vector<MetricTensor> metric_;
  std::vector<double> christoffel_;
  MetricTensor identity_;
};

using GridPtr = std::shared_ptr<const MetricGrid>;

inline GridPtr make_grid(std::vector<std::size_t> shape, std::vector<double> lo, std::vector<double> hi,
                         std::vector<bool> periodic = {}) {
  return std::make_shared<const MetricGrid>(std::move(shape), std::move(lo), std::move(hi), std::move(periodic));
}

inline GridPtr make_grid(MetricGrid grid) { return std::make_shared<const MetricGrid>(std::move(grid)); }

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(GridPtr grid, double value = 0.0) : grid_(std::move(grid)), v_(grid_->size(), value) {}
  ScalarField(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), v_(std::move(values)) {
    if (v_.size() != grid_->size()) throw DomainError("ScalarField: one value per node is required");
  }
  template <class Fn>
  static ScalarField from_function(GridPtr grid, Fn&& fn) {
    ScalarField f(grid);
    for (std::size_t p = 0; p < grid->size(); ++p) f.v_[p] = fn(grid->coords(p));
    return f;
  }

  const GridPtr& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return v_.size(); }
  double& operator[](std::size_t p) noexcept { return v_[p]; }
  double operator[](std::size_t p) const noexcept { return v_[p]; }
  const std::vector<double>& values() const noexcept { return v_; }
  std::vector<double>& values() noexcept { return v_; }

  bool all_finite() const noexcept {
    for (double x : v_)
      if (!std::isfinite(x)) return false;
    return true;
  }
  double max_abs() const noexcept {
    double m = 0.0;
    for (double x : v_) m = std::fmax(m, std::fabs(x));
    return m;
  }
  double min() const noexcept {
    double m = std::numeric_limits<double>::infinity();
    for (double x : v_) m = std::fmin(m, x);
    return m;
  }

 private:
  GridPtr grid_;
  std::vector<double> v_;
};

class SymMatrixField {
 public:
  SymMatrixField() = default;
  explicit SymMatrixField(GridPtr grid) : grid_(std::move(grid)), v_(grid_->size(), SymMatrix(grid_->dims())) {}
  SymMatrixField(GridPtr grid, const SymMatrix& value) : grid_(std::move(grid)), v_(grid_->size(), value) {
    if (value.size() != grid_->dims()) throw DomainError("SymMatrixField: dimension mismatch");
  }

  const GridPtr& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return v_.size(); }
  SymMatrix& operator[](std::size_t p) noexcept { return v_[p]; }
  const SymMatrix& operator[](std::size_t p) const noexcept { return v_[p]; }

  friend SymMatrixField operator+(SymMatrixField a, const SymMatrixField& b) {
    for (std::size_t p = 0; p < a.v_.size(); ++p) a.v_[p] += b.v_[p];
    return a;
  }

 private:
  GridPtr grid_;
  std::vector<SymMatrix> v_;
};

/// Coordinate gradient (d_1 u, ..., d_n u) per node; first entry per axis.
inline std::vector<std::vector<double>> coordinate_gradient(const ScalarField& u) {
  const auto& g = *u.grid();
  std::vector<std::vector<double>> d(g.dims());
  for (std::size_t a = 0; a < g.dims(); ++a) g.d1(a).apply(u.values(), d[a]);
  return d;
}

/// |grad u|_g = sqrt(g^{ij} d_i u d_j u) per node.
inline ScalarField gradient_norm(const ScalarField& u) {
  const auto& g = *u.grid();
  const auto d = coordinate_gradient(u);
  ScalarField out(u.grid());
  for (std::size_t p = 0; p < g.size(); ++p) {
    const SymMatrix& gi = g.metric(p).g_inv();
    double s = 0.0;
    for (std::size_t i = 0; i < g.dims(); ++i)
      for (std::size_t j = 0; j < g.dims(); ++j) s += gi(i, j) * d[i][p] * d[j][p];
    out[p] = std::sqrt(std::fmax(s, 0.0));
  }
  return out;
}

/// Christoffel symbols as a flat field: entry ((p*n + k)*n + i)*n + j is Gamma^k_ij.
inline std::vector<double> christoffel(const MetricGrid& g) {
  const std::size_t n = g.dims();
  std::vector<double> out(g.size() * n * n * n, 0.0);
  for (std::size_t p = 0; p < g.size(); ++p)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out[((p * n + k) * n + i) * n + j] = g.christoffel(p, k, i, j);
  return out;
}

/// nabla_ij u = d_ij u - Gamma^k_ij d_k u, second-order stencils everywhere
/// (one-sided at non-periodic faces).
inline SymMatrixField covariant_hessian(const ScalarField& u) {
  const auto& g = *u.grid();
  const std::size_t n = g.dims();
  const auto d = coordinate_gradient(u);
  SymMatrixField h(u.grid());
  std::vector<double> tmp;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      g.d2(i, j).apply(u.values(), tmp);
      for (std::size_t p = 0; p < g.size(); ++p) h[p](i, j) = tmp[p];
    }
  if (!g.is_flat())
    for (std::size_t p = 0; p < g.size(); ++p)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
          double s = 0.0;
          for (std::size_t k = 0; k < n; ++k) s += g.christoffel(p, k, i, j) * d[k][p];
          h[p](i, j) -= s;
        }
  return h;
}

/// Covariant Hessian at a single node, from the same stencils.
inline SymMatrix covariant_hessian_at(const ScalarField& u, std::size_t p) {
  const auto& g = *u.grid();
  const std::size_t n = g.dims();
  SymMatrix h(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) h(i, j) = g.d2(i, j).row_dot(p, u.values());
  if (!g.is_flat()) {
    std::array<double, 3> d{};
    for (std::size_t k = 0; k < n; ++k) d[k] = g.d1(k).row_dot(p, u.values());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) h(i, j) -= g.christoffel(p, k, i, j) * d[k];
  }
  return h;
}

namespace detail {

/// Eikonal update at node x from one accepted neighbour per axis in `axes`:
/// solves p^T (g_SS)^{-1} p = 1 with p_a = -sgn_a (T - T_a) / h_a. Returns
/// +inf if there is no causal root.
inline double eikonal_update(const SymMatrix& g, const std::vector<std::size_t>& axes, const std::array<double, 3>& t,
                             const std::array<double, 3>& sgn, const std::array<double, 3>& h) {
  const std::size_t m = axes.size();
  Matrix sub(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) sub(i, j) = g(axes[i], axes[j]);
  // invert the (at most 3x3) block
  Matrix inv(m);
  if (m == 1) {
    inv(0, 0) = 1.0 / sub(0, 0);
  } else if (m == 2) {
    const double det = sub(0, 0) * sub(1, 1) - sub(0, 1) * sub(1, 0);
    inv(0, 0) = sub(1, 1) / det;
    inv(1, 1) = sub(0, 0) / det;
    inv(0, 1) = inv(1, 0) = -sub(0, 1) / det;
  } else {
    const double det = sub(0, 0) * (sub(1, 1) * sub(2, 2) - sub(1, 2) * sub(2, 1)) -
                       sub(0, 1) * (sub(1, 0) * sub(2, 2) - sub(1, 2) * sub(2, 0)) +
                       sub(0, 2) * (sub(1, 0) * sub(2, 1) - sub(1, 1) * sub(2, 0));
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        const std::size_t r0 = (j + 1) % 3, r1 = (j + 2) % 3, c0 = (i + 1) % 3, c1 = (i + 2) % 3;
        inv(i, j) = (sub(r0, c0) * sub(r1, c1) - sub(r0, c1) * sub(r1, c0)) / det;
      }
  }
  // p_a = alpha_a T + beta_a
  std::array<double, 3> alpha{}, beta{};
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t a = axes[i];
    alpha[i] = -sgn[a] / h[a];
    beta[i] = sgn[a] * t[a] / h[a];
  }
  double qa = 0.0, qb = 0.0, qc = -1.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      qa += inv(i, j) * alpha[i] * alpha[j];
      qb += inv(i, j) * (alpha[i] * beta[j] + beta[i] * alpha[j]);
      qc += inv(i, j) * beta[i] * beta[j];
    }
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0.0) return std::numeric_limits<double>::infinity();
  const double root = (-qb + std::sqrt(disc)) / (2.0 * qa);
  double tmax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) tmax = std::fmax(tmax, t[axes[i]]);
  if (!(root >= tmax)) return std::numeric_limits<double>::infinity();
  // characteristic must arrive from the chosen neighbours
  for (std::size_t i = 0; i < m; ++i) {
    double v = 0.0;
    for (std::size_t j = 0; j < m; ++j) v += inv(i, j) * (alpha[j] * root + beta[j]);
    if (m > 1 && sgn[axes[i]] * v > 1e-12 * std::fabs(v)) return std::numeric_limits<double>::infinity();
  }
  return root;
}

}  // namespace detail

/// Distance to the non-periodic faces: exact for the flat metric, otherwise a
/// first-order fast-marching solve of g^{ij} d_i d d_j d = 1.
inline ScalarField boundary_distance(const GridPtr& grid) {
  const MetricGrid& g = *grid;
  if (!g.has_boundary()) throw DomainError("boundary_distance: every axis is periodic, there is no boundary");
  ScalarField d(grid, std::numeric_limits<double>::infinity());
  const std::size_t n = g.dims();
  if (g.is_flat()) {
    for (std::size_t p = 0; p < g.size(); ++p) {
      const auto m = g.multi_index(p);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < n; ++a) {
        if (g.periodic(a)) continue;
        // index-based distance keeps boundary nodes at exactly 0
        const double lo = static_cast<double>(m[a]) * g.spacing(a);
        const double hi = static_cast<double>(g.shape(a) - 1 - m[a]) * g.spacing(a);
        best = std::fmin(best, std::fmin(lo, hi));
      }
      d[p] = best;
    }
    return d;
  }

  std::vector<char> accepted(g.size(), 0);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (std::size_t p = 0; p < g.size(); ++p)
    if (g.on_boundary(p)) {
      d[p] = 0.0;
      heap.emplace(0.0, p);
    }
  std::array<double, 3> h{g.spacing(0), g.spacing(1), n > 2 ? g.spacing(2) : 1.0};

  auto neighbour = [&](std::size_t p, std::size_t a, int dir, std::size_t& q) {
    const auto m = g.multi_index(p);
    const std::size_t na = g.shape(a);
    if (dir < 0) {
      if (m[a] == 0) {
        if (!g.periodic(a)) return false;
        q = p + (na - 1) * g.stride(a);
      } else {
        q = p - g.stride(a);
      }
    } else {
      if (m[a] + 1 == na) {
        if (!g.periodic(a)) return false;
        q = p - (na - 1) * g.stride(a);
      } else {
        q = p + g.stride(a);
      }
    }
    return true;
  };

  auto update = [&](std::size_t p) {
    std::array<double, 3> t{};
    std::array<double, 3> sgn{};
    std::vector<std::size_t> avail;
    for (std::size_t a = 0; a < n; ++a) {
      double best = std::numeric_limits<double>::infinity();
      for (int dir : {-1, 1}) {
        std::size_t q = 0;
        if (neighbour(p, a, dir, q) && accepted[q] && d[q] < best) {
          best = d[q];
          sgn[a] = dir;
        }
      }
      t[a] = best;
      if (std::isfinite(best)) avail.push_back(a);
    }
    const SymMatrix& gm = g.metric(p).g();
    double cand = std::numeric_limits<double>::infinity();
    const std::size_t subsets = std::size_t{1} << avail.size();
    for (std::size_t mask = 1; mask < subsets; ++mask) {
      std::vector<std::size_t> axes;
      for (std::size_t i = 0; i < avail.size(); ++i)
        if (mask & (std::size_t{1} << i)) axes.push_back(avail[i]);
      cand = std::fmin(cand, detail::eikonal_update(gm, axes, t, sgn, h));
    }
    return cand;
  };

  while (!heap.empty()) {
    const auto [dist, p] = heap.top();
    heap.pop();
    if (accepted[p] || dist > d[p]) continue;
    accepted[p] = 1;
    for (std::size_t a = 0; a < n; ++a)
      for (int dir : {-1, 1}) {
        std::size_t q = 0;
        if (!neighbour(p, a, dir, q) || accepted[q]) continue;
        const double c = update(q);
        if (c < d[q]) {
          d[q] = c;
          heap.emplace(c, q);
        }
      }
  }
  return d;
}

}  // namespace fne
