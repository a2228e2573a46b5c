#pragma once

// Matrix-level operator F(A) = f(lambda[A]) with eigenvalues taken with
// respect to a metric g, its derivative F^{ij}, and the eigenvalue
// inequalities used by the boundary and global second-order estimates.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "fne/errors.hpp"
#include "fne/jacobi.hpp"
#include "fne/small_matrix.hpp"
#include "fne/symfun.hpp"

namespace fne {

/// Riemannian metric at a point: g, its inverse, and gamma = (g^{-1})^{1/2}
/// so that gamma * gamma = g^{-1}.
class MetricTensor {
 public:
  static MetricTensor identity(std::size_t n) {
    MetricTensor m;
    m.g_ = SymMatrix::identity(n);
    m.g_inv_ = m.g_;
    m.gamma_ = m.g_;
    m.flat_ = true;
    return m;
  }

  /// Throws DomainError unless g is symmetric positive definite.
  static MetricTensor from(const SymMatrix& g) {
    const std::size_t n = g.size();
    // Cholesky as the positive-definiteness test.
    Matrix l(n);
    for (std::size_t j = 0; j < n; ++j) {
      double d = g(j, j);
      for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
      if (!(d > 0.0)) throw DomainError("MetricTensor: g is not positive definite");
      l(j, j) = std::sqrt(d);
      for (std::size_t i = j + 1; i < n; ++i) {
        double s = g(i, j);
        for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
        l(i, j) = s / l(j, j);
      }
    }
    const auto eig = jacobi_eigen(g.dense());
    MetricTensor m;
    m.g_ = g;
    m.g_inv_ = SymMatrix(n);
    m.gamma_ = SymMatrix(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        double inv = 0.0;
        double root = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vv = eig.vectors(i, k) * eig.vectors(j, k);
          inv += vv / eig.values[k];
          root += vv / std::sqrt(eig.values[k]);
        }
        m.g_inv_(i, j) = inv;
        m.gamma_(i, j) = root;
      }
    bool flat = true;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) flat = flat && g(i, j) == (i == j ? 1.0 : 0.0);
    m.flat_ = flat;
    return m;
  }

  std::size_t size() const noexcept { return g_.size(); }
  const SymMatrix& g() const noexcept { return g_; }
  const SymMatrix& g_inv() const noexcept { return g_inv_; }
  const SymMatrix& gamma() const noexcept { return gamma_; }
  bool is_identity() const noexcept { return flat_; }

  /// gamma A gamma: the matrix whose ordinary eigenvalues are those of A w.r.t. g.
  SymMatrix normalize(const SymMatrix& a) const { return flat_ ? a : congruence(gamma_, a); }

 private:
  SymMatrix g_, g_inv_, gamma_;
  bool flat_ = false;
};

struct MetricEigen {
  Spectrum lambda;
  Matrix frame;  ///< orthonormal eigenframe of gamma A gamma, columns match lambda
};

/// Eigenvalues of A with respect to g (those of gamma A gamma, equivalently of
/// g^{-1} A), descending, with the eigenframe of gamma A gamma.
inline MetricEigen eig_metric(const SymMatrix& a, const MetricTensor& g) {
  if (a.size() != g.size()) throw DomainError("eig_metric: dimension mismatch");
  if (a.size() < 2) throw DomainError("eig_metric: n must be at least 2");
  auto eig = jacobi_eigen(g.normalize(a).dense());
  return {Spectrum(std::move(eig.values)), eig.vectors};
}

/// Everything the solver needs at one point: F, the eigen data and F^{ij}.
struct SpectralPoint {
  MetricEigen eigen;
  double value = 0.0;
  std::vector<double> fi;  ///< f_i at lambda, averaged within eigenvalue clusters
  SymMatrix dF;            ///< F^{ij} = dF / dA_ij
};

/// Eigenvalues closer than this (relative to max(1, |lambda|_inf)) are
/// treated as one repeated eigenvalue when forming F^{ij}.
inline constexpr double kClusterTolerance = 1e-9;

inline SpectralPoint spectral_point(const SymMatrix& a, const MetricTensor& g, const OperatorSpec& spec) {
  SpectralPoint p{eig_metric(a, g), 0.0, {}, SymMatrix(a.size())};
  const Spectrum& lambda = p.eigen.lambda;
  if (lambda.size() != spec.n()) throw DomainError("spectral_point: operator dimension mismatch");
  const ConeSpec cone = spec.cone();
  if (!in_cone(cone, lambda))
    throw AdmissibilityError("F: eigenvalues outside the open cone", lambda.vector(),
                             violated_inequality(cone, lambda));
  p.value = f_eval(spec, lambda);
  p.fi = f_grad(spec, lambda);

  // For a symmetric f the gradient of F at a repeated eigenvalue is the
  // common f_i on that eigenspace; averaging makes the formula exact and
  // frame-independent there.
  const std::size_t n = lambda.size();
  const double tol = kClusterTolerance * std::fmax(1.0, lambda.max_abs());
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start + 1;
    while (end < n && lambda[end - 1] - lambda[end] <= tol) ++end;
    if (end - start > 1) {
      double avg = 0.0;
      for (std::size_t i = start; i < end; ++i) avg += p.fi[i];
      avg /= static_cast<double>(end - start);
      for (std::size_t i = start; i < end; ++i) p.fi[i] = avg;
    }
    start = end;
  }

  SymMatrix inner(n);  // Q diag(f) Q^T
  const Matrix& q = p.eigen.frame;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < n; ++k) v += q(i, k) * p.fi[k] * q(j, k);
      inner(i, j) = v;
    }
  p.dF = g.is_identity() ? inner : congruence(g.gamma(), inner);
  return p;
}

/// F(A) = f(lambda[A]).
inline double big_f(const SymMatrix& a, const MetricTensor& g, const OperatorSpec& spec) {
  const MetricEigen e = eig_metric(a, g);
  if (!in_cone(spec.cone(), e.lambda))
    throw AdmissibilityError("big_f: eigenvalues outside the open cone", e.lambda.vector(),
                             violated_inequality(spec.cone(), e.lambda));
  return f_eval(spec, e.lambda);
}

/// F^{ij}(A): d/dt F(A + tB) at t=0 equals sum_ij F^{ij} B_ij for symmetric B.
inline SymMatrix big_f_grad(const SymMatrix& a, const MetricTensor& g, const OperatorSpec& spec) {
  return spectral_point(a, g, spec).dF;
}

struct Prop26Ratio {
  double ratio = 0.0;  ///< +inf when the right-hand sum vanishes
  std::size_t r = 0;   ///< excluded index (0-based, in descending-eigenvalue order)
  double lhs = 0.0;    ///< sum_{l<n} F^{ij} A_il A_lj in the orthonormal frame
  double rhs_sum = 0.0;
};

/// Largest c with sum_{l<n} F^{ij} A_il A_lj >= c sum_{i != r} f_i lambda_i^2,
/// over the ambient coordinate frame (e_n is the distinguished direction),
/// with r chosen to maximize c.
inline Prop26Ratio prop26_ratio(const SymMatrix& a, const MetricTensor& g, const OperatorSpec& spec) {
  const SpectralPoint p = spectral_point(a, g, spec);
  const std::size_t n = a.size();
  const SymMatrix m = g.normalize(a);
  const Matrix& q = p.eigen.frame;
  SymMatrix inner(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < n; ++k) v += q(i, k) * p.fi[k] * q(j, k);
      inner(i, j) = v;
    }
  double lhs = 0.0;
  for (std::size_t l = 0; l + 1 < n; ++l)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) lhs += inner(i, j) * m(i, l) * m(l, j);

  const Spectrum& lambda = p.eigen.lambda;
  double total = 0.0;
  std::size_t r = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = p.fi[i] * lambda[i] * lambda[i];
    total += t;
    if (t > best) {
      best = t;
      r = i;
    }
  }
  Prop26Ratio out;
  out.r = r;
  out.lhs = lhs;
  out.rhs_sum = total - best;
  out.ratio = out.rhs_sum > 0.0 ? lhs / out.rhs_sum : std::numeric_limits<double>::infinity();
  return out;
}

/// min over r with lambda_r < 0 of sum_{i!=r} f_i lambda_i^2 - (1/n) sum_i f_i lambda_i^2,
/// normalized by sum_i f_i lambda_i^2; +inf when no entry is negative.
inline double lemma27_slack(const Spectrum& lambda, const OperatorSpec& spec) {
  const auto fi = f_grad(spec, lambda);
  const std::size_t n = lambda.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += fi[i] * lambda[i] * lambda[i];
  double slack = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < n; ++r) {
    if (!(lambda[r] < 0.0)) continue;
    const double without = total - fi[r] * lambda[r] * lambda[r];
    slack = std::fmin(slack, (without - total / static_cast<double>(n)) / total);
  }
  return slack;
}

/// sum_{i != r} f_i lambda_i^2 >= (1/n) sum f_i lambda_i^2 for every r with lambda_r < 0.
inline bool lemma27_check(const Spectrum& lambda, const OperatorSpec& spec) {
  return lemma27_slack(lambda, spec) >= -1e-12;
}

/// Empirical constant of
///   sum f_i|lambda_i| <= eps sum_{i!=r} f_i lambda_i^2 + C (1 + eps^{-1} sum f_i):
/// the max over samples (and over r unless one is fixed) of
///   (sum f_i|lambda_i| - eps sum_{i!=r} f_i lambda_i^2) / (1 + eps^{-1} sum f_i).
inline double cor28_constant(const OperatorSpec& spec, double epsilon, std::span<const Spectrum> samples,
                             std::optional<std::size_t> fixed_r = std::nullopt) {
  if (!(epsilon > 0.0)) throw ParameterError("cor28_constant: epsilon must be positive");
  double best = -std::numeric_limits<double>::infinity();
  for (const Spectrum& lambda : samples) {
    const auto fi = f_grad(spec, lambda);
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    double f_sum = 0.0;
    double max_sq = 0.0;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
      abs_sum += fi[i] * std::fabs(lambda[i]);
      const double sq = fi[i] * lambda[i] * lambda[i];
      sq_sum += sq;
      max_sq = std::fmax(max_sq, sq);
      f_sum += fi[i];
    }
    const double removed =
        fixed_r ? fi[*fixed_r] * lambda[*fixed_r] * lambda[*fixed_r] : max_sq;
    const double c = (abs_sum - epsilon * (sq_sum - removed)) / (1.0 + f_sum / epsilon);
    best = std::fmax(best, c);
  }
  return best;
}

}  // namespace fne
