#pragma once

// Elementary symmetric functions and the concave operator families
// f(lambda) acting on eigenvalue vectors, with closed-form first and second
// derivatives on their natural open cones.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fne/errors.hpp"
#include "fne/small_matrix.hpp"

namespace fne {

/// Largest spectrum length handled by the lambda-space routines.
inline constexpr std::size_t kMaxSpectrumDim = 16;

/// Ordered eigenvalue vector (lambda_1, ..., lambda_n), n >= 2, finite entries.
class Spectrum {
 public:
  explicit Spectrum(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2 || values_.size() > kMaxSpectrumDim)
      throw DomainError("Spectrum: length must lie in [2, 16], got " +
                        std::to_string(values_.size()));
    for (double v : values_)
      if (!std::isfinite(v)) throw DomainError("Spectrum: non-finite entry");
  }
  Spectrum(std::initializer_list<double> values) : Spectrum(std::vector<double>(values)) {}

  /// Constant spectrum (c, ..., c).
  static Spectrum constant(std::size_t n, double c) { return Spectrum(std::vector<double>(n, c)); }

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vector() const noexcept { return values_; }

  double norm() const noexcept {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s);
  }
  double max_abs() const noexcept {
    double m = 0.0;
    for (double v : values_) m = std::fmax(m, std::fabs(v));
    return m;
  }

  Spectrum scaled(double t) const {
    std::vector<double> out(values_);
    for (auto& v : out) v *= t;
    return Spectrum(std::move(out));
  }

  /// t * a + (1 - t) * b.
  friend Spectrum lerp(const Spectrum& a, const Spectrum& b, double t) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = t * a[i] + (1.0 - t) * b[i];
    return Spectrum(std::move(out));
  }

  friend bool operator==(const Spectrum&, const Spectrum&) = default;

 private:
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Elementary symmetric functions

/// sigma_0..sigma_kmax of the entries of v, skipping indices skip_a and skip_b.
/// One pass of the product recursion prod_i (1 + lambda_i x), O(n kmax).
inline std::vector<double> elementary_symmetric(std::span<const double> v, std::size_t kmax,
                                                std::size_t skip_a = std::size_t(-1),
                                                std::size_t skip_b = std::size_t(-1)) {
  std::vector<double> e(kmax + 1, 0.0);
  e[0] = 1.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i == skip_a || i == skip_b) continue;
    ++used;
    for (std::size_t j = std::min(used, kmax); j >= 1; --j) e[j] += v[i] * e[j - 1];
  }
  return e;
}

/// sigma_k(lambda); sigma_0 = 1.
inline double sigma(std::size_t k, const Spectrum& lambda) {
  if (k > lambda.size())
    throw DomainError("sigma: k = " + std::to_string(k) + " exceeds n = " +
                      std::to_string(lambda.size()));
  return elementary_symmetric(lambda.values(), k)[k];
}

inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

/// Calls visit(indices) for every k-subset i_1 < ... < i_k of {0..n-1}.
template <class Visit>
void for_each_subset(std::size_t n, std::size_t k, Visit&& visit) {
  if (k == 0 || k > n) return;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    visit(std::span<const std::size_t>(idx));
    std::size_t pos = k;
    while (pos > 0 && idx[pos - 1] == n - k + pos - 1) --pos;
    if (pos == 0) return;
    ++idx[pos - 1];
    for (std::size_t j = pos; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

// ---------------------------------------------------------------------------
// Cones

enum class ConeKind { GammaK, PK, PositiveOrthant };

/// Open symmetric convex cone containing the positive orthant.
struct ConeSpec {
  ConeKind kind = ConeKind::GammaK;
  std::size_t k = 1;
  std::size_t n = 2;

  static ConeSpec gamma(std::size_t k, std::size_t n) { return checked({ConeKind::GammaK, k, n}); }
  static ConeSpec pk(std::size_t k, std::size_t n) { return checked({ConeKind::PK, k, n}); }
  static ConeSpec positive_orthant(std::size_t n) {
    return checked({ConeKind::PositiveOrthant, n, n});
  }

  friend bool operator==(const ConeSpec&, const ConeSpec&) = default;

 private:
  static ConeSpec checked(ConeSpec c) {
    if (c.n < 2 || c.n > kMaxSpectrumDim) throw DomainError("ConeSpec: n out of range");
    if (c.k < 1 || c.k > c.n) throw DomainError("ConeSpec: k out of range");
    return c;
  }
};

/// Signed, degree-one homogeneous proxy for the distance to the cone
/// boundary: positive exactly on the open cone, equal to t at t*(1,..,1).
///   Gamma_k: min_j sign(s_j)|s_j|^{1/j},  s_j = sigma_j / C(n, j)
///   P_k:     (sum of the k smallest entries) / k
///   orthant: min entry
inline double cone_margin(const ConeSpec& cone, const Spectrum& lambda) {
  if (lambda.size() != cone.n) throw DomainError("cone_margin: dimension mismatch");
  switch (cone.kind) {
    case ConeKind::GammaK: {
      const auto e = elementary_symmetric(lambda.values(), cone.k);
      double m = std::numeric_limits<double>::infinity();
      for (std::size_t j = 1; j <= cone.k; ++j) {
        const double s = e[j] / binomial(cone.n, j);
        const double r = std::copysign(std::pow(std::fabs(s), 1.0 / static_cast<double>(j)), s);
        m = std::min(m, r);
      }
      return m;
    }
    case ConeKind::PK: {
      std::vector<double> v(lambda.values().begin(), lambda.values().end());
      std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(cone.k), v.end());
      double s = 0.0;
      for (std::size_t i = 0; i < cone.k; ++i) s += v[i];
      return s / static_cast<double>(cone.k);
    }
    case ConeKind::PositiveOrthant:
      return *std::min_element(lambda.values().begin(), lambda.values().end());
  }
  return 0.0;
}

/// Strict membership in the open cone. rel_tol > 0 demands a margin of
/// rel_tol * max|lambda_i| (for grid-level checks where roundoff matters).
inline bool in_cone(const ConeSpec& cone, const Spectrum& lambda, double rel_tol = 0.0) {
  return cone_margin(cone, lambda) > rel_tol * lambda.max_abs();
}

/// Text of the first defining inequality that fails, or empty if lambda is inside.
inline std::string violated_inequality(const ConeSpec& cone, const Spectrum& lambda) {
  switch (cone.kind) {
    case ConeKind::GammaK: {
      const auto e = elementary_symmetric(lambda.values(), cone.k);
      for (std::size_t j = 1; j <= cone.k; ++j)
        if (!(e[j] > 0.0)) return "sigma_" + std::to_string(j) + " > 0";
      return {};
    }
    case ConeKind::PK:
      if (!(cone_margin(cone, lambda) > 0.0))
        return "sum of the " + std::to_string(cone.k) + " smallest entries > 0";
      return {};
    case ConeKind::PositiveOrthant:
      for (std::size_t i = 0; i < lambda.size(); ++i)
        if (!(lambda[i] > 0.0)) return "lambda_" + std::to_string(i + 1) + " > 0";
      return {};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Operator families

enum class OperatorKind {
  Linear,         ///< sigma_1
  Sigma,          ///< plain sigma_k (not concave for k >= 2; evaluation only)
  SigmaRoot,      ///< sigma_k^{1/k}
  SigmaQuotient,  ///< (sigma_k / sigma_l)^{1/(k-l)}
  LogPk,          ///< log prod_{|S|=k} sum_{i in S} lambda_i
  Pk,             ///< prod_{|S|=k} sum_{i in S} lambda_i (evaluation only)
};

class OperatorSpec {
 public:
  static OperatorSpec linear(std::size_t n) { return make(OperatorKind::Linear, 1, 0, n); }
  static OperatorSpec sigma(std::size_t k, std::size_t n) { return make(OperatorKind::Sigma, k, 0, n); }
  static OperatorSpec sigma_root(std::size_t k, std::size_t n) {
    return make(OperatorKind::SigmaRoot, k, 0, n);
  }
  /// l = 0 is the sigma_k^{1/k} operator.
  static OperatorSpec sigma_quotient(std::size_t k, std::size_t l, std::size_t n) {
    return make(OperatorKind::SigmaQuotient, k, l, n);
  }
  static OperatorSpec log_pk(std::size_t k, std::size_t n) { return make(OperatorKind::LogPk, k, 0, n); }
  static OperatorSpec pk(std::size_t k, std::size_t n) { return make(OperatorKind::Pk, k, 0, n); }

  OperatorKind kind() const noexcept { return kind_; }
  std::size_t k() const noexcept { return k_; }
  std::size_t l() const noexcept { return l_; }
  std::size_t n() const noexcept { return n_; }

  ConeSpec cone() const {
    switch (kind_) {
      case OperatorKind::LogPk:
      case OperatorKind::Pk:
        return ConeSpec::pk(k_, n_);
      default:
        return ConeSpec::gamma(k_, n_);
    }
  }

  /// sup over the cone boundary of f: -inf for log P_k, 0 otherwise.
  double sup_on_cone_boundary() const noexcept {
    return kind_ == OperatorKind::LogPk ? -std::numeric_limits<double>::infinity() : 0.0;
  }

  /// False for the evaluation-only kinds (plain sigma_k with k >= 2, plain P_k).
  bool verified_concave() const noexcept {
    if (kind_ == OperatorKind::Sigma) return k_ == 1;
    return kind_ != OperatorKind::Pk || binomial(n_, k_) == 1.0;
  }

  /// f(t lambda) = t^d f(lambda) for the positively homogeneous kinds; 0 for
  /// log P_k, where instead f(t lambda) = f(lambda) + C(n,k) log t.
  double homogeneity_degree() const noexcept {
    switch (kind_) {
      case OperatorKind::Linear:
      case OperatorKind::SigmaRoot:
      case OperatorKind::SigmaQuotient:
        return 1.0;
      case OperatorKind::Sigma:
        return static_cast<double>(k_);
      case OperatorKind::Pk:
        return binomial(n_, k_);
      case OperatorKind::LogPk:
        return 0.0;
    }
    return 0.0;
  }

  std::string name() const {
    switch (kind_) {
      case OperatorKind::Linear: return "linear";
      case OperatorKind::Sigma: return "sigma";
      case OperatorKind::SigmaRoot: return "sigma_root";
      case OperatorKind::SigmaQuotient: return "sigma_quotient";
      case OperatorKind::LogPk: return "log_pk";
      case OperatorKind::Pk: return "pk";
    }
    return "?";
  }

  friend bool operator==(const OperatorSpec&, const OperatorSpec&) = default;

 private:
  static OperatorSpec make(OperatorKind kind, std::size_t k, std::size_t l, std::size_t n) {
    if (n < 2 || n > kMaxSpectrumDim) throw DomainError("OperatorSpec: n must lie in [2, 16]");
    if (k < 1 || k > n) throw DomainError("OperatorSpec: k must satisfy 1 <= k <= n");
    if (kind == OperatorKind::SigmaQuotient && l >= k)
      throw DomainError("OperatorSpec: sigma_quotient needs 0 <= l < k");
    OperatorSpec s;
    s.kind_ = kind;
    s.k_ = k;
    s.l_ = l;
    s.n_ = n;
    return s;
  }

  OperatorKind kind_ = OperatorKind::Linear;
  std::size_t k_ = 1;
  std::size_t l_ = 0;
  std::size_t n_ = 2;
};

namespace detail {

inline void require_admissible(const OperatorSpec& spec, const Spectrum& lambda, const char* who) {
  if (lambda.size() != spec.n())
    throw DomainError(std::string(who) + ": spectrum length " + std::to_string(lambda.size()) +
                      " does not match operator dimension " + std::to_string(spec.n()));
  const ConeSpec cone = spec.cone();
  if (!in_cone(cone, lambda))
    throw AdmissibilityError(std::string(who) + ": spectrum outside the open cone",
                             lambda.vector(), violated_inequality(cone, lambda));
}

/// The sigma_k^{1/k} and quotient kinds written as prod_m sigma_m^{a_m}.
struct PowerTerm {
  std::size_t m;
  double a;
};

inline std::vector<PowerTerm> power_terms(const OperatorSpec& s) {
  if (s.kind() == OperatorKind::SigmaRoot || s.l() == 0)
    return {{s.k(), 1.0 / static_cast<double>(s.k())}};
  const double p = 1.0 / static_cast<double>(s.k() - s.l());
  return {{s.k(), p}, {s.l(), -p}};
}

inline bool is_power_kind(const OperatorSpec& s) {
  return s.kind() == OperatorKind::SigmaRoot || s.kind() == OperatorKind::SigmaQuotient;
}

/// Gradient and Hessian of sigma_m (m >= 1).
inline void sigma_derivatives(std::size_t m, const Spectrum& lambda, std::vector<double>& grad,
                              DynMatrix* hess) {
  const std::size_t n = lambda.size();
  grad.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    grad[i] = elementary_symmetric(lambda.values(), m - 1, i)[m - 1];
  if (hess == nullptr) return;
  *hess = DynMatrix(n);
  if (m < 2) return;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = elementary_symmetric(lambda.values(), m - 2, i, j)[m - 2];
      (*hess)(i, j) = v;
      (*hess)(j, i) = v;
    }
}

/// log f for the product-form kinds (power kinds, P_k), with its gradient and Hessian.
inline double log_form(const OperatorSpec& spec, const Spectrum& lambda, std::vector<double>* g,
                       DynMatrix* h) {
  const std::size_t n = lambda.size();
  if (g) g->assign(n, 0.0);
  if (h) *h = DynMatrix(n);
  double logf = 0.0;
  if (spec.kind() == OperatorKind::LogPk || spec.kind() == OperatorKind::Pk) {
    for_each_subset(n, spec.k(), [&](std::span<const std::size_t> sub) {
      double s = 0.0;
      for (std::size_t i : sub) s += lambda[i];
      logf += std::log(s);
      const double inv = 1.0 / s;
      if (g)
        for (std::size_t i : sub) (*g)[i] += inv;
      if (h)
        for (std::size_t i : sub)
          for (std::size_t j : sub) (*h)(i, j) -= inv * inv;
    });
    return logf;
  }
  std::vector<double> dsig;
  DynMatrix d2sig;
  for (const PowerTerm& t : power_terms(spec)) {
    const double s = sigma(t.m, lambda);
    logf += t.a * std::log(s);
    if (!g && !h) continue;
    sigma_derivatives(t.m, lambda, dsig, h ? &d2sig : nullptr);
    for (std::size_t i = 0; i < n; ++i) {
      if (g) (*g)[i] += t.a * dsig[i] / s;
      if (h)
        for (std::size_t j = 0; j < n; ++j)
          (*h)(i, j) += t.a * (d2sig(i, j) / s - dsig[i] * dsig[j] / (s * s));
    }
  }
  return logf;
}

// sigma_1 written as a root or quotient: the log form would only add
// rounding noise to an exactly constant gradient.
inline bool is_first_order_root(const OperatorSpec& spec) {
  return (spec.kind() == OperatorKind::SigmaRoot || spec.kind() == OperatorKind::SigmaQuotient) && spec.k() == 1;
}

}  // namespace detail

/// f(lambda). Throws AdmissibilityError outside the open cone.
inline double f_eval(const OperatorSpec& spec, const Spectrum& lambda) {
  detail::require_admissible(spec, lambda, "f_eval");
  switch (spec.kind()) {
    case OperatorKind::Linear:
      return sigma(1, lambda);
    case OperatorKind::Sigma:
      return sigma(spec.k(), lambda);
    case OperatorKind::SigmaRoot:
      return std::pow(sigma(spec.k(), lambda), 1.0 / static_cast<double>(spec.k()));
    case OperatorKind::SigmaQuotient: {
      if (spec.l() == 0)
        return std::pow(sigma(spec.k(), lambda), 1.0 / static_cast<double>(spec.k()));
      return std::pow(sigma(spec.k(), lambda) / sigma(spec.l(), lambda),
                      1.0 / static_cast<double>(spec.k() - spec.l()));
    }
    case OperatorKind::LogPk:
      return detail::log_form(spec, lambda, nullptr, nullptr);
    case OperatorKind::Pk: {
      double p = 1.0;
      for_each_subset(lambda.size(), spec.k(), [&](std::span<const std::size_t> sub) {
        double s = 0.0;
        for (std::size_t i : sub) s += lambda[i];
        p *= s;
      });
      return p;
    }
  }
  return 0.0;
}

/// (f_1, ..., f_n), f_i = df/dlambda_i.
inline std::vector<double> f_grad(const OperatorSpec& spec, const Spectrum& lambda) {
  detail::require_admissible(spec, lambda, "f_grad");
  const std::size_t n = lambda.size();
  std::vector<double> g;
  if (detail::is_first_order_root(spec)) return std::vector<double>(n, 1.0);
  switch (spec.kind()) {
    case OperatorKind::Linear:
      return std::vector<double>(n, 1.0);
    case OperatorKind::Sigma:
      detail::sigma_derivatives(spec.k(), lambda, g, nullptr);
      return g;
    case OperatorKind::LogPk:
      detail::log_form(spec, lambda, &g, nullptr);
      return g;
    case OperatorKind::SigmaRoot:
    case OperatorKind::SigmaQuotient:
    case OperatorKind::Pk: {
      detail::log_form(spec, lambda, &g, nullptr);
      const double f = f_eval(spec, lambda);
      for (auto& v : g) v *= f;
      return g;
    }
  }
  return g;
}

/// Hessian d^2 f / dlambda_i dlambda_j.
inline DynMatrix f_hess(const OperatorSpec& spec, const Spectrum& lambda) {
  detail::require_admissible(spec, lambda, "f_hess");
  const std::size_t n = lambda.size();
  DynMatrix h(n);
  std::vector<double> g;
  if (detail::is_first_order_root(spec)) return h;
  switch (spec.kind()) {
    case OperatorKind::Linear:
      return h;
    case OperatorKind::Sigma:
      detail::sigma_derivatives(spec.k(), lambda, g, &h);
      return h;
    case OperatorKind::LogPk:
      detail::log_form(spec, lambda, nullptr, &h);
      return h;
    case OperatorKind::SigmaRoot:
    case OperatorKind::SigmaQuotient:
    case OperatorKind::Pk: {
      // f = exp(L): f_ij = f (L_i L_j + L_ij)
      detail::log_form(spec, lambda, &g, &h);
      const double f = f_eval(spec, lambda);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) h(i, j) = f * (g[i] * g[j] + h(i, j));
      return h;
    }
  }
  return h;
}

}  // namespace fne
