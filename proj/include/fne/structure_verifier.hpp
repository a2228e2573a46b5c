#pragma once

// Sampled checks of the structure conditions on f and of admissibility and
// subsolution properties of grid fields. Every check is a semi-decision: a
// pass says the stated margin held on every seeded sample.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fne/cone_geometry.hpp"
#include "fne/geometry_field.hpp"
#include "fne/jacobi.hpp"
#include "fne/matrix_calculus.hpp"

namespace fne {

enum class ConditionId {
  Monotone,                // f_i > 0
  Concave,                 // f concave
  Delta,                   // inf psi - sup over the cone boundary of f > 0
  SumFiLambdai,            // sum f_i lambda_i >= 0
  BoundedBelowAtZero,      // f stays bounded below as lambda -> 0
  SumFiDivergent,          // sum f_i -> infinity along the level set
  SumFiBounded,            // sum f_i >= delta_sigma > 0 on the level set
  SumFiLambdaSqDivergent,  // sum f_i lambda_i^2 -> infinity along the level set
  NegativeEntryShare,      // f_j >= delta0 sum f_i where lambda_j < 0
  Admissible,
  Subsolution,
  SubsolutionCone,
  Barrier,  // boundary barrier diagnostic of the solver
};

inline std::string condition_name(ConditionId id) {
  switch (id) {
    case ConditionId::Monotone: return "monotone";
    case ConditionId::Concave: return "concave";
    case ConditionId::Delta: return "delta";
    case ConditionId::SumFiLambdai: return "sum_fi_lambdai";
    case ConditionId::BoundedBelowAtZero: return "bounded_below_at_zero";
    case ConditionId::SumFiDivergent: return "sum_fi_divergent";
    case ConditionId::SumFiBounded: return "sum_fi_bounded";
    case ConditionId::SumFiLambdaSqDivergent: return "sum_fi_lambda_sq_divergent";
    case ConditionId::NegativeEntryShare: return "negative_entry_share";
    case ConditionId::Admissible: return "admissible";
    case ConditionId::Subsolution: return "subsolution";
    case ConditionId::SubsolutionCone: return "subsolution_cone";
    case ConditionId::Barrier: return "barrier";
  }
  return "?";
}

inline std::optional<ConditionId> parse_condition(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(ConditionId::Barrier); ++i) {
    const auto id = static_cast<ConditionId>(i);
    if (condition_name(id) == s) return id;
  }
  return std::nullopt;
}

struct Witness {
  std::vector<double> point;  ///< spectrum (or lambda[U] at a grid node)
  double value = 0.0;         ///< the checked quantity at that point
  std::int64_t node = -1;     ///< grid node, -1 for lambda-space samples
};

struct Certificate {
  ConditionId condition = ConditionId::Monotone;
  std::optional<OperatorSpec> spec;
  int n_samples = 0;
  std::uint64_t seed = 0;
  double margin = 0.0;     ///< worst-case slack
  double tolerance = 0.0;  ///< pass iff margin >= tolerance (strictly > for strict conditions)
  bool pass = false;
  std::vector<Witness> witnesses;
  std::vector<std::pair<std::string, double>> details;
  std::string note;

  double detail(const std::string& key) const {
    for (const auto& [k, v] : details)
      if (k == key) return v;
    return std::numeric_limits<double>::quiet_NaN();
  }
};

namespace detail {

inline Certificate make_certificate(ConditionId id, const OperatorSpec& spec, int n_samples, std::uint64_t seed) {
  Certificate c;
  c.condition = id;
  c.spec = spec;
  c.n_samples = n_samples;
  c.seed = seed;
  c.margin = std::numeric_limits<double>::infinity();
  return c;
}

inline void require_samples(int n, const char* who) {
  if (n < 1) throw ParameterError(std::string(who) + ": need at least one sample");
}

// Default level for level-set checks: the value of f at (1, ..., 1).
inline double unit_level(const OperatorSpec& spec) { return f_eval(spec, Spectrum::constant(spec.n(), 1.0)); }

}  // namespace detail

/// margin = min over samples and i of f_i; pass iff margin > 0.
inline Certificate verify_monotone(const OperatorSpec& spec, int n_samples, std::uint64_t seed) {
  detail::require_samples(n_samples, "verify_monotone");
  auto c = detail::make_certificate(ConditionId::Monotone, spec, n_samples, seed);
  RandomStream rng(seed);
  Witness w;
  for (int s = 0; s < n_samples; ++s) {
    const Spectrum l = sample_cone_point(spec.cone(), rng);
    const auto fi = f_grad(spec, l);
    const double m = *std::min_element(fi.begin(), fi.end());
    if (m < c.margin) {
      c.margin = m;
      w = {l.vector(), m, -1};
    }
  }
  c.witnesses.push_back(std::move(w));
  c.pass = c.margin > c.tolerance;
  return c;
}

/// Largest eigenvalue of the lambda-space Hessian, normalized by its
/// Frobenius norm so that scale does not matter; margin = -max of that ratio.
/// Pass iff margin >= -1e-8. The raw eigenvalue at the worst sample is kept
/// as the witness value and as detail "max_hessian_eigenvalue".
inline Certificate verify_concave(const OperatorSpec& spec, int n_samples, std::uint64_t seed) {
  detail::require_samples(n_samples, "verify_concave");
  auto c = detail::make_certificate(ConditionId::Concave, spec, n_samples, seed);
  c.tolerance = -1e-8;
  RandomStream rng(seed);
  Witness w;
  for (int s = 0; s < n_samples; ++s) {
    const Spectrum l = sample_cone_point(spec.cone(), rng);
    const DynMatrix h = f_hess(spec, l);
    const double scale = h.frobenius_norm();
    if (scale == 0.0) {
      if (0.0 < c.margin) {
        c.margin = 0.0;
        w = {l.vector(), 0.0, -1};
      }
      continue;
    }
    const double top = jacobi_eigen(h).values.front();
    const double m = -top / scale;
    if (m < c.margin) {
      c.margin = m;
      w = {l.vector(), top, -1};
    }
  }
  c.witnesses.push_back(w);
  c.details.emplace_back("max_hessian_eigenvalue", w.value);
  c.pass = c.margin >= c.tolerance;
  return c;
}

/// margin = min sampled sum f_i lambda_i; pass iff margin >= -1e-12.
inline Certificate verify_sum_fi_lambdai(const OperatorSpec& spec, int n_samples, std::uint64_t seed) {
  detail::require_samples(n_samples, "verify_sum_fi_lambdai");
  auto c = detail::make_certificate(ConditionId::SumFiLambdai, spec, n_samples, seed);
  c.tolerance = -1e-12;
  RandomStream rng(seed);
  Witness w;
  for (int s = 0; s < n_samples; ++s) {
    const Spectrum l = sample_cone_point(spec.cone(), rng);
    const auto fi = f_grad(spec, l);
    double v = 0.0;
    for (std::size_t i = 0; i < fi.size(); ++i) v += fi[i] * l[i];
    if (v < c.margin) {
      c.margin = v;
      w = {l.vector(), v, -1};
    }
  }
  c.witnesses.push_back(std::move(w));
  c.pass = c.margin >= c.tolerance;
  return c;
}

/// f_j >= delta0 sum f_i at level-set points with lambda_j < 0.
///
/// min_radius = 0 checks the whole level set (norms log-uniform between the
/// symmetric level point and 1e3 times its norm); min_radius > 0 checks only
/// |lambda| in [min_radius, 16 min_radius], the "sufficiently large" regime.
/// margin = min of f_j / sum f_i - delta0 over negative entries; pass iff
/// margin >= 0. With no negative entry among the samples the condition is
/// vacuous: margin = +inf, pass, and the note says so.
inline Certificate verify_negative_entry_share(const OperatorSpec& spec, double delta0, double sigma, int n_samples,
                                               std::uint64_t seed, double min_radius = 0.0) {
  if (!(delta0 > 0.0 && delta0 < 1.0)) throw ParameterError("verify_negative_entry_share: delta0 must lie in (0, 1)");
  detail::require_samples(n_samples, "verify_negative_entry_share");
  if (min_radius < 0.0) throw ParameterError("verify_negative_entry_share: min_radius must be >= 0");
  auto c = detail::make_certificate(ConditionId::NegativeEntryShare, spec, n_samples, seed);
  LevelSetSampler sampler(spec, sigma, seed);
  Witness w;
  int hits = 0;
  for (int s = 0; s < n_samples; ++s) {
    const double r0 = sampler.base_norm() * (1.0 + 1e-9);
    const Spectrum l = min_radius > 0.0 ? sampler.sample_beyond(std::fmax(min_radius, r0))
                                        : sampler.sample_at_norm(sampler.rng().log_uniform(r0, 1e3 * r0));
    const auto fi = f_grad(spec, l);
    double sum = 0.0;
    for (double v : fi) sum += v;
    bool any = false;
    for (std::size_t j = 0; j < fi.size(); ++j) {
      if (!(l[j] < 0.0)) continue;
      any = true;
      const double m = fi[j] / sum - delta0;
      if (m < c.margin) {
        c.margin = m;
        w = {l.vector(), fi[j] / sum, -1};
      }
    }
    hits += any;
  }
  c.details.emplace_back("sigma", sigma);
  c.details.emplace_back("delta0", delta0);
  c.details.emplace_back("min_radius", min_radius);
  c.details.emplace_back("samples_with_negative_entry", hits);
  if (hits == 0) c.note = "no sample had a negative entry; condition vacuous on this sample set";
  else c.witnesses.push_back(std::move(w));
  c.pass = c.margin >= c.tolerance;
  return c;
}

inline Certificate verify_negative_entry_share(const OperatorSpec& spec, double delta0, int n_samples,
                                               std::uint64_t seed) {
  return verify_negative_entry_share(spec, delta0, detail::unit_level(spec), n_samples, seed);
}

/// Default radii for the growth checks: multiples of the norm of the
/// symmetric level point (decreasing fractions of it for the check at zero).
inline std::vector<double> default_growth_radii(const OperatorSpec& spec, ConditionId which, double sigma) {
  const double r0 = level_point(spec, sigma, Spectrum::constant(spec.n(), 1.0)).norm();
  if (which == ConditionId::BoundedBelowAtZero) return {1e-4 * r0, 1e-3 * r0, 1e-2 * r0, 1e-1 * r0, r0};
  return {2 * r0, 8 * r0, 32 * r0, 128 * r0, 512 * r0};
}

/// Trend of a functional over level-set samples at increasing radii.
///
///   SumFiDivergent / SumFiLambdaSqDivergent: m_k = min over samples at
///     |lambda| = r_k; pass iff m_k strictly increases and m_last > 10 m_1.
///   SumFiBounded: delta_sigma = min over all radii of m_k; pass iff > 0.
///   BoundedBelowAtZero: radii are read from the largest to the smallest and
///     m_k = min f over a fixed set of cone directions scaled to norm r_k
///     (no level set involved). The floor L0 = m at the smallest radius is
///     reported; pass iff the last decrement is at most half the first, i.e.
///     the minima settle instead of falling at a steady rate.
///
/// The per-radius minima are reported as details "m_0", "m_1", ...
inline Certificate verify_growth(const OperatorSpec& spec, ConditionId which, double sigma,
                                 const std::vector<double>& radii, int n_samples, std::uint64_t seed) {
  if (which != ConditionId::SumFiDivergent && which != ConditionId::SumFiBounded &&
      which != ConditionId::SumFiLambdaSqDivergent && which != ConditionId::BoundedBelowAtZero)
    throw ParameterError("verify_growth: not a growth condition: " + condition_name(which));
  if (radii.size() < 2) throw ParameterError("verify_growth: need at least two radii");
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (!(radii[i] > 0.0) || (i > 0 && !(radii[i] > radii[i - 1])))
      throw ParameterError("verify_growth: radii must be positive and increasing");
  detail::require_samples(n_samples, "verify_growth");
  auto c = detail::make_certificate(which, spec, n_samples, seed);
  c.details.emplace_back("sigma", sigma);

  std::vector<double> mins;
  std::vector<Witness> worst;
  if (which == ConditionId::BoundedBelowAtZero) {
    RandomStream rng(seed);
    std::vector<Spectrum> dirs;
    for (int s = 0; s < n_samples; ++s) {
      const Spectrum l = sample_cone_point(spec.cone(), rng);
      dirs.push_back(l.scaled(1.0 / l.norm()));
    }
    for (auto it = radii.rbegin(); it != radii.rend(); ++it) {
      double m = std::numeric_limits<double>::infinity();
      Witness w;
      for (const auto& d : dirs) {
        const Spectrum l = d.scaled(*it);
        const double v = f_eval(spec, l);
        if (v < m) {
          m = v;
          w = {l.vector(), v, -1};
        }
      }
      mins.push_back(m);
      worst.push_back(std::move(w));
    }
    const double first = mins[0] - mins[1];
    const double last = mins[mins.size() - 2] - mins.back();
    c.margin = mins.back();
    c.details.emplace_back("L0", mins.back());
    c.details.emplace_back("first_decrement", first);
    c.details.emplace_back("last_decrement", last);
    c.tolerance = -std::numeric_limits<double>::infinity();
    c.pass = std::isfinite(mins.back()) && last <= 0.5 * std::fmax(first, 0.0) + 1e-12 * std::fabs(mins.back());
  } else {
    LevelSetSampler sampler(spec, sigma, seed);
    for (double r : radii) {
      double m = std::numeric_limits<double>::infinity();
      Witness w;
      for (int s = 0; s < n_samples; ++s) {
        const Spectrum l = sampler.sample_at_norm(std::fmax(r, sampler.base_norm() * (1.0 + 1e-9)));
        const auto fi = f_grad(spec, l);
        double v = 0.0;
        for (std::size_t i = 0; i < fi.size(); ++i)
          v += which == ConditionId::SumFiLambdaSqDivergent ? fi[i] * l[i] * l[i] : fi[i];
        if (v < m) {
          m = v;
          w = {l.vector(), v, -1};
        }
      }
      mins.push_back(m);
      worst.push_back(std::move(w));
    }
    if (which == ConditionId::SumFiBounded) {
      c.margin = *std::min_element(mins.begin(), mins.end());
      c.details.emplace_back("delta_sigma", c.margin);
      c.pass = c.margin > 0.0;
    } else {
      bool increasing = true;
      for (std::size_t i = 1; i < mins.size(); ++i) increasing = increasing && mins[i] > mins[i - 1];
      // margin: how far the last minimum is above ten times the first
      c.margin = mins.back() - 10.0 * mins.front();
      c.pass = increasing && c.margin > 0.0;
      c.details.emplace_back("increasing", increasing ? 1.0 : 0.0);
    }
  }
  for (std::size_t i = 0; i < mins.size(); ++i) c.details.emplace_back("m_" + std::to_string(i), mins[i]);
  c.witnesses.push_back(worst.back());
  return c;
}

/// inf psi - sup over the cone boundary of f; pass iff positive.
inline double delta_psi_f(const ScalarField& psi_lower, const OperatorSpec& spec) {
  return psi_lower.min() - spec.sup_on_cone_boundary();
}

inline Certificate verify_delta(const ScalarField& psi_lower, const OperatorSpec& spec) {
  auto c = detail::make_certificate(ConditionId::Delta, spec, 0, 0);
  c.margin = delta_psi_f(psi_lower, spec);
  c.pass = c.margin > 0.0;
  return c;
}

/// margin = min over nodes of cone_margin(lambda[U]) with lambda taken
/// relative to the grid metric; pass iff margin > 0. With interior_only the
/// Dirichlet boundary nodes are skipped.
inline Certificate verify_admissible_field(const SymMatrixField& u, const ConeSpec& cone, bool interior_only = false) {
  const MetricGrid& g = *u.grid();
  if (cone.n != g.dims()) throw DomainError("verify_admissible_field: cone dimension differs from the grid");
  Certificate c;
  c.condition = ConditionId::Admissible;
  c.n_samples = static_cast<int>(g.size());
  c.margin = std::numeric_limits<double>::infinity();
  Witness w;
  for (std::size_t p = 0; p < g.size(); ++p) {
    if (interior_only && g.on_boundary(p)) continue;
    const Spectrum l = eig_metric(u[p], g.metric(p)).lambda;
    const double m = cone_margin(cone, l);
    if (m < c.margin) {
      c.margin = m;
      w = {l.vector(), m, static_cast<std::int64_t>(p)};
    }
  }
  c.witnesses.push_back(std::move(w));
  c.pass = c.margin > 0.0;
  return c;
}

enum class SubsolutionMode { Inequality, Cone };

struct ConeModeOptions {
  double epsilon = 0.05;
  double R = 10.0;
  int n_samples = 100;
  std::uint64_t seed = 0;
};

/// Inequality mode: margin = min over interior nodes of F(hess ubar + chi) - psi,
/// pass iff margin >= -1e-9 max(1, |psi|). Cone mode: margin = min over
/// interior nodes of the tangent-cone test estimate with sigma = psi(x) and
/// mu = lambda[hess ubar + chi](x); pass iff margin > 0.
/// Throws AdmissibilityError naming the node if ubar is not admissible there.
inline Certificate verify_subsolution(const ScalarField& ubar, const SymMatrixField& chi, const ScalarField& psi,
                                      const OperatorSpec& spec, SubsolutionMode mode,
                                      const ConeModeOptions& cone_opt = {}) {
  const GridPtr& grid = ubar.grid();
  if (chi.grid() != grid || psi.grid() != grid)
    throw DomainError("verify_subsolution: fields live on different grids");
  if (spec.n() != grid->dims()) throw DomainError("verify_subsolution: operator dimension differs from the grid");
  const auto hess = covariant_hessian(ubar);
  auto c = detail::make_certificate(mode == SubsolutionMode::Inequality ? ConditionId::Subsolution
                                                                        : ConditionId::SubsolutionCone,
                                    spec, mode == SubsolutionMode::Cone ? cone_opt.n_samples : 0,
                                    mode == SubsolutionMode::Cone ? cone_opt.seed : 0);
  c.tolerance = mode == SubsolutionMode::Inequality ? -1e-9 * std::fmax(1.0, psi.max_abs()) : 0.0;
  Witness w;
  for (std::size_t p = 0; p < grid->size(); ++p) {
    if (grid->on_boundary(p)) continue;
    const SymMatrix a = hess[p] + chi[p];
    const Spectrum l = eig_metric(a, grid->metric(p)).lambda;
    if (!in_cone(spec.cone(), l))
      throw AdmissibilityError("verify_subsolution: not admissible at node " + std::to_string(p), l.vector(),
                               violated_inequality(spec.cone(), l));
    double m = 0.0;
    if (mode == SubsolutionMode::Inequality) {
      m = f_eval(spec, l) - psi[p];
    } else {
      m = tangent_cone_plus_test(spec, psi[p], l, cone_opt.epsilon, cone_opt.R, cone_opt.n_samples, cone_opt.seed)
              .theta_estimate;
    }
    if (m < c.margin) {
      c.margin = m;
      w = {l.vector(), m, static_cast<std::int64_t>(p)};
    }
  }
  c.witnesses.push_back(std::move(w));
  c.pass = mode == SubsolutionMode::Inequality ? c.margin >= c.tolerance : c.margin > 0.0;
  return c;
}

}  // namespace fne
