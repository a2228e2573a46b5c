#pragma once

// Level sets {f > sigma} of the operator families, the quantity Theta_R(mu),
// and sampled tests for membership of mu in the strict side of the tangent
// cone at infinity of the level set.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "fne/errors.hpp"
#include "fne/random.hpp"
#include "fne/symfun.hpp"

namespace fne {

namespace detail {

inline void require_reachable(const OperatorSpec& spec, double sigma) {
  if (!std::isfinite(sigma)) throw RangeError("level set: sigma must be finite");
  if (!(sigma > spec.sup_on_cone_boundary()))
    throw RangeError("level set: sigma = " + std::to_string(sigma) + " does not exceed sup over the cone boundary");
}

inline double directional_derivative(const OperatorSpec& spec, const Spectrum& at, const Spectrum& dir) {
  const auto g = f_grad(spec, at);
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * dir[i];
  return s;
}

}  // namespace detail

/// Level point t* d on the ray through d by a bracketed bisection/Newton
/// hybrid. Works for any family where t -> f(t d) is increasing and attains
/// sigma; level_point() uses it for the non-homogeneous kinds.
inline Spectrum ray_level_point(const OperatorSpec& spec, double sigma, const Spectrum& direction) {
  detail::require_admissible(spec, direction, "level_point");
  const double tol = 1e-12 * std::fmax(1.0, std::fabs(sigma));
  auto phi = [&](double t) { return f_eval(spec, direction.scaled(t)) - sigma; };

  double lo = 1.0;
  double hi = 1.0;
  double phi_lo = phi(lo);
  double phi_hi = phi_lo;
  for (int i = 0; phi_hi < 0.0; ++i) {
    if (i == 2000) throw RangeError("level_point: sigma not reached along the ray");
    lo = hi;
    phi_lo = phi_hi;
    hi *= 2.0;
    phi_hi = phi(hi);
  }
  for (int i = 0; phi_lo > 0.0; ++i) {
    if (i == 2000) throw RangeError("level_point: sigma not reached along the ray");
    hi = lo;
    phi_hi = phi_lo;
    lo *= 0.5;
    phi_lo = phi(lo);
  }
  if (std::fabs(phi_lo) <= tol) return direction.scaled(lo);
  if (std::fabs(phi_hi) <= tol) return direction.scaled(hi);

  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    const double v = phi(t);
    if (std::fabs(v) <= tol) return direction.scaled(t);
    if (v < 0.0) lo = t;
    else hi = t;
    const double slope = detail::directional_derivative(spec, direction.scaled(t), direction);
    double next = t - v / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == t || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) return direction.scaled(t);
    t = next;
  }
  return direction.scaled(t);
}

/// The point of the level set f = sigma on the ray through `direction`.
/// Closed form t* = (sigma / f(d))^{1/deg} for the homogeneous kinds.
inline Spectrum level_point(const OperatorSpec& spec, double sigma, const Spectrum& direction) {
  detail::require_admissible(spec, direction, "level_point");
  detail::require_reachable(spec, sigma);
  const double deg = spec.homogeneity_degree();
  if (deg == 0.0) return ray_level_point(spec, sigma, direction);
  const double fd = f_eval(spec, direction);
  if (!(fd > 0.0)) throw RangeError("level_point: f is not positive along the ray");
  const double t = deg == 1.0 ? sigma / fd : std::pow(sigma / fd, 1.0 / deg);
  return direction.scaled(t);
}

/// Samples points of the level set boundary f = sigma at prescribed norms.
///
/// A point b on the cone boundary is drawn as the exit point of the ray
/// c + tau w (c the unit diagonal, w uniform on the sphere); the level point
/// on the ray through b + s c then sweeps from infinity (s -> 0) down to the
/// level point of c (s -> infinity), and s is solved for the requested norm.
class LevelSetSampler {
 public:
  LevelSetSampler(OperatorSpec spec, double sigma, std::uint64_t seed)
      : spec_(spec), cone_(spec.cone()), sigma_(sigma), rng_(seed),
        center_(Spectrum::constant(spec.n(), 1.0 / std::sqrt(static_cast<double>(spec.n())))) {
    detail::require_reachable(spec_, sigma_);
    base_norm_ = level_point(spec_, sigma_, center_).norm();
  }

  const OperatorSpec& spec() const noexcept { return spec_; }
  double sigma() const noexcept { return sigma_; }
  /// Norm of the level point on the diagonal; the smallest radius always reachable.
  double base_norm() const noexcept { return base_norm_; }
  RandomStream& rng() noexcept { return rng_; }

  /// A point just inside the cone at (relative) distance < 1e-15 from its boundary.
  Spectrum boundary_point() {
    const std::size_t n = spec_.n();
    for (int attempt = 0; attempt < 10000; ++attempt) {
      const auto w = rng_.unit_vector(n);
      auto at = [&](double tau) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = center_[i] + tau * w[i];
        return Spectrum(std::move(v));
      };
      double out = 1.0;
      while (out < 1e6 && in_cone(cone_, at(out))) out *= 2.0;
      if (out >= 1e6) continue;  // this ray never leaves the cone
      double in = 0.0;
      for (int i = 0; i < 200 && out - in > 1e-15 * out; ++i) {
        const double mid = 0.5 * (in + out);
        if (in_cone(cone_, at(mid))) in = mid;
        else out = mid;
      }
      return at(in);
    }
    throw SamplingError("LevelSetSampler: could not find a cone boundary point");
  }

  /// Level point of the ray through b + s c.
  Spectrum level_point_at(const Spectrum& b, double s) const {
    std::vector<double> v(b.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = b[i] + s * center_[i];
    return level_point(spec_, sigma_, Spectrum(std::move(v)));
  }

  /// One level-set point with norm r (relative accuracy 1e-12), or nothing
  /// if the drawn boundary point does not bracket r.
  bool try_sample_at_norm(double r, Spectrum& out) {
    const Spectrum b = boundary_point();
    double lo = std::log(1e-14);  // large norm end
    double hi = std::log(1e8);    // norm ~ base_norm end
    auto norm_at = [&](double ls) { return level_point_at(b, std::exp(ls)).norm(); };
    try {
      if (!(norm_at(lo) >= r) || !(norm_at(hi) <= r)) return false;
    } catch (const Error&) {
      return false;
    }
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      const Spectrum p = level_point_at(b, std::exp(mid));
      const double nm = p.norm();
      if (std::fabs(nm - r) <= 1e-12 * r) {
        out = p;
        return true;
      }
      if (nm > r) lo = mid;
      else hi = mid;
    }
    out = level_point_at(b, std::exp(0.5 * (lo + hi)));
    return true;
  }

  Spectrum sample_at_norm(double r) {
    Spectrum p = center_;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt)
      if (try_sample_at_norm(r, p)) return p;
    throw SamplingError("LevelSetSampler: no level-set point of norm " + std::to_string(r) + " after " +
                        std::to_string(kMaxAttempts) + " attempts (level point of the diagonal has norm " +
                        std::to_string(base_norm_) + ")");
  }

  /// Norm uniform in [R, (1 + band) R].
  Spectrum sample_in_band(double R, double band = 0.25) { return sample_at_norm(rng_.uniform(R, (1.0 + band) * R)); }

  /// Norm log-uniform in [R, span * R]: the "|lambda| >= R" samples.
  Spectrum sample_beyond(double R, double span = 16.0) { return sample_at_norm(rng_.log_uniform(R, span * R)); }

  static constexpr int kMaxAttempts = 1000;

 private:
  OperatorSpec spec_;
  ConeSpec cone_;
  double sigma_;
  RandomStream rng_;
  Spectrum center_;
  double base_norm_ = 0.0;
};

/// Random point of an open cone with norm log-uniform in [r_lo, r_hi]: half
/// the draws are uniform directions kept by rejection, half lie near the
/// boundary (b + s c with s log-uniform in [1e-4, 1]).
inline Spectrum sample_cone_point(const ConeSpec& cone, RandomStream& rng, double r_lo = 1e-2, double r_hi = 1e3) {
  const std::size_t n = cone.n;
  const double r = rng.log_uniform(r_lo, r_hi);
  const double c = 1.0 / std::sqrt(static_cast<double>(n));
  auto scaled_to = [&](std::vector<double> v) {
    double nm = 0.0;
    for (double x : v) nm += x * x;
    nm = std::sqrt(nm);
    for (auto& x : v) x *= r / nm;
    return Spectrum(std::move(v));
  };
  if (rng.uniform() < 0.5) {
    for (int attempt = 0; attempt < 100000; ++attempt) {
      auto w = rng.unit_vector(n);
      if (in_cone(cone, Spectrum(w))) return scaled_to(std::move(w));
    }
  }
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const auto w = rng.unit_vector(n);
    auto at = [&](double tau) {
      std::vector<double> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = c + tau * w[i];
      return v;
    };
    double out = 1.0;
    while (out < 1e6 && in_cone(cone, Spectrum(at(out)))) out *= 2.0;
    if (out >= 1e6) continue;
    double in = 0.0;
    for (int i = 0; i < 200 && out - in > 1e-15 * out; ++i) {
      const double mid = 0.5 * (in + out);
      if (in_cone(cone, Spectrum(at(mid)))) in = mid;
      else out = mid;
    }
    auto v = at(in);
    const double s = rng.log_uniform(1e-4, 1.0);
    for (auto& x : v) x += s * c;
    if (in_cone(cone, Spectrum(v))) return scaled_to(std::move(v));
  }
  throw SamplingError("sample_cone_point: rejection sampling failed");
}

/// max over t in [0,1] of f(t mu + (1-t) lambda), by golden-section search
/// (the function is concave in t).
inline double segment_max(const OperatorSpec& spec, const Spectrum& mu, const Spectrum& lambda, int iterations = 60) {
  const ConeSpec cone = spec.cone();
  auto phi = [&](double t) {
    const Spectrum p = lerp(mu, lambda, t);
    return in_cone(cone, p) ? f_eval(spec, p) : -std::numeric_limits<double>::infinity();
  };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0;
  double b = 1.0;
  double best = std::fmax(phi(0.0), phi(1.0));
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = phi(x1);
  double f2 = phi(x2);
  for (int i = 0; i < iterations; ++i) {
    best = std::fmax(best, std::fmax(f1, f2));
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = phi(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = phi(x1);
    }
  }
  return std::fmax(best, std::fmax(f1, f2));
}

struct ThetaEstimate {
  double value = 0.0;  ///< min over samples of max_t f(t mu + (1-t) lambda) - sigma
  Spectrum worst;      ///< level-set sample attaining the minimum
  int samples = 0;
};

/// Sampled Theta_R(mu): level-set points with norm in [R, 1.25 R].
inline ThetaEstimate theta_R_detail(const OperatorSpec& spec, double sigma, const Spectrum& mu, double R, int n_samples,
                                    std::uint64_t seed) {
  if (mu.size() != spec.n()) throw DomainError("theta_R: dimension mismatch");
  if (!(R > mu.norm())) throw ParameterError("theta_R: R must exceed |mu|");
  if (n_samples < 1) throw ParameterError("theta_R: need at least one sample");
  if (!in_cone(spec.cone(), mu) || f_eval(spec, mu) < sigma - 1e-12 * std::fmax(1.0, std::fabs(sigma)))
    throw DomainError("theta_R: mu is not in the closure of the level set");
  LevelSetSampler sampler(spec, sigma, seed);
  ThetaEstimate out{std::numeric_limits<double>::infinity(), mu, 0};
  for (int s = 0; s < n_samples; ++s) {
    const Spectrum l = sampler.sample_in_band(R);
    const double v = segment_max(spec, mu, l) - sigma;
    if (v < out.value) {
      out.value = v;
      out.worst = l;
    }
    ++out.samples;
  }
  return out;
}

inline double theta_R(const OperatorSpec& spec, double sigma, const Spectrum& mu, double R, int n_samples,
                      std::uint64_t seed) {
  return theta_R_detail(spec, sigma, mu, R, n_samples, seed).value;
}

/// Sampled evidence for mu lying on the strict side of the tangent cone at
/// infinity. Never a proof: pass only says the margin was positive on every
/// sample drawn at this scale.
struct ConeMembershipCertificate {
  OperatorSpec spec;
  Spectrum mu;
  double sigma = 0.0;
  double epsilon = 0.0;
  double theta_estimate = 0.0;  ///< min over samples of sum f_i (mu_i - lambda_i) - eps sum f_i
  double R_used = 0.0;
  Spectrum worst_sample;
  int n_samples = 0;
  std::uint64_t seed = 0;
  bool pass = false;
};

/// sum f_i(lambda) (mu_i - lambda_i) - eps sum f_i(lambda).
inline double tangent_margin(const OperatorSpec& spec, const Spectrum& mu, const Spectrum& lambda, double epsilon) {
  const auto fi = f_grad(spec, lambda);
  double m = 0.0;
  for (std::size_t i = 0; i < fi.size(); ++i) m += fi[i] * (mu[i] - lambda[i] - epsilon);
  return m;
}

inline ConeMembershipCertificate tangent_cone_plus_test(const OperatorSpec& spec, double sigma, const Spectrum& mu,
                                                        double epsilon, double R, int n_samples, std::uint64_t seed) {
  if (mu.size() != spec.n()) throw DomainError("tangent_cone_plus_test: dimension mismatch");
  if (!(epsilon > 0.0)) throw ParameterError("tangent_cone_plus_test: epsilon must be positive");
  if (!(R > 0.0)) throw ParameterError("tangent_cone_plus_test: R must be positive");
  if (n_samples < 1) throw ParameterError("tangent_cone_plus_test: need at least one sample");
  LevelSetSampler sampler(spec, sigma, seed);
  ConeMembershipCertificate c{spec, mu, sigma, epsilon, std::numeric_limits<double>::infinity(), R, mu, n_samples,
                              seed, false};
  const double r0 = std::fmax(R, sampler.base_norm());
  for (int s = 0; s < n_samples; ++s) {
    const Spectrum l = sampler.sample_beyond(r0);
    const double m = tangent_margin(spec, mu, l, epsilon);
    if (m < c.theta_estimate) {
      c.theta_estimate = m;
      c.worst_sample = l;
    }
  }
  c.R_used = r0;
  c.pass = c.theta_estimate > 0.0;
  return c;
}

struct OmegaEstimate {
  double value = 0.0;
  Spectrum worst;
};

/// Empirical omega_mu: min over level-set samples with |lambda| >= N of
/// sum f_i(lambda)(mu_i - lambda_i).
inline OmegaEstimate omega_estimate_detail(const OperatorSpec& spec, double sigma, const Spectrum& mu, double N,
                                           int n_samples, std::uint64_t seed) {
  if (mu.size() != spec.n()) throw DomainError("omega_estimate: dimension mismatch");
  if (!(N > 0.0)) throw ParameterError("omega_estimate: N must be positive");
  if (n_samples < 1) throw ParameterError("omega_estimate: need at least one sample");
  LevelSetSampler sampler(spec, sigma, seed);
  const double r0 = std::fmax(N, sampler.base_norm());
  OmegaEstimate out{std::numeric_limits<double>::infinity(), mu};
  for (int s = 0; s < n_samples; ++s) {
    const Spectrum l = sampler.sample_beyond(r0);
    const double m = tangent_margin(spec, mu, l, 0.0);
    if (m < out.value) {
      out.value = m;
      out.worst = l;
    }
  }
  return out;
}

inline double omega_estimate(const OperatorSpec& spec, double sigma, const Spectrum& mu, double N, int n_samples,
                             std::uint64_t seed) {
  return omega_estimate_detail(spec, sigma, mu, N, n_samples, seed).value;
}

}  // namespace fne
