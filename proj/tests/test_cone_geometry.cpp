#include <gtest/gtest.h>

#include <cmath>

#include "fne/cone_geometry.hpp"
#include "test_support.hpp"

using namespace fne;

namespace {

// Exact Theta_r for sqrt(l1 l2) on {l1 l2 = 1}, mu = (1,1): the two points of
// norm r are (a, 1/a) and its mirror, so one dense 1-D maximization suffices.
double hyperbola_theta(double r) {
  const double a = std::sqrt((r * r + std::sqrt(r * r * r * r - 4.0)) / 2.0);
  auto phi = [&](double t) { return std::sqrt((t + (1 - t) * a) * (t + (1 - t) / a)); };
  double best = 0.0;
  double tb = 0.0;
  const int m = 20000;
  for (int i = 0; i <= m; ++i) {
    const double t = static_cast<double>(i) / m;
    if (phi(t) > best) {
      best = phi(t);
      tb = t;
    }
  }
  // local refinement around the grid maximum
  double lo = std::max(0.0, tb - 1.0 / m);
  double hi = std::min(1.0, tb + 1.0 / m);
  for (int i = 0; i < 200; ++i) {
    const double m1 = lo + (hi - lo) / 3;
    const double m2 = hi - (hi - lo) / 3;
    if (phi(m1) < phi(m2)) lo = m1;
    else hi = m2;
  }
  return std::max(best, phi(0.5 * (lo + hi))) - 1.0;
}

}  // namespace

TEST(LevelPoint, Examples) {
  const auto p1 = level_point(OperatorSpec::sigma_root(2, 3), 1.0, {1, 1, 1});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p1[i], 1.0 / std::sqrt(3.0), 1e-15);
  const auto p2 = level_point(OperatorSpec::linear(3), 3.0, {1, 1, 1});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p2[i], 1.0, 1e-15);
  const auto p3 = level_point(OperatorSpec::log_pk(2, 2), 0.0, {1, 1});
  EXPECT_NEAR(p3[0], 0.5, 1e-12);
  EXPECT_NEAR(p3[1], 0.5, 1e-12);
}

TEST(LevelPoint, Errors) {
  EXPECT_THROW(level_point(OperatorSpec::sigma_root(2, 3), 1.0, {1, 1, -5}), AdmissibilityError);
  EXPECT_THROW(level_point(OperatorSpec::sigma_root(2, 3), -1.0, {1, 1, 1}), RangeError);
  EXPECT_THROW(level_point(OperatorSpec::sigma_root(2, 3), 0.0, {1, 1, 1}), RangeError);
}

TEST(LevelPoint, GenericRaySolverMatchesClosedForms) {
  RandomStream rng(12);
  for (int s = 0; s < 500; ++s) {
    const auto spec = OperatorSpec::log_pk(2, 3);
    const Spectrum e = test::random_cone_point(spec.cone(), rng, 0.01);
    const double sigma = rng.uniform(-10, 10);
    const auto p = level_point(spec, sigma, e);
    const double t = std::exp((sigma - f_eval(spec, e)) / 3.0);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p[i], t * e[i], 1e-11 * t * e.max_abs());
    EXPECT_LE(std::fabs(f_eval(spec, p) - sigma), 1e-12 * std::max(1.0, std::fabs(sigma)));
  }
  for (const auto& spec : {OperatorSpec::sigma_root(2, 3), OperatorSpec::sigma(3, 4), OperatorSpec::pk(2, 3)}) {
    for (int s = 0; s < 100; ++s) {
      const Spectrum e = test::random_cone_point(spec.cone(), rng, 0.01);
      const double sigma = rng.log_uniform(0.1, 10);
      const auto a = level_point(spec, sigma, e);
      const auto b = ray_level_point(spec, sigma, e);
      for (std::size_t i = 0; i < e.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-11 * a.max_abs());
    }
  }
}

TEST(LevelSetSampler, PointsLieOnLevelSetAtRequestedNorm) {
  for (const auto& [spec, sigma] : {std::pair{OperatorSpec::sigma_root(2, 3), 1.0},
                                    std::pair{OperatorSpec::log_pk(2, 3), 0.0},
                                    std::pair{OperatorSpec::sigma_quotient(3, 1, 4), 2.0},
                                    std::pair{OperatorSpec::linear(3), 1.0}}) {
    LevelSetSampler sampler(spec, sigma, 5);
    for (double r : {10.0, 100.0, 1000.0}) {
      for (int s = 0; s < 50; ++s) {
        const Spectrum l = sampler.sample_at_norm(r);
        // Far out on the log P_k level set some pair sums cancel, so f itself
        // is only known to about eps * sum f_i |lambda_i|.
        const auto fi = f_grad(spec, l);
        double cond = 0.0;
        for (std::size_t i = 0; i < fi.size(); ++i) cond += std::fabs(fi[i] * l[i]);
        const double ftol = 1e-10 * std::max(1.0, std::fabs(sigma)) + 1e3 * 2.2e-16 * cond;
        EXPECT_NEAR(l.norm(), r, r * (1e-10 + ftol));
        EXPECT_NEAR(f_eval(spec, l), sigma, ftol);
      }
    }
  }
}

TEST(LevelSetSampler, Deterministic) {
  LevelSetSampler a(OperatorSpec::sigma_root(2, 3), 1.0, 99);
  LevelSetSampler b(OperatorSpec::sigma_root(2, 3), 1.0, 99);
  for (int s = 0; s < 20; ++s) EXPECT_EQ(a.sample_in_band(10.0), b.sample_in_band(10.0));
}

TEST(ThetaR, LinearIsZero) {
  const auto spec = OperatorSpec::linear(3);
  for (double R : {5.0, 50.0}) {
    const double th = theta_R(spec, 3.0, {2, 0.5, 0.5}, R, 200, 1);
    EXPECT_NEAR(th, 0.0, 1e-12 * R);
  }
}

TEST(ThetaR, HyperbolaMatchesOneDimensionalOracle) {
  const auto spec = OperatorSpec::sigma_root(2, 2);
  for (double R : {5.0, 10.0, 40.0}) {
    const double sampled = theta_R(spec, 1.0, {1, 1}, R, 400, 3);
    EXPECT_GT(sampled, 0.0);
    EXPECT_GE(sampled, hyperbola_theta(R) - 1e-9);
    EXPECT_LE(sampled, hyperbola_theta(1.25 * R) + 1e-9);
  }
  EXPECT_GT(hyperbola_theta(10.0), hyperbola_theta(5.0));
  EXPECT_GE(theta_R(spec, 1.0, {1, 1}, 10.0, 400, 3), theta_R(spec, 1.0, {1, 1}, 5.0, 400, 3));
}

TEST(ThetaR, StrictGrowthOnHyperbola) {
  const auto spec = OperatorSpec::sigma_root(2, 2);
  double prev = theta_R(spec, 1.0, {1, 1}, 3.0, 300, 8);
  ASSERT_GT(prev, 0.0);
  for (double R : {6.0, 12.0, 24.0, 48.0}) {
    const double th = theta_R(spec, 1.0, {1, 1}, R, 300, 8);
    EXPECT_GT(th, prev);
    prev = th;
  }
}

TEST(ThetaR, MonotoneInRadius) {
  for (const auto& [spec, sigma] : {std::pair{OperatorSpec::sigma_root(2, 3), 1.0},
                                    std::pair{OperatorSpec::log_pk(2, 3), 0.0},
                                    std::pair{OperatorSpec::sigma_quotient(2, 1, 3), 1.0}}) {
    const Spectrum mu = level_point(spec, sigma, {1.0, 1.3, 0.8});
    double prev = -1.0;
    for (double R : {5.0, 10.0, 20.0, 40.0}) {
      const double th = theta_R(spec, sigma, mu, R, 1500, 21);
      EXPECT_GE(th, prev - 1e-9) << spec.name() << " R=" << R;
      EXPECT_GE(th, -1e-12);
      prev = th;
    }
  }
}

TEST(ThetaR, Preconditions) {
  const auto spec = OperatorSpec::sigma_root(2, 3);
  EXPECT_THROW(theta_R(spec, 1.0, {1, 1, 1}, 1.0, 10, 0), ParameterError);
  EXPECT_THROW(theta_R(spec, 10.0, {1, 1, 1}, 50.0, 10, 0), DomainError);
}

TEST(TangentCone, Examples) {
  const auto lin = tangent_cone_plus_test(OperatorSpec::linear(3), 3.0, {1, 1, 1}, 0.1, 10.0, 200, 1);
  EXPECT_FALSE(lin.pass);
  EXPECT_NEAR(lin.theta_estimate, -0.3, 1e-12);

  const auto root = tangent_cone_plus_test(OperatorSpec::sigma_root(2, 3), 1.0, {2, 2, 2}, 0.1, 10.0, 500, 2);
  EXPECT_TRUE(root.pass);
  EXPECT_GE(root.worst_sample.norm(), 10.0 - 1e-9);

  const auto lp = tangent_cone_plus_test(OperatorSpec::log_pk(2, 3), 0.0, {1, 1, 1}, 0.05, 10.0, 500, 3);
  EXPECT_TRUE(lp.pass);
}

TEST(TangentCone, ScaleStability) {
  const auto spec = OperatorSpec::sigma_root(2, 3);
  double prev = -1e300;
  for (double R : {10.0, 20.0, 40.0}) {
    const auto c = tangent_cone_plus_test(spec, 1.0, {2, 2, 2}, 0.05, R, 500, 4);
    EXPECT_TRUE(c.pass);
    EXPECT_GE(c.theta_estimate, prev);
    prev = c.theta_estimate;
  }
}

TEST(Omega, Examples) {
  const auto spec = OperatorSpec::sigma_root(2, 3);
  const Spectrum mu = level_point(spec, 2.0, {1.0, 2.0, 1.5});  // f(mu) = sigma + 1
  EXPECT_GE(omega_estimate(spec, 1.0, mu, 5.0, 500, 1), 1.0 - 1e-9);
  EXPECT_NEAR(omega_estimate(OperatorSpec::linear(3), 3.0, {1, 1, 1}, 5.0, 200, 1), 0.0, 1e-12);
  EXPECT_GT(omega_estimate(OperatorSpec::sigma_root(2, 2), 1.0, {1, 1}, 10.0, 200, 1), 0.0);
}

TEST(Omega, ConcavityCrossCheck) {
  for (const auto& [spec, sigma] : {std::pair{OperatorSpec::sigma_root(2, 3), 1.0},
                                    std::pair{OperatorSpec::log_pk(2, 3), 0.0},
                                    std::pair{OperatorSpec::sigma_root(3, 4), 1.0}}) {
    RandomStream rng(31);
    LevelSetSampler sampler(spec, sigma, 32);
    for (int s = 0; s < 300; ++s) {
      const Spectrum mu = test::random_cone_point(spec.cone(), rng, 0.01);
      const Spectrum l = sampler.sample_beyond(5.0);
      const double lhs = tangent_margin(spec, mu, l, 0.0);
      const double rhs = f_eval(spec, mu) - f_eval(spec, l);
      EXPECT_GE(lhs, rhs - 1e-10 * std::max(1.0, std::fabs(rhs)));
    }
  }
}

TEST(SampleConePoint, InsideAndInRange) {
  RandomStream rng(40);
  for (const auto& cone : {ConeSpec::gamma(2, 3), ConeSpec::gamma(4, 4), ConeSpec::pk(2, 3), ConeSpec::gamma(1, 2)}) {
    for (int s = 0; s < 500; ++s) {
      const Spectrum l = sample_cone_point(cone, rng);
      EXPECT_TRUE(in_cone(cone, l));
      EXPECT_GE(l.norm(), 1e-2 * (1 - 1e-12));
      EXPECT_LE(l.norm(), 1e3 * (1 + 1e-12));
    }
  }
}
