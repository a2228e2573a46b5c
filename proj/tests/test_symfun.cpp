#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fne/random.hpp"
#include "fne/symfun.hpp"
#include "test_support.hpp"

using namespace fne;

namespace {

// Brute-force sigma_k by subset enumeration.
double sigma_oracle(std::size_t k, const Spectrum& l) {
  if (k == 0) return 1.0;
  double s = 0.0;
  for_each_subset(l.size(), k, [&](std::span<const std::size_t> sub) {
    double p = 1.0;
    for (auto i : sub) p *= l[i];
    s += p;
  });
  return s;
}

}  // namespace

TEST(Sigma, Examples) {
  EXPECT_DOUBLE_EQ(sigma(2, {1, 1, 1}), 3.0);
  EXPECT_DOUBLE_EQ(sigma(2, {1, 2, 3}), 11.0);
  EXPECT_DOUBLE_EQ(sigma(3, {1, 2, 0}), 0.0);
  EXPECT_DOUBLE_EQ(sigma(0, {4, 5}), 1.0);
  EXPECT_THROW(sigma(4, {1, 2, 3}), DomainError);
}

TEST(Sigma, MatchesSubsetEnumeration) {
  RandomStream rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.next_u64() % 9;
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-3, 3);
    const Spectrum l(v);
    for (std::size_t k = 0; k <= n; ++k) {
      const double ref = sigma_oracle(k, l);
      EXPECT_NEAR(sigma(k, l), ref, 1e-11 * std::max(1.0, std::fabs(ref)) * std::pow(3.0, k));
    }
  }
}

TEST(Spectrum, Invariants) {
  EXPECT_THROW(Spectrum({1.0}), DomainError);
  EXPECT_THROW(Spectrum({1.0, NAN}), DomainError);
  EXPECT_THROW(Spectrum(std::vector<double>(17, 1.0)), DomainError);
  EXPECT_NO_THROW(Spectrum(std::vector<double>(16, 1.0)));
}

TEST(InCone, Examples) {
  EXPECT_TRUE(in_cone(ConeSpec::gamma(2, 3), {1, 1, 1}));
  EXPECT_FALSE(in_cone(ConeSpec::gamma(2, 3), {2, 2, -1}));
  EXPECT_TRUE(in_cone(ConeSpec::pk(2, 3), {-1, 2, 2}));
  EXPECT_FALSE(in_cone(ConeSpec::pk(2, 3), {-2, 2, 2}));
  EXPECT_FALSE(in_cone(ConeSpec::positive_orthant(3), {1, 1, 0}));
  EXPECT_EQ(violated_inequality(ConeSpec::gamma(2, 3), {2, 2, -1}), "sigma_2 > 0");
  EXPECT_EQ(violated_inequality(ConeSpec::gamma(2, 3), {1, 1, 1}), "");
}

TEST(InCone, RelativeTolerance) {
  // margin of (1,1,1) in Gamma_2 is 1
  EXPECT_TRUE(in_cone(ConeSpec::gamma(2, 3), {1, 1, 1}, 0.5));
  EXPECT_FALSE(in_cone(ConeSpec::gamma(2, 3), {1, 1, 1}, 1.5));
}

TEST(InCone, NestingProperty) {
  RandomStream rng(11);
  for (int trial = 0; trial < 5000; ++trial) {
    const std::size_t n = 2 + rng.next_u64() % 6;
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1, 3);
    const Spectrum l(v);
    for (std::size_t k = 1; k <= n; ++k) {
      if (!in_cone(ConeSpec::gamma(k, n), l)) continue;
      for (std::size_t j = 1; j <= k; ++j) EXPECT_TRUE(in_cone(ConeSpec::gamma(j, n), l));
    }
  }
}

TEST(FEval, Examples) {
  EXPECT_NEAR(f_eval(OperatorSpec::sigma_root(2, 3), {1, 1, 1}), std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(f_eval(OperatorSpec::sigma_quotient(2, 1, 3), {1, 1, 1}), 1.0, 1e-15);
  EXPECT_NEAR(f_eval(OperatorSpec::log_pk(2, 3), {1, 1, 1}), std::log(8.0), 1e-15);
  EXPECT_NEAR(f_eval(OperatorSpec::sigma_quotient(2, 0, 3), {1, 2, 3}),
              f_eval(OperatorSpec::sigma_root(2, 3), {1, 2, 3}), 1e-15);
  EXPECT_NEAR(f_eval(OperatorSpec::pk(2, 3), {1, 2, 3}), 3.0 * 4.0 * 5.0, 1e-12);
}

TEST(FEval, OutsideConeCarriesInequality) {
  try {
    f_eval(OperatorSpec::sigma_root(2, 3), {2, 2, -1});
    FAIL() << "expected AdmissibilityError";
  } catch (const AdmissibilityError& e) {
    EXPECT_EQ(e.violated(), "sigma_2 > 0");
    EXPECT_EQ(e.spectrum(), (std::vector<double>{2, 2, -1}));
  }
  EXPECT_THROW(f_eval(OperatorSpec::log_pk(2, 3), {-3, 1, 1}), AdmissibilityError);
  EXPECT_THROW(f_eval(OperatorSpec::linear(4), {1, 1, 1}), DomainError);
}

TEST(OperatorSpec, Validation) {
  EXPECT_THROW(OperatorSpec::sigma_root(4, 3), DomainError);
  EXPECT_THROW(OperatorSpec::sigma_quotient(2, 2, 3), DomainError);
  EXPECT_THROW(OperatorSpec::log_pk(0, 3), DomainError);
  EXPECT_THROW(OperatorSpec::linear(1), DomainError);
  EXPECT_EQ(OperatorSpec::log_pk(2, 3).cone(), ConeSpec::pk(2, 3));
  EXPECT_EQ(OperatorSpec::sigma_quotient(3, 1, 4).cone(), ConeSpec::gamma(3, 4));
  EXPECT_FALSE(OperatorSpec::sigma(2, 3).verified_concave());
  EXPECT_FALSE(OperatorSpec::pk(2, 3).verified_concave());
  EXPECT_TRUE(OperatorSpec::log_pk(2, 3).verified_concave());
}

TEST(FGrad, Examples) {
  const auto g1 = f_grad(OperatorSpec::linear(3), {4, -1, 2});
  for (double v : g1) EXPECT_EQ(v, 1.0);
  const auto g2 = f_grad(OperatorSpec::sigma(2, 3), {1, 2, 3});
  EXPECT_EQ(g2, (std::vector<double>{5, 4, 3}));
  const auto g3 = f_grad(OperatorSpec::log_pk(2, 3), {1, 1, 1});
  for (double v : g3) EXPECT_NEAR(v, 1.0, 1e-15);
}

TEST(FHess, Examples) {
  const auto h1 = f_hess(OperatorSpec::linear(3), {1, 2, 3});
  EXPECT_EQ(h1.frobenius_norm(), 0.0);
  const auto h2 = f_hess(OperatorSpec::sigma(2, 3), {1, 2, 3});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(h2(i, j), i == j ? 0.0 : 1.0);
  const auto h3 = f_hess(OperatorSpec::log_pk(2, 2), {0.5, 2.0});
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(h3(i, j), -1.0 / 6.25, 1e-15);
}

class FamilyProperties : public ::testing::TestWithParam<OperatorSpec> {};

TEST_P(FamilyProperties, EulerIdentity) {
  const OperatorSpec spec = GetParam();
  RandomStream rng(101);
  for (int s = 0; s < 2000; ++s) {
    const Spectrum l = test::random_cone_point(spec.cone(), rng);
    const auto g = f_grad(spec, l);
    double e = 0.0;
    for (std::size_t i = 0; i < l.size(); ++i) e += g[i] * l[i];
    if (spec.kind() == OperatorKind::LogPk) {
      EXPECT_NEAR(e, binomial(spec.n(), spec.k()), 1e-10 * binomial(spec.n(), spec.k()));
    } else {
      const double f = f_eval(spec, l);
      EXPECT_NEAR(e, spec.homogeneity_degree() * f, 1e-10 * std::fabs(spec.homogeneity_degree() * f));
    }
  }
}

TEST_P(FamilyProperties, GradientMatchesFiniteDifferences) {
  const OperatorSpec spec = GetParam();
  RandomStream rng(202);
  for (int s = 0; s < 300; ++s) {
    const Spectrum l = test::random_cone_point(spec.cone(), rng);
    const auto g = f_grad(spec, l);
    const auto fd = test::fd_gradient(spec, l, 1e-5);
    EXPECT_LT(test::rel_err(g, fd), 1e-6) << "sample " << s;
  }
}

TEST_P(FamilyProperties, HessianMatchesFiniteDifferences) {
  const OperatorSpec spec = GetParam();
  RandomStream rng(303);
  for (int s = 0; s < 300; ++s) {
    const Spectrum l = test::random_cone_point(spec.cone(), rng);
    const auto h = f_hess(spec, l);
    const auto fd = test::fd_hessian(spec, l, 1e-5);
    EXPECT_LT(test::rel_err(h, fd), 1e-6) << "sample " << s;
  }
}

TEST_P(FamilyProperties, PermutationSymmetry) {
  const OperatorSpec spec = GetParam();
  RandomStream rng(404);
  for (int s = 0; s < 300; ++s) {
    const Spectrum l = test::random_cone_point(spec.cone(), rng);
    std::vector<std::size_t> perm(l.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::reverse(perm.begin(), perm.end());
    std::rotate(perm.begin(), perm.begin() + 1, perm.end());
    std::vector<double> pv(l.size());
    for (std::size_t i = 0; i < l.size(); ++i) pv[i] = l[perm[i]];
    const Spectrum lp(pv);
    const double f = f_eval(spec, l);
    EXPECT_NEAR(f_eval(spec, lp), f, 1e-12 * std::max(1.0, std::fabs(f)));
    const auto g = f_grad(spec, l);
    const auto gp = f_grad(spec, lp);
    for (std::size_t i = 0; i < l.size(); ++i)
      EXPECT_NEAR(gp[i], g[perm[i]], 1e-12 * std::max(1.0, std::fabs(g[perm[i]])));
  }
}

INSTANTIATE_TEST_SUITE_P(
    Families, FamilyProperties,
    ::testing::Values(OperatorSpec::linear(3), OperatorSpec::sigma(2, 3), OperatorSpec::sigma_root(2, 2),
                      OperatorSpec::sigma_root(2, 3), OperatorSpec::sigma_root(3, 4), OperatorSpec::sigma_root(4, 6),
                      OperatorSpec::sigma_quotient(2, 1, 3), OperatorSpec::sigma_quotient(3, 1, 5),
                      OperatorSpec::log_pk(2, 2), OperatorSpec::log_pk(2, 3), OperatorSpec::log_pk(3, 5),
                      OperatorSpec::pk(2, 3)),
    [](const auto& info) {
      const auto& s = info.param;
      return s.name() + "_k" + std::to_string(s.k()) + "_l" + std::to_string(s.l()) + "_n" + std::to_string(s.n());
    });
