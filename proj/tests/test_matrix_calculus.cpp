#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "fne/matrix_calculus.hpp"
#include "fne/random.hpp"
#include "test_support.hpp"

using namespace fne;

namespace {

using test::admissible_matrix;
using test::from_spectrum;
using test::random_orthogonal;
using test::random_spd;
using test::random_sym;

}  // namespace

TEST(MetricTensor, Invariants) {
  RandomStream rng(1);
  for (int s = 0; s < 50; ++s) {
    const auto g = MetricTensor::from(random_spd(3, rng));
    SymMatrix gg(3);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = i; j < 3; ++j) {
        double v = 0.0;
        for (std::size_t k = 0; k < 3; ++k) v += g.gamma()(i, k) * g.gamma()(k, j);
        gg(i, j) = v;
      }
    EXPECT_LT((gg - g.g_inv()).max_abs(), 1e-12 * g.g_inv().max_abs());
  }
  EXPECT_THROW(MetricTensor::from(SymMatrix::diagonal({1.0, -1.0})), DomainError);
  EXPECT_THROW(MetricTensor::from(SymMatrix(2, {1, 2, 2, 1})), DomainError);
  EXPECT_TRUE(MetricTensor::from(SymMatrix::identity(3)).is_identity());
}

TEST(EigMetric, Examples) {
  const auto id = MetricTensor::identity(2);
  auto e = eig_metric(SymMatrix::diagonal({1, 2}), id);
  EXPECT_EQ(e.lambda, Spectrum({2, 1}));
  e = eig_metric(SymMatrix(2, {0, 1, 1, 0}), id);
  EXPECT_NEAR(e.lambda[0], 1.0, 1e-15);
  EXPECT_NEAR(e.lambda[1], -1.0, 1e-15);
  e = eig_metric(SymMatrix::identity(2), MetricTensor::from(SymMatrix::identity(2, 4.0)));
  EXPECT_NEAR(e.lambda[0], 0.25, 1e-15);
  EXPECT_NEAR(e.lambda[1], 0.25, 1e-15);
}

TEST(EigMetric, FrameIsOrthonormalEigenbasis) {
  RandomStream rng(2);
  for (int s = 0; s < 100; ++s) {
    const std::size_t n = 2 + s % 7;
    const SymMatrix a = random_sym(n, rng);
    const auto e = eig_metric(a, MetricTensor::identity(n));
    const SymMatrix d = rotate(a, e.frame);
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) {
        EXPECT_GE(e.lambda[i - 1], e.lambda[i]);
      }
      for (std::size_t j = 0; j < n; ++j)
        EXPECT_NEAR(d(i, j), i == j ? e.lambda[i] : 0.0, 1e-12 * a.max_abs() * n);
    }
  }
}

TEST(BigF, Examples) {
  const auto id3 = MetricTensor::identity(3);
  EXPECT_NEAR(big_f(SymMatrix::identity(3), id3, OperatorSpec::sigma_root(2, 3)), std::sqrt(3.0), 1e-14);
  RandomStream rng(3);
  const SymMatrix g = random_spd(3, rng);
  const auto metric = MetricTensor::from(g);
  const SymMatrix a = random_spd(3, rng);
  double tr = 0.0;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) tr += metric.g_inv()(i, j) * a(i, j);
  EXPECT_NEAR(big_f(a, metric, OperatorSpec::linear(3)), tr, 1e-12 * tr);
  EXPECT_NEAR(big_f(SymMatrix::diagonal({2, 3}), MetricTensor::identity(2), OperatorSpec::sigma_root(2, 2)),
              std::sqrt(6.0), 1e-14);
  try {
    big_f(SymMatrix::diagonal({1, -2}), MetricTensor::identity(2), OperatorSpec::sigma_root(2, 2));
    FAIL();
  } catch (const AdmissibilityError& e) {
    EXPECT_EQ(e.spectrum(), (std::vector<double>{1, -2}));
  }
}

TEST(BigFGrad, Examples) {
  const auto id = MetricTensor::identity(3);
  RandomStream rng(4);
  const auto d1 = big_f_grad(random_spd(3, rng), id, OperatorSpec::linear(3));
  EXPECT_LT((d1 - SymMatrix::identity(3)).max_abs(), 1e-14);

  const auto spec = OperatorSpec::sigma_root(2, 3);
  const auto d2 = big_f_grad(SymMatrix::diagonal({3, 2, 1}), id, spec);
  const auto fi = f_grad(spec, {3, 2, 1});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(d2(i, j), i == j ? fi[i] : 0.0, 1e-15);
}

struct MatrixCase {
  OperatorSpec spec;
  bool with_metric;
};

class MatrixProperties : public ::testing::TestWithParam<MatrixCase> {};

TEST_P(MatrixProperties, SpectralIdentities) {
  const auto [spec, with_metric] = GetParam();
  const std::size_t n = spec.n();
  RandomStream rng(5);
  for (int s = 0; s < 300; ++s) {
    const SymMatrix g = with_metric ? random_spd(n, rng) : SymMatrix::identity(n);
    const auto metric = MetricTensor::from(g);
    const Spectrum l = test::random_cone_point(spec.cone(), rng);
    const SymMatrix a = admissible_matrix(l, g, rng);
    const auto p = spectral_point(a, metric, spec);
    double s1 = 0.0;
    double s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s1 += p.fi[i] * p.eigen.lambda[i];
      s2 += p.fi[i] * p.eigen.lambda[i] * p.eigen.lambda[i];
    }
    EXPECT_NEAR(contract(p.dF, a), s1, 1e-9 * std::fabs(s1));
    // F^{ij} A_ik g^{kl} A_lj
    SymMatrix aga(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        double v = 0.0;
        for (std::size_t k = 0; k < n; ++k)
          for (std::size_t m = 0; m < n; ++m) v += a(i, k) * metric.g_inv()(k, m) * a(m, j);
        aga(i, j) = v;
      }
    EXPECT_NEAR(contract(p.dF, aga), s2, 1e-9 * s2);
  }
}

TEST_P(MatrixProperties, GradientMatchesFiniteDifferences) {
  const auto [spec, with_metric] = GetParam();
  const std::size_t n = spec.n();
  RandomStream rng(6);
  for (int s = 0; s < 200; ++s) {
    const SymMatrix g = with_metric ? random_spd(n, rng) : SymMatrix::identity(n);
    const auto metric = MetricTensor::from(g);
    std::vector<double> lv = test::random_cone_point(spec.cone(), rng).vector();
    if (s % 2 == 1) lv[1] = lv[0] + 1e-3;  // eigenvalue cluster
    const Spectrum l(lv);
    if (!in_cone(spec.cone(), l)) continue;
    const SymMatrix a = admissible_matrix(l, g, rng);
    const SymMatrix df = big_f_grad(a, metric, spec);
    const double h = 1e-5 * a.max_abs();
    double worst = 0.0;
    double scale = df.max_abs();
    for (std::size_t k = 0; k < a.packed_size(); ++k) {
      SymMatrix e(n);
      e.packed(k) = 1.0;
      const double fd = (big_f(a + h * e, metric, spec) - big_f(a - h * e, metric, spec)) / (2.0 * h);
      worst = std::max(worst, std::fabs(fd - contract(df, e)));
    }
    EXPECT_LT(worst / scale, 1e-6) << "sample " << s;
  }
}

TEST_P(MatrixProperties, PositiveDefiniteDerivative) {
  const auto [spec, with_metric] = GetParam();
  const std::size_t n = spec.n();
  RandomStream rng(7);
  for (int s = 0; s < 200; ++s) {
    const SymMatrix g = with_metric ? random_spd(n, rng) : SymMatrix::identity(n);
    const SymMatrix a = admissible_matrix(test::random_cone_point(spec.cone(), rng), g, rng);
    const auto e = jacobi_eigen(big_f_grad(a, MetricTensor::from(g), spec).dense());
    EXPECT_GT(e.values.back(), 0.0);
  }
}

TEST_P(MatrixProperties, FrameInvariance) {
  const auto [spec, with_metric] = GetParam();
  const std::size_t n = spec.n();
  RandomStream rng(8);
  for (int s = 0; s < 200; ++s) {
    const SymMatrix g = with_metric ? random_spd(n, rng) : SymMatrix::identity(n);
    const SymMatrix a = admissible_matrix(test::random_cone_point(spec.cone(), rng), g, rng);
    const Matrix q = random_orthogonal(n, rng);
    const double f0 = big_f(a, MetricTensor::from(g), spec);
    const double f1 = big_f(rotate(a, q), MetricTensor::from(rotate(g, q)), spec);
    EXPECT_NEAR(f1, f0, 1e-10 * std::max(1.0, std::fabs(f0)));
  }
}

INSTANTIATE_TEST_SUITE_P(Cases, MatrixProperties,
                         ::testing::Values(MatrixCase{OperatorSpec::linear(3), false},
                                           MatrixCase{OperatorSpec::sigma_root(2, 2), false},
                                           MatrixCase{OperatorSpec::sigma_root(2, 3), false},
                                           MatrixCase{OperatorSpec::sigma_root(2, 3), true},
                                           MatrixCase{OperatorSpec::sigma_root(3, 4), true},
                                           MatrixCase{OperatorSpec::sigma_quotient(2, 1, 3), true},
                                           MatrixCase{OperatorSpec::log_pk(2, 3), false},
                                           MatrixCase{OperatorSpec::log_pk(2, 3), true}));

TEST(BigFGrad, ExactlyRepeatedEigenvalues) {
  // At A = c I every direction is an eigenvector; F^{ij} must be f_1 I.
  const auto spec = OperatorSpec::sigma_root(2, 3);
  const auto df = big_f_grad(SymMatrix::identity(3, 2.0), MetricTensor::identity(3), spec);
  const double f1 = f_grad(spec, {2, 2, 2})[0];
  EXPECT_LT((df - SymMatrix::identity(3, f1)).max_abs(), 1e-15);
}

TEST(TangentialRatio, Examples) {
  const auto id = MetricTensor::identity(3);
  const auto lin = prop26_ratio(SymMatrix::diagonal({2, 3, 0}), id, OperatorSpec::linear(3));
  EXPECT_DOUBLE_EQ(lin.lhs, 13.0);
  EXPECT_GE(lin.ratio, 1.0);

  const auto spec = OperatorSpec::sigma_root(2, 3);
  const auto r = prop26_ratio(SymMatrix::identity(3), id, spec);
  EXPECT_NEAR(r.ratio, 1.0, 1e-14);

  // Zero right-hand sum.
  const auto inf = prop26_ratio(SymMatrix::diagonal({1, 0, 0}), id, OperatorSpec::linear(3));
  EXPECT_EQ(inf.ratio, std::numeric_limits<double>::infinity());
}

TEST(TangentialRatio, PositiveOnRandomAdmissibleMatrices) {
  RandomStream rng(9);
  for (const auto& spec : {OperatorSpec::sigma_root(2, 3), OperatorSpec::log_pk(2, 3),
                           OperatorSpec::sigma_quotient(2, 1, 3)}) {
    for (int s = 0; s < 300; ++s) {
      const SymMatrix g = random_spd(3, rng);
      const SymMatrix a = admissible_matrix(test::random_cone_point(spec.cone(), rng, 0.01), g, rng);
      EXPECT_GT(prop26_ratio(a, MetricTensor::from(g), spec).ratio, 0.0);
    }
  }
}

TEST(NegativeEntryWeight, Examples) {
  const auto spec = OperatorSpec::sigma_root(2, 3);
  EXPECT_TRUE(lemma27_check({1, 2, 3}, spec));
  EXPECT_EQ(lemma27_slack({1, 2, 3}, spec), std::numeric_limits<double>::infinity());
  // lambda = (3,3,-1): f_i = sigma_1(lambda|i) / (2 sqrt(3)) = (2, 2, 6) / (2 sqrt 3)
  const double c = 1.0 / (2.0 * std::sqrt(3.0));
  const double without = 2 * c * 9 + 2 * c * 9;
  const double total = without + 6 * c * 1;
  EXPECT_TRUE(lemma27_check({3, 3, -1}, spec));
  EXPECT_NEAR(lemma27_slack({3, 3, -1}, spec), (without - total / 3.0) / total, 1e-14);
}

TEST(AbsoluteSumBound, Examples) {
  for (std::size_t n : {2u, 3u, 5u}) {
    const std::vector<Spectrum> ones{Spectrum::constant(n, 1.0)};
    const double nn = static_cast<double>(n);
    EXPECT_NEAR(cor28_constant(OperatorSpec::linear(n), 1.0, ones), (nn - (nn - 1)) / (1 + nn), 1e-15);
  }
  EXPECT_THROW(cor28_constant(OperatorSpec::linear(2), 0.0, std::vector<Spectrum>{}), ParameterError);
}
