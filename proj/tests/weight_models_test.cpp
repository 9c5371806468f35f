#include <gtest/gtest.h>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <cmath>
#include <numbers>

#include "kinetic_brw/stats.hpp"
#include "kinetic_brw/weight_models.hpp"

using namespace kinetic_brw;

namespace {

// Composite Simpson on [0, 1] for the direct-integral oracle.
template <class F>
double simpson01(F f, int n = 20000) {
  const double h = 1.0 / n;
  double s = f(0.0) + f(1.0);
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(k * h);
  return s * h / 3.0;
}

// E[|sin U|^θ log^k|sin U|] via Gamma-function identities.
SpectralMoments kac_moments_gamma(double theta) {
  using boost::math::digamma;
  using boost::math::trigamma;
  const double a = (theta + 1.0) / 2.0, b = theta / 2.0 + 1.0;
  const double g = std::tgamma(a) / (std::sqrt(std::numbers::pi) * std::tgamma(b));
  const double d1 = 0.5 * (digamma(a) - digamma(b));
  const double d2 = d1 * d1 + 0.25 * (trigamma(a) - trigamma(b));
  return {2.0 * g, 2.0 * g * d1, 2.0 * g * d2};
}

stats::Estimate mc_sum_power(const WeightModel& m, double theta, std::size_t draws, std::uint64_t seed) {
  Rng rng{StreamKey(seed)};
  std::vector<double> xs(draws);
  WeightVector v;
  for (auto& x : xs) {
    m.sample(rng, v);
    double s = 0.0;
    for (double w : v.weights) s += std::pow(w, theta);
    x = s;
  }
  return stats::mean_se(xs);
}

}  // namespace

TEST(WeightModels, DeterministicPairIsConstant) {
  const auto m = WeightModel::deterministic_pair(0.5);
  Rng rng{StreamKey(1)};
  for (int i = 0; i < 10; ++i) {
    const auto w = sample_weights(m, rng);
    ASSERT_EQ(w.size(), 2u);
    EXPECT_EQ(w.weights[0], 0.5);
    EXPECT_EQ(w.weights[1], 0.5);
    EXPECT_DOUBLE_EQ(w.neg_logs[0], std::log(2.0));
  }
}

TEST(WeightModels, KacPairLiesOnUnitCircle) {
  const auto m = WeightModel::kac();
  Rng rng{StreamKey(2)};
  for (int i = 0; i < 100000; ++i) {
    const auto w = m.sample(rng);
    ASSERT_EQ(w.size(), 2u);
    EXPECT_NEAR(w.weights[0] * w.weights[0] + w.weights[1] * w.weights[1], 1.0, 1e-12);
    EXPECT_GE(w.weights[0], 0.0);
    EXPECT_GE(w.weights[1], 0.0);
  }
}

TEST(WeightModels, PowerUniformSplitAtHalf) {
  WeightVector v;
  power_uniform_split_weights(2.0, 0.5, v);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_DOUBLE_EQ(v.weights[0], 0.25);
  EXPECT_DOUBLE_EQ(v.weights[1], 0.25);
  EXPECT_DOUBLE_EQ(v.neg_logs[0], -std::log(0.25));
}

TEST(WeightModels, ZeroWeightsAreDropped) {
  const auto m = WeightModel::table({{1.0, {0.0, 0.4, 0.0, 0.6}}});
  Rng rng{StreamKey(3)};
  const auto w = m.sample(rng);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w.weights[0], 0.4);
  EXPECT_EQ(w.weights[1], 0.6);
  EXPECT_EQ(*m.max_children(), 4u);
  const auto ghost = WeightModel::table({{1.0, {0.0}}});
  EXPECT_TRUE(ghost.sample(rng).empty());
}

TEST(WeightModels, PowerUniformSplitClosedFormMatchesDirectIntegral) {
  for (double a : {1.0, 2.0, 4.0})
    for (double theta : {0.0, 0.5, 1.0, 1.5, 2.0}) {
      const auto m = WeightModel::power_uniform_split(a).analytic_moments(theta);
      // u = s^4 smooths the endpoint behaviour of u^{aθ}.
      const double direct =
          2.0 * simpson01([&](double s) { return 4.0 * std::pow(s, 4.0 * a * theta + 3.0); });
      EXPECT_NEAR(m->phi(), direct - 1.0, 1e-9) << a << " " << theta;
      EXPECT_NEAR(m->phi(), 2.0 / (a * theta + 1.0) - 1.0, 1e-15);
    }
}

TEST(WeightModels, DeterministicPairClosedForm) {
  for (double theta : {0.0, 0.5, 1.0, 2.0})
    EXPECT_DOUBLE_EQ(WeightModel::deterministic_pair(0.3).analytic_moments(theta)->phi(),
                     2.0 * std::pow(0.3, theta) - 1.0);
}

TEST(WeightModels, KacQuadratureMatchesGammaIdentities) {
  const auto kac = WeightModel::kac();
  EXPECT_FALSE(kac.has_analytic());
  EXPECT_TRUE(kac.has_quadrature());
  for (double theta : {0.0, 0.5, 1.0, 1.5, 2.0, 3.0}) {
    const auto q = *kac.quadrature_moments(theta);
    const auto g = kac_moments_gamma(theta);
    EXPECT_NEAR(q.m0, g.m0, 1e-10) << theta;
    EXPECT_NEAR(q.m1, g.m1, 1e-9) << theta;
    EXPECT_NEAR(q.m2, g.m2, 1e-8) << theta;
  }
  EXPECT_NEAR(kac.quadrature_moments(2.0)->phi(), 0.0, 1e-12);
  EXPECT_NEAR(kac.quadrature_moments(1.0)->phi(), 4.0 / std::numbers::pi - 1.0, 1e-11);
}

TEST(WeightModels, MonteCarloAgreesWithAnalyticWithin4SE) {
  std::vector<WeightModel> models{
      WeightModel::deterministic_pair(0.5), WeightModel::power_uniform_split(2.0),
      WeightModel::econophysics(UniformParam{0.1, 0.9}, UniformParam{0.0, 1.2}, DiscreteParam{{0.0, 0.5, 1.5}, {0.2, 0.5, 0.3}},
                                UniformParam{0.3, 0.3}),
      WeightModel::table({{0.25, {0.3, 0.7}}, {0.75, {0.5, 0.2, 0.9}}})};
  std::uint64_t seed = 10;
  for (const auto& m : models)
    for (double theta : {0.0, 0.5, 1.0, 1.5, 2.0}) {
      const auto e = mc_sum_power(m, theta, 100000, ++seed);
      const double exact = m.analytic_moments(theta)->m0;
      const double tol = std::max(4.0 * e.se, 1e-12);
      EXPECT_NEAR(e.mean, exact, tol) << m.name() << " theta=" << theta;
    }
}

TEST(WeightModels, KacMonteCarloAgreesWithQuadrature) {
  const auto kac = WeightModel::kac();
  for (double theta : {0.5, 1.0, 1.5}) {
    const auto e = mc_sum_power(kac, theta, 100000, 77);
    EXPECT_NEAR(e.mean, kac.quadrature_moments(theta)->m0, 4.0 * e.se);
  }
}

TEST(WeightModels, EconophysicsConservesMean) {
  const Econophysics k{UniformParam{0.2, 1.0}, UniformParam{0.0, 0.8}, UniformParam{0.4, 0.8},
                       DiscreteParam{{0.2, 0.6}, {0.5, 0.5}}};
  ASSERT_NEAR(econophysics_total_mean(k), 2.0, 1e-15);
  const WeightModel m(k);
  EXPECT_NEAR(m.analytic_moments(1.0)->phi(), 0.0, 1e-14);
  const auto e = mc_sum_power(m, 1.0, 100000, 99);
  EXPECT_NEAR(e.mean - 1.0, 0.0, 4.0 * e.se);
  EXPECT_EQ(m.nonlattice_declared(), Declared::yes);
}

TEST(WeightModels, SingleAtomTableReplaysDeterministicPair) {
  const auto table = WeightModel::table({{1.0, {0.5, 0.5}}});
  const auto pair = WeightModel::deterministic_pair(0.5);
  Rng r1(StreamKey(5)), r2(StreamKey(5));
  for (int i = 0; i < 100; ++i) {
    const auto a = table.sample(r1), b = pair.sample(r2);
    EXPECT_EQ(a.weights, b.weights);
    EXPECT_EQ(a.neg_logs, b.neg_logs);
    EXPECT_EQ(r1(), r2());
  }
}

TEST(WeightModels, ValidationErrors) {
  EXPECT_THROW(WeightModel::deterministic_pair(0.0), DomainError);
  EXPECT_THROW(WeightModel::power_uniform_split(-1.0), DomainError);
  EXPECT_THROW(WeightModel::table({}), DomainError);
  EXPECT_THROW(WeightModel::table({{0.5, {0.3}}, {0.4, {0.2}}}), DomainError);
  EXPECT_THROW(WeightModel::table({{1.0, {-0.3}}}), DomainError);
  EXPECT_THROW(WeightModel::econophysics(UniformParam{-1, 1}, UniformParam{0, 1}, UniformParam{0, 1}, UniformParam{0, 1}),
               DomainError);
}

TEST(WeightModels, BuiltinCatalogue) {
  const auto models = builtin_models();
  std::vector<std::string> names;
  for (const auto& m : models) names.push_back(m.name());
  for (const char* want : {"kac", "deterministic_pair", "power_uniform_split", "econophysics", "table"})
    EXPECT_NE(std::find(names.begin(), names.end(), want), names.end()) << want;
  EXPECT_EQ(WeightModel::deterministic_pair(0.5).nonlattice_declared(), Declared::no);
  EXPECT_EQ(WeightModel::kac().nonlattice_declared(), Declared::yes);
  EXPECT_EQ(WeightModel::table({{1.0, {0.5}}}).nonlattice_declared(), Declared::unknown);
}
