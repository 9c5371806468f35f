#include <gtest/gtest.h>

#include <cmath>

#include "kinetic_brw/kinetic_solver.hpp"

using namespace kinetic_brw;

namespace {
SampleSet make_set(std::vector<double> v, double t) {
  SampleSet s;
  s.values = std::move(v);
  s.t = t;
  return s;
}
}  // namespace

TEST(Rescale, IdentityAndUnitTime) {
  const auto s = make_set({1.0, -2.0, 3.5}, 4.0);
  EXPECT_EQ(rescale(s, 0.0, 0.0).values, s.values);
  const auto u = rescale(make_set({1.0, -2.0}, 1.0), 7.3, 0.4);
  EXPECT_DOUBLE_EQ(u.values[0], std::exp(-0.4));
  EXPECT_DOUBLE_EQ(u.values[1], -2.0 * std::exp(-0.4));
  EXPECT_TRUE(u.scaled);
  EXPECT_EQ(u.p, 7.3);
}

TEST(Rescale, BeyondBoundaryMultiplierAtTen) {
  const double theta = (1.0 + std::sqrt(2.0)) / 2.0;
  const double p = 3.0 / (2.0 * theta), r = 4.0 * std::sqrt(2.0) - 6.0;
  const auto s = rescale(make_set({1.0}, 10.0), p, r);
  EXPECT_NEAR(s.values[0], std::pow(10.0, 1.2426) * std::exp(3.4315), 1e-3 * s.values[0]);
  EXPECT_DOUBLE_EQ(s.values[0], std::pow(10.0, p) * std::exp(-r * 10.0));
}

TEST(Rescale, ExactlyLinearPerElement) {
  Rng rng{StreamKey(1)};
  std::vector<double> v(1000);
  for (auto& x : v) x = rng.uniform(-10, 10);
  const auto s = rescale(make_set(v, 3.7), 1.1, -0.2);
  const double c = std::pow(3.7, 1.1) * std::exp(0.2 * 3.7);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(s.values[i], v[i] * c);
}

TEST(Rescale, Errors) {
  const auto s = rescale(make_set({1.0}, 2.0), 1.0, 0.0);
  EXPECT_THROW(rescale(s, 1.0, 0.0), DomainError);
  EXPECT_THROW(rescale(make_set({1.0}, 0.0), 0.5, 0.0), DomainError);
  EXPECT_NO_THROW(rescale(make_set({1.0}, 0.0), 0.0, 1.0));
}

TEST(EmpiricalCFCurve, Examples) {
  Rng rng{StreamKey(2)};
  const std::vector<double> grid{0.0, 0.7, 3.0};
  const auto pm = empirical_cf_curve(make_set(std::vector<double>(100, 2.0), 1.0), grid, 50, rng);
  for (const auto& p : pm) {
    EXPECT_NEAR(p.re, std::cos(2.0 * p.xi), 1e-14);
    EXPECT_NEAR(p.im, std::sin(2.0 * p.xi), 1e-14);
  }
  EXPECT_EQ(pm[0].re, 1.0);
  EXPECT_EQ(pm[0].im, 0.0);

  std::vector<double> sym;
  for (int k = 0; k < 300; ++k) {
    const double x = rng.uniform(0, 5);
    sym.push_back(x);
    sym.push_back(-x);
  }
  for (const auto& p : empirical_cf_curve(make_set(sym, 1.0), grid, 0, rng)) EXPECT_NEAR(p.im, 0.0, 1e-13);
  EXPECT_THROW(empirical_cf_curve(make_set({}, 1.0), grid, 10, rng), DomainError);
}

TEST(ScalingStudy, TimeZeroReproducesInitialLaw) {
  const auto m = WeightModel::power_uniform_split(2.0);
  const auto prof = find_theta_star(m);
  const auto law = InitialLaw::symmetric_stable(0.8);
  const std::vector<double> grid{0.0, 1.0};
  const auto res = scaling_study(m, law, prof, grid, 3000, StreamKey(3));
  EXPECT_EQ(res.regime.regime, Regime::subcritical);
  Rng rng{StreamKey(4)};
  std::vector<double> direct(3000);
  for (auto& x : direct) x = law.sample(rng);
  EXPECT_FALSE(stats::ks_two_sample(res.scaled[0].values, direct).rejected);
}

TEST(ScalingStudy, SubcriticalConsecutiveKsDecreases) {
  const auto m = WeightModel::power_uniform_split(2.0);
  const auto prof = find_theta_star(m);
  const auto law = InitialLaw::symmetric_stable(0.8);
  const std::vector<double> grid{0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  ScalingOptions opt;
  opt.bootstrap = 50;
  const auto res = scaling_study(m, law, prof, grid, 4000, StreamKey(5), opt);
  EXPECT_EQ(res.regime.p, 0.0);
  EXPECT_TRUE(res.verdict.ks_trending_down) << res.verdict.ks_trend_slope;
  EXPECT_LT(res.rows.back().ks_prev, res.rows[1].ks_prev);
  EXPECT_TRUE(res.verdict.nondegenerate);
  for (const auto& row : res.rows) {
    EXPECT_GE(row.iqr, 0.0);
    if (!std::isnan(row.ks_prev)) {
      EXPECT_GE(row.ks_prev, 0.0);
      EXPECT_LE(row.ks_prev, 1.0);
    }
  }
}

TEST(ScalingStudy, UnscaledMeansTrackExpPhiOne) {
  const auto m = WeightModel::power_uniform_split(2.0);
  const auto prof = find_theta_star(m);
  const auto law = InitialLaw::point_mass(1.0);
  const std::vector<double> grid{1.0, 2.0, 3.0};
  ScalingOptions opt;
  opt.bootstrap = 0;
  const auto res = scaling_study(m, law, prof, grid, 5000, StreamKey(6), opt);
  for (const auto& row : res.rows)
    EXPECT_NEAR(row.raw_mean.mean, std::exp(row.t * prof.phi(1.0)), 4.0 * row.raw_mean.se) << row.t;
}

TEST(ScalingStudy, RefusesBeyondBoundaryWhenMinimizerAtLeastTwo) {
  const auto m = WeightModel::deterministic_pair(0.5);
  const auto prof = find_theta_star(m);
  const std::vector<double> grid{1.0, 2.0};
  ScalingOptions opt;
  opt.regime_override = Regime::beyond_boundary;
  EXPECT_THROW(scaling_study(m, InitialLaw::centered_uniform(1.0), prof, grid, 10, StreamKey(7), opt),
               AnalysisError);
}

TEST(ScalingStudy, BudgetErrorCarriesGuidance) {
  const auto m = WeightModel::power_uniform_split(2.0);
  const auto prof = find_theta_star(m);
  const std::vector<double> grid{1.0, 9.0};
  ScalingOptions opt;
  opt.sim.cap = 1000;
  try {
    scaling_study(m, InitialLaw::centered_uniform(1.0), prof, grid, 20, StreamKey(8), opt);
    FAIL() << "expected BudgetError";
  } catch (const BudgetError& e) {
    EXPECT_NE(std::string(e.what()).find("suggested max t"), std::string::npos);
  }
}

TEST(ScalingStudy, GridValidation) {
  const auto m = WeightModel::power_uniform_split(2.0);
  const auto prof = find_theta_star(m);
  const std::vector<double> bad{2.0, 1.0};
  EXPECT_THROW(scaling_study(m, InitialLaw::centered_uniform(1.0), prof, bad, 10, StreamKey(9)), DomainError);
  const std::vector<double> zero{0.0, 1.0};
  EXPECT_THROW(scaling_study(m, InitialLaw::centered_uniform(1.0), prof, zero, 10, StreamKey(9)), DomainError);
}
