#pragma once

// Scaling studies: sample U_t on a time grid, apply the regime's rescaler
// t^p e^{-rt} and measure how the rescaled laws settle down.

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "brw_engine.hpp"
#include "errors.hpp"
#include "initial_laws.hpp"
#include "spectral.hpp"
#include "stats.hpp"
#include "weight_models.hpp"

namespace kinetic_brw {

inline double rescale_factor(double t, double p, double r) {
  return (p == 0.0 ? 1.0 : std::pow(t, p)) * std::exp(-r * t);
}

/// Multiplies every value by t^p e^{-rt}. A set is rescaled at most once.
inline SampleSet rescale(SampleSet set, double p, double r) {
  if (set.scaled) throw DomainError("rescale: sample set is already rescaled");
  if (p != 0.0 && !(set.t > 0.0)) throw DomainError("rescale: t must be > 0 when p != 0");
  const double factor = rescale_factor(set.t, p, r);
  for (double& v : set.values) v *= factor;
  set.scaled = true;
  set.p = p;
  set.r = r;
  return set;
}

inline std::vector<stats::CFPoint> empirical_cf_curve(const SampleSet& set, std::span<const double> xi_grid,
                                                      std::size_t bootstrap, Rng& rng) {
  if (set.values.empty()) throw DomainError("empirical_cf_curve: empty sample set");
  return stats::empirical_cf_curve(set.values, xi_grid, bootstrap, rng);
}

struct ScalingOptions {
  SimOptions sim;
  std::vector<double> xi_grid{0.25, 0.5, 1.0, 2.0, 4.0};
  std::size_t bootstrap = 500;
  std::optional<Regime> regime_override;
  double iqr_floor_fraction = 0.1;
  double ks_threshold = 0.05;
};

struct ScalingRow {
  double t = 0.0;
  std::size_t n = 0;
  double ks_prev = std::numeric_limits<double>::quiet_NaN();  ///< KS to the previous grid time
  bool ks_prev_rejected = false;
  double iqr = 0.0;
  double median_abs = 0.0;
  stats::Estimate raw_mean;  ///< mean of the unscaled U_t
  std::vector<stats::CFPoint> cf;
};

struct ScalingVerdict {
  bool converged = false;
  double final_ks = std::numeric_limits<double>::quiet_NaN();
  bool ks_trending_down = false;
  double ks_trend_slope = 0.0;  ///< least-squares slope of consecutive KS against t
  double iqr = 0.0;
  double iqr_initial = 0.0;
  bool nondegenerate = false;
};

struct ScalingStudyResult {
  RegimeReport regime;
  std::vector<ScalingRow> rows;
  std::vector<SampleSet> raw;     ///< unscaled U_t per grid time
  std::vector<SampleSet> scaled;  ///< rescaled per grid time
  ScalingVerdict verdict;
  std::vector<std::string> warnings;
};

/// Largest t for which the mean particle count 2e^{tΦ(0)} fits the cap.
inline double suggested_max_t(const SpectralProfile& profile, std::size_t cap) {
  const double growth = profile.phi(0.0);
  if (!(growth > 0.0)) return std::numeric_limits<double>::infinity();
  return std::log(static_cast<double>(cap) / 2.0) / growth;
}

inline ScalingStudyResult scaling_study(const WeightModel& model, const InitialLaw& law,
                                        const SpectralProfile& profile, std::span<const double> t_grid,
                                        std::size_t n_samples, const StreamKey& key,
                                        const ScalingOptions& opt = {}) {
  if (t_grid.empty()) throw DomainError("scaling_study: empty time grid");
  for (std::size_t k = 0; k < t_grid.size(); ++k)
    if (!(t_grid[k] >= 0.0) || (k > 0 && !(t_grid[k] > t_grid[k - 1])))
      throw DomainError("scaling_study: time grid must be nonnegative and increasing");

  ScalingStudyResult res;
  res.regime = opt.regime_override ? exponents_for(profile, law.gamma(), *opt.regime_override)
                                   : classify_regime(profile, law.gamma());
  if (res.regime.regime == Regime::beyond_boundary && !(profile.theta_star() < 2.0))
    throw AnalysisError("scaling_study: beyond-boundary scaling needs a minimizer below 2");
  if (res.regime.p != 0.0 && !(t_grid.front() > 0.0))
    throw DomainError("scaling_study: t = 0 cannot be rescaled with a polynomial factor");

  const double t_max = suggested_max_t(profile, opt.sim.cap);
  if (t_grid.back() > t_max) {
    std::ostringstream os;
    os << "expected particle count at t = " << t_grid.back() << " exceeds the cap; suggested max t = " << t_max;
    res.warnings.push_back(os.str());
  }

  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    SampleSet raw;
    try {
      raw = sample_mu_t(model, law, t_grid[k], n_samples, key.child("time").child(k), opt.sim);
    } catch (const BudgetError& e) {
      std::ostringstream os;
      os << e.what() << " (t = " << t_grid[k] << ", suggested max t = " << t_max << ")";
      throw BudgetError(os.str());
    }
    SampleSet scaled = rescale(raw, res.regime.p, res.regime.r);

    ScalingRow row;
    row.t = t_grid[k];
    row.n = scaled.count();
    row.iqr = stats::iqr(scaled.values);
    row.median_abs = stats::median_abs(scaled.values);
    row.raw_mean = stats::mean_se(raw.values);
    Rng boot(key.child("bootstrap").child(k));
    row.cf = empirical_cf_curve(scaled, opt.xi_grid, opt.bootstrap, boot);
    if (k > 0) {
      const auto ks = stats::ks_two_sample(res.scaled.back().values, scaled.values);
      row.ks_prev = ks.statistic;
      row.ks_prev_rejected = ks.rejected;
    }
    res.rows.push_back(std::move(row));
    res.raw.push_back(std::move(raw));
    res.scaled.push_back(std::move(scaled));
  }

  auto& v = res.verdict;
  v.iqr_initial = res.rows.front().iqr;
  v.iqr = res.rows.back().iqr;
  v.nondegenerate = v.iqr >= opt.iqr_floor_fraction * v.iqr_initial && v.iqr > 0.0;
  if (res.rows.size() >= 2) {
    v.final_ks = res.rows.back().ks_prev;
    v.converged = v.final_ks < opt.ks_threshold;
  }
  if (res.rows.size() >= 3) {
    double st = 0.0, sk = 0.0, n = 0.0;
    for (std::size_t k = 1; k < res.rows.size(); ++k) {
      st += res.rows[k].t;
      sk += res.rows[k].ks_prev;
      n += 1.0;
    }
    const double mt = st / n, mk = sk / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 1; k < res.rows.size(); ++k) {
      sxx += (res.rows[k].t - mt) * (res.rows[k].t - mt);
      sxy += (res.rows[k].t - mt) * (res.rows[k].ks_prev - mk);
    }
    v.ks_trend_slope = sxy / sxx;
    v.ks_trending_down = v.ks_trend_slope < 0.0;
  }
  return res;
}

}  // namespace kinetic_brw
