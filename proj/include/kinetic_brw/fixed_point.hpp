#pragma once

// Pool recursion for the smoothing-transform fixed point
//   Z =d U^{F(ϑ)} Σ_j A_j Z^(j),
// and a factorization diagnostic Z =d W^{1/ϑ} Y_ϑ.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "initial_laws.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "spectral.hpp"
#include "stats.hpp"
#include "weight_models.hpp"

namespace kinetic_brw {

struct FixedPointPool {
  std::vector<double> samples;
  std::size_t iteration = 0;
  std::vector<double> scale_tracker;  ///< median |Z| after each iteration, starting with the seed

  static FixedPointPool from_samples(std::vector<double> s) {
    FixedPointPool p;
    p.samples = std::move(s);
    p.scale_tracker.push_back(stats::median_abs(p.samples));
    return p;
  }
};

/// One application of the map: sample i of the new pool is
/// U^{F} Σ_j A_j z_{k_j} with the k_j uniform over the previous pool.
/// Output index i draws from stream key.child(i).
inline FixedPointPool smoothing_step(const FixedPointPool& pool, const WeightModel& model, double F_theta,
                                     const StreamKey& key, unsigned threads = 1) {
  if (pool.samples.empty()) throw DomainError("smoothing_step: empty pool");
  const std::size_t n = pool.samples.size();
  FixedPointPool out;
  out.samples.resize(n);
  out.iteration = pool.iteration + 1;
  parallel_for(n, threads, [&](std::size_t i) {
    Rng rng(key.child(i));
    const double u = rng.uniform();
    thread_local WeightVector a;
    model.sample(rng, a);
    double s = 0.0;
    for (double w : a.weights) s += w * pool.samples[rng.index(n)];
    out.samples[i] = std::pow(u, F_theta) * s;
  });
  out.scale_tracker = pool.scale_tracker;
  if (out.scale_tracker.empty()) out.scale_tracker.push_back(stats::median_abs(pool.samples));
  out.scale_tracker.push_back(stats::median_abs(out.samples));
  return out;
}

struct FixedPointReport {
  std::vector<double> ks;      ///< KS(pool_k, pool_{k+1}) per iteration
  std::size_t iterations = 0;
  bool converged = false;
  bool collapsed = false;      ///< median |Z| fell below 1% of its initial value
  double initial_scale = 0.0;
  double final_scale = 0.0;
};

struct FixedPointResult {
  FixedPointPool pool;
  FixedPointReport report;
};

/// Iterates the smoothing map until consecutive pools are within ks_tol in
/// KS distance or max_iters is reached. Iteration k uses key.child(k).
inline FixedPointResult iterate_to_fixed_point(FixedPointPool seed_pool, const WeightModel& model, double F_theta,
                                               std::size_t max_iters, double ks_tol, const StreamKey& key,
                                               unsigned threads = 1) {
  if (seed_pool.samples.empty()) throw DomainError("iterate_to_fixed_point: empty pool");
  if (seed_pool.scale_tracker.empty()) seed_pool.scale_tracker.push_back(stats::median_abs(seed_pool.samples));
  FixedPointResult res;
  res.report.initial_scale = seed_pool.scale_tracker.front();
  FixedPointPool pool = std::move(seed_pool);
  for (std::size_t k = 0; k < max_iters; ++k) {
    FixedPointPool next = smoothing_step(pool, model, F_theta, key.child(k), threads);
    const double ks = stats::ks_two_sample(pool.samples, next.samples).statistic;
    res.report.ks.push_back(ks);
    pool = std::move(next);
    ++res.report.iterations;
    const double scale = pool.scale_tracker.back();
    if (res.report.initial_scale > 0.0 && scale < 0.01 * res.report.initial_scale) {
      res.report.collapsed = true;
      break;
    }
    if (ks < ks_tol) {
      res.report.converged = true;
      break;
    }
  }
  res.report.final_scale = pool.scale_tracker.back();
  res.pool = std::move(pool);
  return res;
}

/// KS(pool, T(pool)) against the split-half KS noise floor of the pool.
struct ResidualReport {
  double residual_ks = 0.0;
  double noise_floor_ks = 0.0;
  bool rejected = false;
};

inline ResidualReport fixed_point_residual(const FixedPointPool& pool, const WeightModel& model, double F_theta,
                                           const StreamKey& key, unsigned threads = 1) {
  const auto next = smoothing_step(pool, model, F_theta, key, threads);
  const auto ks = stats::ks_two_sample(pool.samples, next.samples);
  const std::size_t half = pool.samples.size() / 2;
  if (half == 0) throw DomainError("fixed_point_residual: pool too small to split");
  const std::span<const double> all(pool.samples);
  ResidualReport r;
  r.residual_ks = ks.statistic;
  r.rejected = ks.rejected;
  r.noise_floor_ks = stats::ks_two_sample(all.first(half), all.subspan(half)).statistic;
  return r;
}

// ---------------------------------------------------------------------------

struct FactorizationFit {
  double scale = 0.0;  ///< fitted scale of Y_ϑ
  double ks = 0.0;     ///< KS(pool, scale · W^{1/ϑ} Y_ϑ)
  std::size_t synthetic_count = 0;
};

/// Synthesizes W^{1/ϑ} Y_ϑ from the given W values (Y_ϑ unit symmetric
/// ϑ-stable, one per W value), then matches median |·| to the pool.
inline FactorizationFit fit_factorization(std::span<const double> pool, std::span<const double> w_values,
                                          double theta, const StreamKey& key) {
  if (pool.empty() || w_values.empty()) throw DomainError("fit_factorization: empty input");
  if (!(theta > 0.0 && theta <= 2.0)) throw DomainError("fit_factorization: theta must lie in (0, 2]");
  Rng rng(key);
  std::vector<double> synth(w_values.size());
  for (std::size_t i = 0; i < synth.size(); ++i)
    synth[i] = std::pow(std::max(w_values[i], 0.0), 1.0 / theta) * sample_symmetric_stable(theta, rng);
  const double target = stats::median_abs(pool);
  const double unit = stats::median_abs(synth);
  FactorizationFit fit;
  fit.scale = unit > 0.0 ? target / unit : 0.0;
  for (double& s : synth) s *= fit.scale;
  fit.ks = stats::ks_two_sample(pool, synth).statistic;
  fit.synthetic_count = synth.size();
  return fit;
}

struct FactorizationReport {
  std::size_t generations = 0;
  std::size_t replicates = 0;
  stats::Estimate w_mean;          ///< mean of the derivative-martingale estimate
  double negative_fraction = 0.0;  ///< share of replicates with D_n < 0
  bool reliable = true;
  FactorizationFit fit;
  stats::SlopeFit tail;            ///< log-log CCDF slope of |Z| in the upper tail
  bool tail_fitted = false;
  std::vector<std::string> notes;
};

struct FactorizationOptions {
  std::size_t replicates = 2000;
  std::size_t generations = 12;
  double tail_upper = 0.10;   ///< tail window: from the top 10% ...
  double tail_lower = 0.002;  ///< ... down to the top 0.2%
  unsigned threads = 1;
};

/// Log-log slope of the empirical complementary CDF of |x| over a tail window.
inline stats::SlopeFit tail_slope(std::span<const double> xs, double upper, double lower) {
  std::vector<double> a(xs.size());
  std::transform(xs.begin(), xs.end(), a.begin(), [](double x) { return std::abs(x); });
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  std::vector<std::pair<double, double>> pts;
  const int m = 20;
  for (int k = 0; k < m; ++k) {
    // Geometric spacing of the tail probability across the window.
    const double q = upper * std::pow(lower / upper, static_cast<double>(k) / (m - 1));
    const auto idx = static_cast<std::size_t>(std::floor(n * (1.0 - q)));
    if (idx >= a.size() || !(a[idx] > 0.0)) continue;
    pts.emplace_back(a[idx], (n - static_cast<double>(idx)) / n);
  }
  return stats::loglog_slope(pts);
}

/// W is estimated by the derivative martingale D_n of the discrete branching
/// walk with first-generation positions -log(U^{Φ(ϑ)} A_j^ϑ), after n
/// generations. Advisory only: finite n biases the estimate.
inline FactorizationReport factorization_diagnostic(std::span<const double> pool, const WeightModel& model,
                                                    const SpectralProfile& profile, const StreamKey& key,
                                                    const FactorizationOptions& opt = {}) {
  const double theta = profile.theta_star();
  if (!(theta < 2.0)) throw AnalysisError("factorization_diagnostic: needs a minimizer below 2");
  const double phi_theta = profile.phi_at_theta();
  FactorizationReport rep;
  rep.generations = opt.generations;
  rep.replicates = opt.replicates;
  std::vector<double> dn(opt.replicates);
  parallel_for(opt.replicates, opt.threads, [&](std::size_t i) {
    Rng rng(key.child("martingale").child(i));
    std::vector<double> cur{0.0}, next;
    WeightVector a;
    for (std::size_t g = 0; g < opt.generations && !cur.empty(); ++g) {
      next.clear();
      for (double v : cur) {
        const double shift = -phi_theta * std::log(rng.uniform());
        model.sample(rng, a);
        for (double nl : a.neg_logs) next.push_back(v + shift + theta * nl);
      }
      cur.swap(next);
    }
    stats::CompensatedSum d;
    for (double v : cur) d.add(v * std::exp(-v));
    dn[i] = d.value();
  });
  rep.w_mean = stats::mean_se(dn);
  const auto negatives = std::count_if(dn.begin(), dn.end(), [](double d) { return d < 0.0; });
  rep.negative_fraction = static_cast<double>(negatives) / static_cast<double>(dn.size());
  rep.reliable = rep.negative_fraction <= 0.4;
  if (!rep.reliable) rep.notes.push_back("more than 40% of derivative-martingale estimates are negative");
  rep.notes.push_back("W estimated from finite-generation D_n; generation count is a budget heuristic");
  rep.fit = fit_factorization(pool, dn, theta, key.child("stable"));
  try {
    rep.tail = tail_slope(pool, opt.tail_upper, opt.tail_lower);
    rep.tail_fitted = true;
  } catch (const DomainError&) {
    rep.notes.push_back("tail window too sparse for a slope fit");
  }
  return rep;
}

}  // namespace kinetic_brw
