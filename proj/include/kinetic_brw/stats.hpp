#pragma once

// Statistical machinery shared by the solver and the fixed-point tools.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "errors.hpp"
#include "random.hpp"

namespace kinetic_brw::stats {

/// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

/// Sample mean with the standard error of the mean.
inline Estimate mean_se(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("mean_se: empty sample");
  CompensatedSum s;
  for (double x : xs) s.add(x);
  const double n = static_cast<double>(xs.size());
  const double mean = s.value() / n;
  if (xs.size() < 2) return {mean, 0.0, xs.size()};
  CompensatedSum ss;
  for (double x : xs) ss.add((x - mean) * (x - mean));
  return {mean, std::sqrt(ss.value() / (n - 1.0) / n), xs.size()};
}

/// Linear-interpolation quantile (type 7) of an already sorted sample.
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DomainError("quantile: empty sample");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::vector<double> xs, double q) {
  std::sort(xs.begin(), xs.end());
  return quantile_sorted(xs, q);
}

inline double median_abs(std::span<const double> xs) {
  std::vector<double> a(xs.size());
  std::transform(xs.begin(), xs.end(), a.begin(), [](double x) { return std::abs(x); });
  return quantile(std::move(a), 0.5);
}

inline double iqr(std::span<const double> xs) {
  std::vector<double> s(xs.begin(), xs.end());
  std::sort(s.begin(), s.end());
  return quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
}

// ---------------------------------------------------------------------------
// Two-sample Kolmogorov-Smirnov

/// Asymptotic 1% critical constant c(0.01) of the two-sample KS test.
inline constexpr double kKsCritical1pct = 1.628;

struct KSResult {
  double statistic = 0.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  double critical_1pct = 0.0;
  bool rejected = false;
};

inline double ks_critical_1pct(std::size_t n1, std::size_t n2) {
  const double a = static_cast<double>(n1);
  const double b = static_cast<double>(n2);
  return kKsCritical1pct * std::sqrt((a + b) / (a * b));
}

/// Exact sup-distance between the two empirical CDFs. Ties across samples
/// are consumed together so the statistic is evaluated only at jump points.
inline KSResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n1 = static_cast<double>(x.size());
  const double n2 = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
  }
  KSResult r;
  r.statistic = d;
  r.n1 = x.size();
  r.n2 = y.size();
  r.critical_1pct = ks_critical_1pct(r.n1, r.n2);
  r.rejected = r.statistic > r.critical_1pct;
  return r;
}

// ---------------------------------------------------------------------------
// Empirical characteristic function with percentile bootstrap

struct CFPoint {
  double xi = 0.0;
  double re = 0.0;
  double im = 0.0;
  double re_lo = 0.0, re_hi = 0.0;
  double im_lo = 0.0, im_hi = 0.0;
};

inline std::complex<double> empirical_cf(std::span<const double> xs, double xi) {
  if (xs.empty()) throw DomainError("empirical_cf: empty sample");
  CompensatedSum re, im;
  for (double x : xs) {
    re.add(std::cos(xi * x));
    im.add(std::sin(xi * x));
  }
  const double n = static_cast<double>(xs.size());
  return {re.value() / n, im.value() / n};
}

/// φ̂(ξ) on a grid, each with a 95% percentile-bootstrap interval for the
/// real and imaginary parts. Resampling indices come from `rng`.
inline std::vector<CFPoint> empirical_cf_curve(std::span<const double> xs,
                                               std::span<const double> xi_grid,
                                               std::size_t bootstrap, Rng& rng) {
  if (xs.empty()) throw DomainError("empirical_cf_curve: empty sample");
  const std::size_t n = xs.size();
  std::vector<CFPoint> out;
  out.reserve(xi_grid.size());
  std::vector<double> c(n), s(n), boot_re(bootstrap), boot_im(bootstrap);
  for (double xi : xi_grid) {
    for (std::size_t k = 0; k < n; ++k) {
      c[k] = std::cos(xi * xs[k]);
      s[k] = std::sin(xi * xs[k]);
    }
    CFPoint p;
    p.xi = xi;
    const auto cf = empirical_cf(xs, xi);
    p.re = cf.real();
    p.im = cf.imag();
    if (bootstrap == 0) {
      p.re_lo = p.re_hi = p.re;
      p.im_lo = p.im_hi = p.im;
    } else {
      for (std::size_t b = 0; b < bootstrap; ++b) {
        double sr = 0.0, si = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const std::size_t idx = rng.index(n);
          sr += c[idx];
          si += s[idx];
        }
        boot_re[b] = sr / static_cast<double>(n);
        boot_im[b] = si / static_cast<double>(n);
      }
      std::sort(boot_re.begin(), boot_re.end());
      std::sort(boot_im.begin(), boot_im.end());
      p.re_lo = quantile_sorted(boot_re, 0.025);
      p.re_hi = quantile_sorted(boot_re, 0.975);
      p.im_lo = quantile_sorted(boot_im, 0.025);
      p.im_hi = quantile_sorted(boot_im, 0.975);
    }
    out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Log-log regression

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;  ///< slope ± 1.96 se
  double ci_hi = 0.0;
};

/// Least-squares slope of log y against log x.
inline SlopeFit loglog_slope(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw DomainError("loglog_slope: need at least 3 points");
  std::vector<double> lx, ly;
  for (auto [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0)) throw DomainError("loglog_slope: nonpositive coordinate");
    lx.push_back(std::log(x));
    ly.push_back(std::log(y));
  }
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
  }
  if (sxx == 0.0) throw DomainError("loglog_slope: all x coordinates coincide");
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    const double r = ly[k] - f.intercept - f.slope * lx[k];
    rss += r * r;
  }
  f.se = std::sqrt(rss / (n - 2.0) / sxx);
  f.ci_lo = f.slope - 1.96 * f.se;
  f.ci_hi = f.slope + 1.96 * f.se;
  return f;
}

// ---------------------------------------------------------------------------
// Moment subadditivity E|ΣX_j|^γ ≤ 2 Σ E|X_j|^γ for independent summands

struct DiscreteLaw {
  std::vector<double> values;
  std::vector<double> probs;
};

struct SubadditivityInstance {
  std::vector<DiscreteLaw> summands;
  double lhs = 0.0;  ///< E|ΣX_j|^γ by exact enumeration
  double rhs = 0.0;  ///< 2 Σ E|X_j|^γ
};

struct SubadditivityReport {
  double gamma = 0.0;
  std::size_t trials = 0;
  std::size_t violations = 0;
  double max_ratio = 0.0;  ///< max lhs / (Σ E|X_j|^γ) seen
  std::vector<SubadditivityInstance> counterexamples;
};

/// E|ΣX_j|^γ over all outcome combinations of independent discrete summands.
inline double enumerate_abs_moment_of_sum(const std::vector<DiscreteLaw>& laws, double gamma) {
  double total = 0.0;
  std::vector<std::size_t> pos(laws.size(), 0);
  for (;;) {
    double sum = 0.0, prob = 1.0;
    for (std::size_t j = 0; j < laws.size(); ++j) {
      sum += laws[j].values[pos[j]];
      prob *= laws[j].probs[pos[j]];
    }
    total += prob * std::pow(std::abs(sum), gamma);
    std::size_t j = 0;
    while (j < laws.size() && ++pos[j] == laws[j].values.size()) pos[j++] = 0;
    if (j == laws.size()) break;
  }
  return total;
}

inline double abs_moment(const DiscreteLaw& law, double gamma) {
  double m = 0.0;
  for (std::size_t k = 0; k < law.values.size(); ++k)
    m += law.probs[k] * std::pow(std::abs(law.values[k]), gamma);
  return m;
}

/// Random small instances (1..6 summands, 2..4 atoms each), centered when
/// γ > 1, checked by exhaustive enumeration.
inline SubadditivityReport check_moment_subadditivity(double gamma, std::size_t trials, Rng& rng) {
  if (!(gamma > 0.0 && gamma <= 2.0))
    throw DomainError("check_moment_subadditivity: gamma must lie in (0, 2]");
  SubadditivityReport rep;
  rep.gamma = gamma;
  rep.trials = trials;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t k = 1 + rng.index(6);
    std::vector<DiscreteLaw> laws(k);
    double rhs_sum = 0.0;
    for (auto& law : laws) {
      const std::size_t atoms = 2 + rng.index(3);
      double psum = 0.0;
      for (std::size_t a = 0; a < atoms; ++a) {
        // Occasional heavy atoms probe the extremes of the inequality.
        const double scale = rng.uniform() < 0.2 ? 50.0 : 3.0;
        law.values.push_back(rng.uniform(-scale, scale));
        law.probs.push_back(rng.uniform());
        psum += law.probs.back();
      }
      for (double& p : law.probs) p /= psum;
      if (gamma > 1.0) {
        double mean = 0.0;
        for (std::size_t a = 0; a < atoms; ++a) mean += law.probs[a] * law.values[a];
        for (double& v : law.values) v -= mean;
      }
      rhs_sum += abs_moment(law, gamma);
    }
    const double lhs = enumerate_abs_moment_of_sum(laws, gamma);
    const double rhs = 2.0 * rhs_sum;
    rep.max_ratio = std::max(rep.max_ratio, lhs / rhs_sum);
    if (lhs > rhs * (1.0 + 1e-12)) {
      ++rep.violations;
      if (rep.counterexamples.size() < 5) rep.counterexamples.push_back({laws, lhs, rhs});
    }
  }
  return rep;
}

}  // namespace kinetic_brw::stats
