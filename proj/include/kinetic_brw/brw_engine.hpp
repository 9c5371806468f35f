#pragma once

// Continuous-time branching random walk: every particle lives a unit-mean
// exponential lifetime, then is replaced by children displaced by -log A_j.
// The alive set I_t and the weighted sum U_t = Σ_{u∈I_t} e^{-S(u)} X_u give
// the solution μ_t = Law(U_t) of the kinetic-type equation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
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

inline constexpr std::size_t kDefaultParticleCap = 10'000'000;

struct SimOptions {
  std::size_t cap = kDefaultParticleCap;  ///< processed particles per replicate
  unsigned threads = 1;
};

struct PopulationSnapshot {
  double t = 0.0;
  std::vector<double> positions;     ///< S(u) for u ∈ I_t
  std::vector<std::uint32_t> depths;  ///< |u|, parallel to positions
  bool truncated = false;
  std::size_t particles_processed = 0;

  std::size_t size() const { return positions.size(); }
};

/// Alive sets at several observation times of one realization of the tree.
/// `times` must be sorted ascending and nonnegative. A particle is alive at
/// τ when birth ≤ τ < death; it branches only if it dies by the last time.
inline std::vector<PopulationSnapshot> simulate_population_at(const WeightModel& model,
                                                              std::span<const double> times, Rng& rng,
                                                              std::size_t cap = kDefaultParticleCap) {
  if (times.empty()) return {};
  if (!(times.front() >= 0.0)) throw DomainError("simulate_population: t must be >= 0");
  if (!std::is_sorted(times.begin(), times.end())) throw DomainError("simulate_population: times must be sorted");
  if (cap < 1) throw DomainError("simulate_population: cap must be >= 1");

  std::vector<PopulationSnapshot> snaps(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) snaps[k].t = times[k];
  const double horizon = times.back();

  struct Node {
    double birth;
    double position;
  };
  std::vector<Node> current{{0.0, 0.0}}, next;
  WeightVector w;
  std::size_t processed = 0;
  bool truncated = false;
  for (std::uint32_t depth = 0; !current.empty() && !truncated; ++depth) {
    next.clear();
    for (const Node& u : current) {
      if (++processed > cap) {
        truncated = true;
        break;
      }
      const double death = u.birth + rng.exponential();
      // First observation time at or after birth.
      auto k = static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), u.birth) - times.begin());
      for (; k < times.size() && times[k] < death; ++k) {
        snaps[k].positions.push_back(u.position);
        snaps[k].depths.push_back(depth);
      }
      if (death <= horizon) {
        model.sample(rng, w);
        for (std::size_t j = 0; j < w.size(); ++j) next.push_back({death, u.position + w.neg_logs[j]});
      }
    }
    current.swap(next);
  }
  for (auto& s : snaps) {
    s.truncated = truncated;
    s.particles_processed = std::min(processed, cap);
  }
  return snaps;
}

inline PopulationSnapshot simulate_population(const WeightModel& model, double t, Rng& rng,
                                              std::size_t cap = kDefaultParticleCap) {
  const double times[] = {t};
  return std::move(simulate_population_at(model, times, rng, cap).front());
}

/// U_t = Σ_{u∈I_t} e^{-S(u)} X_u with fresh X_u ~ μ₀ drawn from `rng`.
inline double compute_Ut(const PopulationSnapshot& snapshot, const InitialLaw& law, Rng& rng) {
  if (snapshot.truncated) throw BudgetError("compute_Ut: refusing a truncated population snapshot");
  stats::CompensatedSum sum;
  for (double s : snapshot.positions) sum.add(std::exp(-s) * law.sample(rng));
  return sum.value();
}

// ---------------------------------------------------------------------------

/// A sample of one law with provenance. `scaled` records whether the values
/// carry the rescaler t^p e^{-rt}.
struct SampleSet {
  std::vector<double> values;
  double t = 0.0;
  bool scaled = false;
  double p = 0.0;
  double r = 0.0;
  std::uint64_t seed = 0;
  std::size_t truncations = 0;

  std::size_t count() const { return values.size(); }
};

namespace detail {

inline void throw_first_truncation(const std::vector<std::uint8_t>& truncated, const char* what) {
  for (std::size_t i = 0; i < truncated.size(); ++i)
    if (truncated[i])
      throw BudgetError(std::string(what) + ": particle budget exhausted in replicate " + std::to_string(i) +
                        "; lower t or raise the cap");
}

}  // namespace detail

/// n independent replicates of U_t. Replicate i uses stream key.child(i).
inline SampleSet sample_mu_t(const WeightModel& model, const InitialLaw& law, double t, std::size_t n_samples,
                             const StreamKey& key, const SimOptions& opt = {}) {
  if (n_samples < 1) throw DomainError("sample_mu_t: n_samples must be >= 1");
  if (!(t >= 0.0)) throw DomainError("sample_mu_t: t must be >= 0");
  SampleSet set;
  set.t = t;
  set.seed = key.value();
  set.values.resize(n_samples);
  std::vector<std::uint8_t> truncated(n_samples, 0);
  parallel_for(n_samples, opt.threads, [&](std::size_t i) {
    Rng rng(key.child(i));
    const auto snap = simulate_population(model, t, rng, opt.cap);
    if (snap.truncated) {
      truncated[i] = 1;
      return;
    }
    set.values[i] = compute_Ut(snap, law, rng);
  });
  set.truncations = static_cast<std::size_t>(std::count(truncated.begin(), truncated.end(), 1));
  detail::throw_first_truncation(truncated, "sample_mu_t");
  return set;
}

/// U_{t+s} through the branching relation: Σ_{u∈I_t} e^{-S(u)} U_{s,u} with
/// independent copies U_{s,u}.
inline SampleSet sample_mu_t_composed(const WeightModel& model, const InitialLaw& law, double t, double s,
                                      std::size_t n_samples, const StreamKey& key, const SimOptions& opt = {}) {
  if (n_samples < 1) throw DomainError("sample_mu_t_composed: n_samples must be >= 1");
  if (!(t >= 0.0 && s >= 0.0)) throw DomainError("sample_mu_t_composed: times must be >= 0");
  SampleSet set;
  set.t = t + s;
  set.seed = key.value();
  set.values.resize(n_samples);
  std::vector<std::uint8_t> truncated(n_samples, 0);
  parallel_for(n_samples, opt.threads, [&](std::size_t i) {
    const StreamKey rep = key.child(i);
    Rng rng(rep);
    const auto outer = simulate_population(model, t, rng, opt.cap);
    if (outer.truncated) {
      truncated[i] = 1;
      return;
    }
    stats::CompensatedSum sum;
    for (std::size_t k = 0; k < outer.size(); ++k) {
      Rng inner_rng(rep.child("inner").child(k));
      const auto inner = simulate_population(model, s, inner_rng, opt.cap);
      if (inner.truncated) {
        truncated[i] = 1;
        return;
      }
      sum.add(std::exp(-outer.positions[k]) * compute_Ut(inner, law, inner_rng));
    }
    set.values[i] = sum.value();
  });
  set.truncations = static_cast<std::size_t>(std::count(truncated.begin(), truncated.end(), 1));
  detail::throw_first_truncation(truncated, "sample_mu_t_composed");
  return set;
}

// ---------------------------------------------------------------------------

struct ManyToOneReport {
  double t = 0.0;
  double theta = 0.0;
  stats::Estimate estimate;  ///< mean of Σ_{u∈I_t} e^{-θS(u)}
  double expected = 0.0;     ///< e^{tΦ(θ)}
  double z = 0.0;            ///< (estimate - expected) / SE
  std::size_t truncations = 0;
  bool valid = true;         ///< false when > 1% of replicates truncated
};

inline ManyToOneReport many_to_one_check(const WeightModel& model, const SpectralProfile& profile, double t,
                                         double theta, std::size_t replicates, const StreamKey& key,
                                         const SimOptions& opt = {}) {
  if (replicates < 100) throw DomainError("many_to_one_check: need at least 100 replicates");
  std::vector<double> sums(replicates, 0.0);
  std::vector<std::uint8_t> truncated(replicates, 0);
  parallel_for(replicates, opt.threads, [&](std::size_t i) {
    Rng rng(key.child(i));
    const auto snap = simulate_population(model, t, rng, opt.cap);
    truncated[i] = snap.truncated;
    stats::CompensatedSum s;
    for (double x : snap.positions) s.add(std::exp(-theta * x));
    sums[i] = s.value();
  });
  ManyToOneReport rep;
  rep.t = t;
  rep.theta = theta;
  rep.truncations = static_cast<std::size_t>(std::count(truncated.begin(), truncated.end(), 1));
  rep.valid = rep.truncations * 100 <= replicates;
  rep.estimate = stats::mean_se(sums);
  rep.expected = m_t_theta(profile, t, theta);
  rep.z = rep.estimate.se > 0.0 ? (rep.estimate.mean - rep.expected) / rep.estimate.se
                                : (rep.estimate.mean == rep.expected ? 0.0 : std::numeric_limits<double>::infinity());
  return rep;
}

// ---------------------------------------------------------------------------

/// Per-generation statistics of the skeleton walk V(u) = ϑS(u) + nδΦ(ϑ) over
/// u ∈ I_{nδ}.
struct SkeletonRow {
  std::size_t n = 0;
  stats::Estimate additive;      ///< W_n = Σ e^{-V(u)}
  stats::Estimate derivative;    ///< D_n = Σ V(u) e^{-V(u)}
  stats::Estimate second;        ///< Σ V(u)² e^{-V(u)}
  stats::Estimate min_recentred; ///< min_u V(u) - (3/2) log n, over non-empty replicates
  std::size_t empty_replicates = 0;
};

struct SkeletonReport {
  double delta = 0.0;
  double theta_star = 0.0;
  double sigma2_expected = 0.0;  ///< closed-form E[Σ_{u∈I_δ} V(u)² e^{-V(u)}]
  std::vector<SkeletonRow> rows;
  std::size_t truncations = 0;
};

inline SkeletonReport skeleton_diagnostics(const WeightModel& model, const SpectralProfile& profile, double delta,
                                           std::size_t n_max, std::size_t replicates, const StreamKey& key,
                                           const SimOptions& opt = {}) {
  if (!(delta > 0.0)) throw DomainError("skeleton_diagnostics: delta must be > 0");
  if (n_max < 1 || replicates < 2) throw DomainError("skeleton_diagnostics: need n_max >= 1 and replicates >= 2");
  const double theta = profile.theta_star();
  const double phi_theta = profile.phi_at_theta();
  std::vector<double> times(n_max);
  for (std::size_t n = 1; n <= n_max; ++n) times[n - 1] = static_cast<double>(n) * delta;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> W(n_max, std::vector<double>(replicates)), D = W, S2 = W, M = W;
  std::vector<std::uint8_t> truncated(replicates, 0);
  parallel_for(replicates, opt.threads, [&](std::size_t i) {
    Rng rng(key.child(i));
    const auto snaps = simulate_population_at(model, times, rng, opt.cap);
    truncated[i] = snaps.front().truncated;
    for (std::size_t n = 1; n <= n_max; ++n) {
      const double shift = static_cast<double>(n) * delta * phi_theta;
      stats::CompensatedSum w, d, s2;
      double vmin = std::numeric_limits<double>::infinity();
      for (double s : snaps[n - 1].positions) {
        const double v = theta * s + shift;
        const double e = std::exp(-v);
        w.add(e);
        d.add(v * e);
        s2.add(v * v * e);
        vmin = std::min(vmin, v);
      }
      W[n - 1][i] = w.value();
      D[n - 1][i] = d.value();
      S2[n - 1][i] = s2.value();
      M[n - 1][i] = snaps[n - 1].positions.empty() ? nan : vmin - 1.5 * std::log(static_cast<double>(n));
    }
  });
  detail::throw_first_truncation(truncated, "skeleton_diagnostics");

  SkeletonReport rep;
  rep.delta = delta;
  rep.theta_star = theta;
  rep.sigma2_expected = profile.skeleton_sigma2(delta);
  for (std::size_t n = 1; n <= n_max; ++n) {
    SkeletonRow row;
    row.n = n;
    row.additive = stats::mean_se(W[n - 1]);
    row.derivative = stats::mean_se(D[n - 1]);
    row.second = stats::mean_se(S2[n - 1]);
    std::vector<double> mins;
    for (double m : M[n - 1])
      if (std::isfinite(m)) mins.push_back(m);
    row.empty_replicates = replicates - mins.size();
    if (!mins.empty()) row.min_recentred = stats::mean_se(mins);
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace kinetic_brw
