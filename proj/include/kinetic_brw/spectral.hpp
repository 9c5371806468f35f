#pragma once

// Spectral function Φ(θ) = E[Σ A_j^θ] - 1, its slope F(θ) = Φ(θ)/θ, the
// minimizer ϑ of F and the regime classification that follows from it.

#include <boost/math/tools/minima.hpp>

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "random.hpp"
#include "stats.hpp"
#include "weight_models.hpp"

namespace kinetic_brw {

enum class EvalMethod { automatic, analytic, quadrature, monte_carlo };

inline const char* to_string(EvalMethod m) {
  switch (m) {
    case EvalMethod::analytic: return "analytic";
    case EvalMethod::quadrature: return "quadrature";
    case EvalMethod::monte_carlo: return "monte-carlo";
    default: return "automatic";
  }
}

struct EvalBudget {
  EvalMethod method = EvalMethod::automatic;
  std::size_t mc_draws = 100000;
  std::uint64_t seed = 0x5eed;
};

/// A fixed sample of weight vectors. Moments at every θ are evaluated on the
/// same draws, so Monte Carlo Φ, Φ' and D are smooth functions of θ.
class WeightSample {
 public:
  WeightSample(const WeightModel& model, std::size_t draws, Rng& rng) {
    offsets_.reserve(draws + 1);
    offsets_.push_back(0);
    WeightVector v;
    for (std::size_t i = 0; i < draws; ++i) {
      model.sample(rng, v);
      weights_.insert(weights_.end(), v.weights.begin(), v.weights.end());
      logs_.reserve(weights_.size());
      for (double nl : v.neg_logs) logs_.push_back(-nl);
      offsets_.push_back(weights_.size());
    }
  }

  std::size_t draws() const { return offsets_.size() - 1; }

  /// Per-draw sums Σ_j A_j^θ log^k A_j.
  template <class F>
  void for_each_draw(double theta, F&& f) const {
    for (std::size_t i = 0; i + 1 < offsets_.size(); ++i) {
      double s0 = 0.0, s1 = 0.0, s2 = 0.0;
      for (std::size_t j = offsets_[i]; j < offsets_[i + 1]; ++j) {
        const double w = theta == 0.0 ? 1.0 : std::exp(theta * logs_[j]);
        s0 += w;
        s1 += w * logs_[j];
        s2 += w * logs_[j] * logs_[j];
      }
      f(s0, s1, s2, offsets_[i], offsets_[i + 1]);
    }
  }

  const std::vector<double>& logs() const { return logs_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<double> weights_;
  std::vector<double> logs_;
  std::vector<std::size_t> offsets_;
};

/// Spectral moments at one θ with standard errors (zero for exact methods).
/// d_se is the SE of D(θ) = θΦ'(θ) - Φ(θ).
struct MomentEstimate {
  SpectralMoments value;
  SpectralMoments se;
  double d_se = 0.0;
};

inline MomentEstimate monte_carlo_moments(const WeightSample& sample, double theta) {
  const std::size_t n = sample.draws();
  std::vector<double> a0(n), a1(n), a2(n), d(n);
  std::size_t i = 0;
  sample.for_each_draw(theta, [&](double s0, double s1, double s2, std::size_t, std::size_t) {
    a0[i] = s0;
    a1[i] = s1;
    a2[i] = s2;
    d[i] = theta * s1 - s0 + 1.0;
    ++i;
  });
  const auto e0 = stats::mean_se(a0), e1 = stats::mean_se(a1), e2 = stats::mean_se(a2);
  return {{e0.mean, e1.mean, e2.mean}, {e0.se, e1.se, e2.se}, stats::mean_se(d).se};
}

inline EvalMethod resolve_method(const WeightModel& model, EvalMethod requested) {
  if (requested == EvalMethod::analytic && !model.has_analytic())
    throw DomainError("model '" + model.name() + "' has no closed-form spectral function");
  if (requested == EvalMethod::quadrature && !model.has_quadrature())
    throw DomainError("model '" + model.name() + "' has no quadrature spectral function");
  if (requested != EvalMethod::automatic) return requested;
  if (model.has_analytic()) return EvalMethod::analytic;
  if (model.has_quadrature()) return EvalMethod::quadrature;
  return EvalMethod::monte_carlo;
}

// ---------------------------------------------------------------------------

struct PhiValue {
  double value = 0.0;
  double se = 0.0;
  EvalMethod method = EvalMethod::analytic;
  bool divergence_suspected = false;
};

/// Φ(θ) by the best available route, or by the route the budget demands.
inline PhiValue phi(const WeightModel& model, double theta, const EvalBudget& budget = {}) {
  if (!(theta >= 0.0)) throw DomainError("phi: theta must be >= 0");
  const EvalMethod method = resolve_method(model, budget.method);
  switch (method) {
    case EvalMethod::analytic: return {model.analytic_moments(theta)->phi(), 0.0, method};
    case EvalMethod::quadrature: return {model.quadrature_moments(theta)->phi(), 0.0, method};
    default: break;
  }
  // Monte Carlo with a doubling check: the second half of the draws must
  // not move the estimate by more than 5 SE.
  Rng rng(StreamKey(budget.seed).child("phi"));
  const std::size_t m = std::max<std::size_t>(budget.mc_draws, 2);
  std::vector<double> xs(2 * m);
  WeightVector v;
  for (auto& x : xs) {
    model.sample(rng, v);
    double s = 0.0;
    for (double w : v.weights) s += std::pow(w, theta);
    x = s;
  }
  const auto first = stats::mean_se(std::span<const double>(xs).first(m));
  const auto both = stats::mean_se(xs);
  PhiValue out{first.mean - 1.0, first.se, method};
  out.divergence_suspected = !std::isfinite(both.mean) || std::abs(both.mean - first.mean) > 5.0 * first.se;
  return out;
}

// ---------------------------------------------------------------------------

/// Evaluators for Φ, Φ', Φ'' plus the located minimizer of F.
class SpectralProfile {
 public:
  using Evaluator = std::function<MomentEstimate(double)>;

  SpectralProfile(EvalMethod method, Evaluator eval) : method_(method), eval_(std::move(eval)) {}

  EvalMethod method() const { return method_; }
  MomentEstimate moments(double theta) const { return eval_(theta); }
  double phi(double theta) const { return eval_(theta).value.phi(); }
  double phi_se(double theta) const { return eval_(theta).se.m0; }
  double phi_prime(double theta) const { return eval_(theta).value.m1; }
  double phi_log2(double theta) const { return eval_(theta).value.m2; }
  double F(double theta) const { return phi(theta) / theta; }
  /// D(θ) = θΦ'(θ) - Φ(θ); its root is the minimizer of F.
  double D(double theta) const {
    const auto m = eval_(theta).value;
    return theta * m.m1 - m.phi();
  }

  bool located() const { return theta_star_.has_value(); }
  double theta_star() const { return require().theta; }
  double theta_star_se() const { return require().theta_se; }
  double F_at_theta() const { return require().F; }
  double phi_at_theta() const { return require().phi; }
  double D_at_theta() const { return require().D; }
  double phi_log2_at_theta() const { return require().phi_log2; }
  /// E[Σ_{u∈I_δ} V(u)² e^{-V(u)}] at δ = 1.
  double sigma2() const { return require().sigma2; }

  struct Located {
    double theta = 0.0;
    double theta_se = 0.0;
    double F = 0.0;
    double phi = 0.0;
    double D = 0.0;
    double phi_log2 = 0.0;
    double sigma2 = 0.0;
    int iterations = 0;
  };
  void set_located(const Located& l) { theta_star_ = l; }
  const Located& located_data() const { return require(); }

  /// Skeleton variance E[Σ_{u∈I_δ} V(u)² e^{-V(u)}] for lattice step δ.
  /// Summing the Poisson(δ) generation count against the tilted moments
  /// gives δ·ϑ²Φ''(ϑ) + δ²(Φ(ϑ) - ϑΦ'(ϑ))², and the second term vanishes
  /// at the minimizer.
  double skeleton_sigma2(double delta) const {
    const auto& l = require();
    const auto m = eval_(l.theta).value;
    const double drift = m.phi() - l.theta * m.m1;
    return delta * l.theta * l.theta * m.m2 + delta * delta * drift * drift;
  }

 private:
  const Located& require() const {
    if (!theta_star_) throw DomainError("spectral profile: minimizer not located");
    return *theta_star_;
  }

  EvalMethod method_;
  Evaluator eval_;
  std::optional<Located> theta_star_;
};

/// Profile without a located minimizer.
inline SpectralProfile make_profile(const WeightModel& model, const EvalBudget& budget = {}) {
  const EvalMethod method = resolve_method(model, budget.method);
  switch (method) {
    case EvalMethod::analytic:
      return {method, [model](double t) { return MomentEstimate{*model.analytic_moments(t), {}, 0.0}; }};
    case EvalMethod::quadrature:
      return {method, [model](double t) { return MomentEstimate{*model.quadrature_moments(t), {}, 0.0}; }};
    default: {
      Rng rng(StreamKey(budget.seed).child("spectral-sample"));
      auto sample = std::make_shared<const WeightSample>(model, budget.mc_draws, rng);
      return {method, [sample](double t) { return monte_carlo_moments(*sample, t); }};
    }
  }
}

struct Bracket {
  double lo = 0.05;
  double hi = 4.0;
};

/// Root of D on the bracket by Illinois false position with a bisection
/// fallback. D is increasing (D' = θΦ'' > 0).
inline SpectralProfile find_theta_star(SpectralProfile profile, Bracket bracket = {}, double tol = 1e-12,
                                       int max_expansions = 3) {
  if (!(bracket.lo > 0.0 && bracket.hi > bracket.lo)) throw DomainError("find_theta_star: need 0 < lo < hi");
  double lo = bracket.lo, hi = bracket.hi;
  double d_lo = profile.D(lo), d_hi = profile.D(hi);
  for (int k = 0; k < max_expansions && !(d_lo < 0.0 && d_hi > 0.0); ++k) {
    if (d_lo >= 0.0) d_lo = profile.D(lo /= 2.0);
    if (d_hi <= 0.0) d_hi = profile.D(hi *= 2.0);
  }
  if (!(d_lo < 0.0 && d_hi > 0.0)) {
    std::ostringstream os;
    os.precision(10);
    os << "minimizer not bracketed: D(" << lo << ") = " << d_lo << ", D(" << hi << ") = " << d_hi;
    throw BracketError(os.str(), d_lo, d_hi);
  }
  if (profile.method() == EvalMethod::monte_carlo) {
    const double se_lo = profile.moments(lo).d_se, se_hi = profile.moments(hi).d_se;
    if (std::abs(d_lo) < 2.0 * se_lo || std::abs(d_hi) < 2.0 * se_hi)
      throw BudgetError("budget insufficient: Monte Carlo noise in D exceeds its value at the bracket ends");
  }

  double a = lo, b = hi, fa = d_lo, fb = d_hi;
  double x = a, fx = fa;
  int side = 0, it = 0;
  for (; it < 300; ++it) {
    const double width = b - a;
    x = (a * fb - b * fa) / (fb - fa);
    if (!(x > a && x < b)) x = 0.5 * (a + b);
    fx = profile.D(x);
    if (std::abs(fx) <= tol || width <= 4.0 * std::numeric_limits<double>::epsilon() * b) break;
    if (fx < 0.0) {
      a = x;
      fa = fx;
      if (side == -1) fb *= 0.5;
      side = -1;
    } else {
      b = x;
      fb = fx;
      if (side == 1) fa *= 0.5;
      side = 1;
    }
    // Guarantee progress when false position stalls on one side.
    if (b - a > 0.5 * width) {
      const double mid = 0.5 * (a + b);
      const double fm = profile.D(mid);
      if (fm < 0.0) a = mid, fa = fm;
      else b = mid, fb = fm;
      side = 0;
    }
  }

  SpectralProfile::Located l;
  l.theta = x;
  l.iterations = it + 1;
  const auto m = profile.moments(x);
  l.phi = m.value.phi();
  l.F = l.phi / x;
  l.D = fx;
  l.phi_log2 = m.value.m2;
  l.sigma2 = x * x * m.value.m2;
  l.theta_se = (m.value.m2 > 0.0) ? m.d_se / (x * m.value.m2) : 0.0;
  if (profile.method() == EvalMethod::monte_carlo &&
      (x - 3.0 * l.theta_se <= lo || x + 3.0 * l.theta_se >= hi))
    throw BudgetError("budget insufficient: minimizer uncertainty spans the bracket");
  profile.set_located(l);
  return profile;
}

inline SpectralProfile find_theta_star(const WeightModel& model, Bracket bracket = {}, double tol = 1e-12,
                                       const EvalBudget& budget = {}) {
  return find_theta_star(make_profile(model, budget), bracket, tol);
}

/// m(t, θ) = E[Σ_{u∈I_t} e^{-θS(u)}] = e^{tΦ(θ)}.
inline double m_t_theta(const SpectralProfile& profile, double t, double theta) {
  if (!(t >= 0.0)) throw DomainError("m_t_theta: t must be >= 0");
  if (t == 0.0) return 1.0;
  return std::exp(t * profile.phi(theta));
}

// ---------------------------------------------------------------------------

enum class Regime { subcritical, boundary, beyond_boundary };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::subcritical: return "subcritical";
    case Regime::boundary: return "boundary";
    default: return "beyond_boundary";
  }
}

inline std::optional<Regime> regime_from_string(const std::string& s) {
  if (s == "subcritical") return Regime::subcritical;
  if (s == "boundary") return Regime::boundary;
  if (s == "beyond_boundary") return Regime::beyond_boundary;
  return std::nullopt;
}

/// The rescaler t^p e^{-rt} that stabilizes U_t in a given regime.
struct RegimeReport {
  double gamma = 0.0;
  double theta_star = 0.0;
  Regime regime = Regime::subcritical;
  double p = 0.0;
  double r = 0.0;
};

inline double default_tie_tol(const SpectralProfile& profile) {
  return profile.method() == EvalMethod::monte_carlo ? 3.0 * profile.theta_star_se() : 1e-6;
}

inline RegimeReport exponents_for(const SpectralProfile& profile, double gamma, Regime regime) {
  RegimeReport rep;
  rep.gamma = gamma;
  rep.theta_star = profile.theta_star();
  rep.regime = regime;
  switch (regime) {
    case Regime::subcritical:
      rep.p = 0.0;
      rep.r = profile.F(gamma);
      break;
    case Regime::boundary:
      rep.p = 1.0 / (2.0 * rep.theta_star);
      rep.r = profile.F_at_theta();
      break;
    case Regime::beyond_boundary:
      rep.p = 3.0 / (2.0 * rep.theta_star);
      rep.r = profile.F_at_theta();
      break;
  }
  return rep;
}

inline RegimeReport classify_regime(const SpectralProfile& profile, double gamma, double tie_tol) {
  if (!(gamma > 0.0 && gamma <= 2.0)) throw DomainError("classify_regime: gamma must lie in (0, 2]");
  const double diff = gamma - profile.theta_star();
  const Regime regime = std::abs(diff) <= tie_tol ? Regime::boundary
                        : diff < 0.0              ? Regime::subcritical
                                                  : Regime::beyond_boundary;
  return exponents_for(profile, gamma, regime);
}

inline RegimeReport classify_regime(const SpectralProfile& profile, double gamma) {
  return classify_regime(profile, gamma, default_tie_tol(profile));
}

// ---------------------------------------------------------------------------

struct IndexPoint {
  double t = 0.0;
  double m = 0.0;
  bool defined = false;
};

struct IndexCurve {
  std::vector<IndexPoint> points;
  std::optional<double> alpha;  ///< minimal positive root of m(t) = 1
};

/// m(t) = E[Σ U^{tF(ϑ)} A_j^t] = (Φ(t)+1) / ((t/ϑ)Φ(ϑ)+1) on a grid, and the
/// characteristic index located from it.
inline IndexCurve characteristic_index_curve(const SpectralProfile& profile, std::span<const double> t_grid,
                                             double root_tol = 1e-7) {
  const double theta = profile.theta_star();
  const double phi_theta = profile.phi_at_theta();
  auto m_of = [&](double t) -> std::optional<double> {
    const double den = t / theta * phi_theta + 1.0;
    const double num = profile.phi(t) + 1.0;
    if (!(den > 0.0) || !std::isfinite(num)) return std::nullopt;
    return num / den;
  };
  IndexCurve curve;
  for (double t : t_grid) {
    const auto m = m_of(t);
    curve.points.push_back({t, m.value_or(std::numeric_limits<double>::quiet_NaN()), m.has_value()});
  }
  const auto& pts = curve.points;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (!pts[k].defined || !(pts[k].t > 0.0)) continue;
    if (std::abs(pts[k].m - 1.0) <= root_tol) {
      curve.alpha = pts[k].t;
      return curve;
    }
    if (k + 1 < pts.size() && pts[k + 1].defined && (pts[k].m - 1.0) * (pts[k + 1].m - 1.0) < 0.0) {
      double a = pts[k].t, b = pts[k + 1].t;
      double fa = pts[k].m - 1.0;
      for (int i = 0; i < 200 && b - a > 1e-14 * b; ++i) {
        const double mid = 0.5 * (a + b);
        const double fm = *m_of(mid) - 1.0;
        if ((fm < 0.0) == (fa < 0.0)) a = mid, fa = fm;
        else b = mid;
      }
      curve.alpha = 0.5 * (a + b);
      return curve;
    }
    // Tangential root: a local minimum of m touching 1 between neighbours.
    if (k > 0 && k + 1 < pts.size() && pts[k - 1].defined && pts[k + 1].defined && pts[k].m <= pts[k - 1].m &&
        pts[k].m <= pts[k + 1].m) {
      const auto [tmin, mmin] = boost::math::tools::brent_find_minima(
          [&](double t) { return m_of(t).value_or(std::numeric_limits<double>::infinity()); }, pts[k - 1].t,
          pts[k + 1].t, 40);
      if (std::abs(mmin - 1.0) <= root_tol) {
        curve.alpha = tmin;
        return curve;
      }
    }
  }
  return curve;
}

// ---------------------------------------------------------------------------

struct AssumptionReport {
  Declared nonlattice = Declared::unknown;
  double theta_star = 0.0;
  stats::Estimate log2_moment;  ///< E[Σ A^ϑ log² A]
  bool log2_finite = false;
  stats::Estimate x_log2;        ///< E[X log₊² X], X = Σ A^ϑ
  stats::Estimate xtilde_log;    ///< E[X̃ log₊ X̃], X̃ = Σ A^ϑ log₊ A
  bool xlog_finite = false;
  bool offspring_finite = false;
  std::string offspring_reason;
  std::vector<std::string> warnings;
};

/// Advisory numerical screens of the moment assumptions at ϑ.
inline AssumptionReport screen_assumptions(const WeightModel& model, const SpectralProfile& profile, Rng& rng,
                                           std::size_t draws = 100000) {
  AssumptionReport rep;
  rep.nonlattice = model.nonlattice_declared();
  if (rep.nonlattice == Declared::unknown)
    rep.warnings.push_back("non-lattice property of model '" + model.name() + "' is not declared");
  if (rep.nonlattice == Declared::no)
    rep.warnings.push_back("model '" + model.name() + "' is lattice; non-lattice assumption fails");
  const double theta = profile.theta_star();
  rep.theta_star = theta;
  std::vector<double> l2(draws), xl(draws), xtl(draws);
  WeightVector v;
  for (std::size_t i = 0; i < draws; ++i) {
    model.sample(rng, v);
    double s = 0.0, st = 0.0, sl2 = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double la = -v.neg_logs[j];
      const double w = std::exp(theta * la);
      s += w;
      st += w * std::max(la, 0.0);
      sl2 += w * la * la;
    }
    const double lp = std::max(std::log(s), 0.0);
    const double lpt = st > 0.0 ? std::max(std::log(st), 0.0) : 0.0;
    l2[i] = sl2;
    xl[i] = s * lp * lp;
    xtl[i] = st * lpt;
  }
  rep.log2_moment = stats::mean_se(l2);
  rep.x_log2 = stats::mean_se(xl);
  rep.xtilde_log = stats::mean_se(xtl);
  rep.log2_finite = std::isfinite(rep.log2_moment.mean) && std::isfinite(rep.log2_moment.se);
  rep.xlog_finite = std::isfinite(rep.x_log2.mean) && std::isfinite(rep.xtilde_log.mean) &&
                  std::isfinite(rep.x_log2.se) && std::isfinite(rep.xtilde_log.se);
  if (model.max_children()) {
    rep.offspring_finite = true;
    rep.offspring_reason = "N is bounded by " + std::to_string(*model.max_children()) + ", so E[N] < inf";
  } else {
    const double en = profile.phi(0.0) + 1.0;
    rep.offspring_finite = std::isfinite(en);
    rep.offspring_reason = rep.offspring_finite ? "E[N] finite" : "E[N] not known to be finite";
  }
  return rep;
}

}  // namespace kinetic_brw
