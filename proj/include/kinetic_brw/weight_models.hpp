#pragma once

// Random weight vectors A = (A_1, ..., A_N) driving the smoothing transform,
// with closed-form or quadrature spectral moments where they are known.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"
#include "random.hpp"

namespace kinetic_brw {

/// One realization of A with zero entries removed. neg_logs[j] = -log weights[j]
/// is kept alongside because the engine works on the log scale.
struct WeightVector {
  std::vector<double> weights;
  std::vector<double> neg_logs;

  std::size_t size() const { return weights.size(); }
  bool empty() const { return weights.empty(); }
  void clear() {
    weights.clear();
    neg_logs.clear();
  }
  void push(double w, double neg_log) {
    if (w > 0.0 && std::isfinite(neg_log)) {
      weights.push_back(w);
      neg_logs.push_back(neg_log);
    }
  }
  void push(double w) {
    if (w > 0.0) push(w, -std::log(w));
  }
};

/// E[Σ A_j^θ], E[Σ A_j^θ log A_j] and E[Σ A_j^θ log² A_j] at one θ.
/// These are Φ(θ) + 1, Φ'(θ) and Φ''(θ).
struct SpectralMoments {
  double m0 = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  double phi() const { return m0 - 1.0; }
};

enum class Declared { yes, no, unknown };

inline const char* to_string(Declared d) {
  switch (d) {
    case Declared::yes: return "yes";
    case Declared::no: return "no";
    default: return "unknown";
  }
}

// ---------------------------------------------------------------------------
// Presets

/// (|sin U|, |cos U|), U uniform on [0, 2π): the 1-D Kac caricature with the
/// signs absorbed into a symmetric initial law.
struct Kac {};

/// (a, a) deterministically.
struct DeterministicPair {
  double a = 0.5;
};

/// (U^a, (1-U)^a), U uniform on (0, 1).
struct PowerUniformSplit {
  double a = 1.0;
};

/// Law of one trading coefficient: uniform on [lo, hi] or a finite atom set.
struct UniformParam {
  double lo = 0.0;
  double hi = 1.0;
};
struct DiscreteParam {
  std::vector<double> values;
  std::vector<double> probs;
};
using ParamLaw = std::variant<UniformParam, DiscreteParam>;

/// Two-agent trade: A = (ε p₁ + (1-ε) q₂, ε q₁ + (1-ε) p₂), ε ~ Bernoulli(1/2).
struct Econophysics {
  ParamLaw p1, q1, p2, q2;
};

struct TableAtom {
  double p = 0.0;
  std::vector<double> w;
};
/// Finite mixture of fixed weight vectors.
struct UserTable {
  std::vector<TableAtom> atoms;
};

using WeightModelKind = std::variant<Kac, DeterministicPair, PowerUniformSplit, Econophysics, UserTable>;

namespace detail {

// ∫ x^θ log^k x dx antiderivative, b = θ + 1.
inline double power_log_antiderivative(double x, double theta, int k) {
  if (x == 0.0) return 0.0;
  const double b = theta + 1.0;
  const double lx = std::log(x);
  const double xb = std::pow(x, b);
  switch (k) {
    case 0: return xb / b;
    case 1: return xb * (lx / b - 1.0 / (b * b));
    default: return xb * (lx * lx / b - 2.0 * lx / (b * b) + 2.0 / (b * b * b));
  }
}

// E[p^θ log^k p ; p > 0].
inline double param_moment(const ParamLaw& law, double theta, int k) {
  return std::visit(
      [&](const auto& l) -> double {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, UniformParam>) {
          if (l.hi == l.lo) {
            if (l.lo == 0.0) return 0.0;
            return std::pow(l.lo, theta) * std::pow(std::log(l.lo), k);
          }
          return (power_log_antiderivative(l.hi, theta, k) - power_log_antiderivative(l.lo, theta, k)) /
                 (l.hi - l.lo);
        } else {
          double m = 0.0;
          for (std::size_t i = 0; i < l.values.size(); ++i)
            if (l.values[i] > 0.0)
              m += l.probs[i] * std::pow(l.values[i], theta) * std::pow(std::log(l.values[i]), k);
          return m;
        }
      },
      law);
}

inline double param_mean(const ParamLaw& law) {
  return std::visit(
      [](const auto& l) -> double {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, UniformParam>) return 0.5 * (l.lo + l.hi);
        else return std::inner_product(l.values.begin(), l.values.end(), l.probs.begin(), 0.0);
      },
      law);
}

inline double sample_param(const ParamLaw& law, Rng& rng) {
  return std::visit(
      [&rng](const auto& l) -> double {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, UniformParam>) {
          return rng.uniform(l.lo, l.hi);
        } else {
          if (l.values.size() == 1) return l.values[0];
          double u = rng.uniform();
          for (std::size_t i = 0; i + 1 < l.values.size(); ++i) {
            if (u < l.probs[i]) return l.values[i];
            u -= l.probs[i];
          }
          return l.values.back();
        }
      },
      law);
}

inline void validate_probs(const std::vector<double>& probs, const char* what) {
  double s = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw DomainError(std::string(what) + ": negative probability");
    s += p;
  }
  if (std::abs(s - 1.0) > 1e-9) throw DomainError(std::string(what) + ": probabilities must sum to 1");
}

inline void validate_param(const ParamLaw& law) {
  std::visit(
      [](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, UniformParam>) {
          if (!(l.lo >= 0.0 && l.hi >= l.lo && std::isfinite(l.hi)))
            throw DomainError("econophysics: uniform law needs 0 <= lo <= hi < inf");
        } else {
          if (l.values.empty() || l.values.size() != l.probs.size())
            throw DomainError("econophysics: discrete law needs matching values/probs");
          for (double v : l.values)
            if (!(v >= 0.0 && std::isfinite(v))) throw DomainError("econophysics: values must be finite and >= 0");
          validate_probs(l.probs, "econophysics");
        }
      },
      law);
}

}  // namespace detail

/// (u^a, (1-u)^a) for one fixed u ∈ (0, 1), appended to `out`.
inline void power_uniform_split_weights(double a, double u, WeightVector& out) {
  out.push(std::pow(u, a), -a * std::log(u));
  out.push(std::pow(1.0 - u, a), -a * std::log1p(-u));
}

// ---------------------------------------------------------------------------

class WeightModel {
 public:
  explicit WeightModel(WeightModelKind kind) : kind_(std::move(kind)) {
    std::visit([this](const auto& k) { init(k); }, kind_);
  }

  static WeightModel kac() { return WeightModel(Kac{}); }
  static WeightModel deterministic_pair(double a) { return WeightModel(DeterministicPair{a}); }
  static WeightModel power_uniform_split(double a) { return WeightModel(PowerUniformSplit{a}); }
  static WeightModel econophysics(ParamLaw p1, ParamLaw q1, ParamLaw p2, ParamLaw q2) {
    return WeightModel(Econophysics{std::move(p1), std::move(q1), std::move(p2), std::move(q2)});
  }
  static WeightModel table(std::vector<TableAtom> atoms) { return WeightModel(UserTable{std::move(atoms)}); }

  const WeightModelKind& kind() const { return kind_; }
  const std::string& name() const { return name_; }
  Declared nonlattice_declared() const { return nonlattice_; }
  std::optional<std::size_t> max_children() const { return max_children_; }

  /// Draws one A into `out` (cleared first). Zero weights are dropped.
  void sample(Rng& rng, WeightVector& out) const {
    out.clear();
    std::visit([&](const auto& k) { sample_impl(k, rng, out); }, kind_);
  }

  WeightVector sample(Rng& rng) const {
    WeightVector v;
    sample(rng, v);
    return v;
  }

  bool has_analytic() const { return !std::holds_alternative<Kac>(kind_); }
  bool has_quadrature() const { return std::holds_alternative<Kac>(kind_); }

  /// Closed-form spectral moments; nullopt for models without them.
  std::optional<SpectralMoments> analytic_moments(double theta) const {
    return std::visit([theta](const auto& k) { return analytic_impl(k, theta); }, kind_);
  }

  /// Quadrature-backed spectral moments for one-parameter continuous models.
  std::optional<SpectralMoments> quadrature_moments(double theta, double tol = 1e-10) const {
    if (!std::holds_alternative<Kac>(kind_)) return std::nullopt;
    // |sin U| and |cos U| share the law of sin V, V uniform on (0, π/2).
    auto moment = [&](int k) {
      auto f = [theta, k](double v) {
        const double s = std::sin(v);
        const double ls = std::log(s);
        return std::pow(s, theta) * (k == 0 ? 1.0 : k == 1 ? ls : ls * ls);
      };
      return 2.0 * numerics::integrate(f, 0.0, std::numbers::pi / 2.0, tol) * (2.0 / std::numbers::pi);
    };
    return SpectralMoments{moment(0), moment(1), moment(2)};
  }

 private:
  void init(const Kac&) {
    name_ = "kac";
    nonlattice_ = Declared::yes;
    max_children_ = 2;
  }
  void init(const DeterministicPair& k) {
    if (!(k.a > 0.0 && std::isfinite(k.a))) throw DomainError("deterministic_pair: a must be > 0");
    name_ = "deterministic_pair";
    nonlattice_ = Declared::no;
    max_children_ = 2;
  }
  void init(const PowerUniformSplit& k) {
    if (!(k.a > 0.0 && std::isfinite(k.a))) throw DomainError("power_uniform_split: a must be > 0");
    name_ = "power_uniform_split";
    nonlattice_ = Declared::yes;
    max_children_ = 2;
  }
  void init(const Econophysics& k) {
    for (const auto* l : {&k.p1, &k.q1, &k.p2, &k.q2}) detail::validate_param(*l);
    name_ = "econophysics";
    // A continuous coefficient law makes log A_1 non-lattice.
    const auto continuous = [](const ParamLaw& l) {
      const auto* u = std::get_if<UniformParam>(&l);
      return u && u->hi > u->lo;
    };
    nonlattice_ = (continuous(k.p1) || continuous(k.q1) || continuous(k.p2) || continuous(k.q2))
                      ? Declared::yes
                      : Declared::unknown;
    max_children_ = 2;
  }
  void init(const UserTable& k) {
    if (k.atoms.empty()) throw DomainError("table: at least one atom required");
    std::vector<double> probs;
    std::size_t widest = 0;
    for (const auto& a : k.atoms) {
      probs.push_back(a.p);
      widest = std::max(widest, a.w.size());
      for (double w : a.w)
        if (!(w >= 0.0 && std::isfinite(w))) throw DomainError("table: weights must be finite and >= 0");
    }
    detail::validate_probs(probs, "table");
    name_ = "table";
    nonlattice_ = Declared::unknown;
    max_children_ = widest;
  }

  static void sample_impl(const Kac&, Rng& rng, WeightVector& out) {
    const double u = 2.0 * std::numbers::pi * rng.uniform();
    out.push(std::abs(std::sin(u)));
    out.push(std::abs(std::cos(u)));
  }
  static void sample_impl(const DeterministicPair& k, Rng&, WeightVector& out) {
    out.push(k.a);
    out.push(k.a);
  }
  static void sample_impl(const PowerUniformSplit& k, Rng& rng, WeightVector& out) {
    power_uniform_split_weights(k.a, rng.uniform(), out);
  }
  static void sample_impl(const Econophysics& k, Rng& rng, WeightVector& out) {
    if (rng.coin()) {
      out.push(detail::sample_param(k.p1, rng));
      out.push(detail::sample_param(k.q1, rng));
    } else {
      out.push(detail::sample_param(k.q2, rng));
      out.push(detail::sample_param(k.p2, rng));
    }
  }
  static void sample_impl(const UserTable& k, Rng& rng, WeightVector& out) {
    std::size_t pick = 0;
    if (k.atoms.size() > 1) {
      double u = rng.uniform();
      while (pick + 1 < k.atoms.size() && u >= k.atoms[pick].p) u -= k.atoms[pick++].p;
    }
    for (double w : k.atoms[pick].w) out.push(w);
  }

  static std::optional<SpectralMoments> analytic_impl(const Kac&, double) { return std::nullopt; }
  static std::optional<SpectralMoments> analytic_impl(const DeterministicPair& k, double theta) {
    const double at = std::pow(k.a, theta);
    const double la = std::log(k.a);
    return SpectralMoments{2.0 * at, 2.0 * at * la, 2.0 * at * la * la};
  }
  static std::optional<SpectralMoments> analytic_impl(const PowerUniformSplit& k, double theta) {
    // E[U^{aθ} log^j(U^a)] = a^j ∫₀¹ u^{aθ} log^j u du = a^j (-1)^j j! / (aθ+1)^{j+1}
    const double s = k.a * theta + 1.0;
    return SpectralMoments{2.0 / s, -2.0 * k.a / (s * s), 4.0 * k.a * k.a / (s * s * s)};
  }
  static std::optional<SpectralMoments> analytic_impl(const Econophysics& k, double theta) {
    SpectralMoments m;
    for (const auto* l : {&k.p1, &k.q1, &k.p2, &k.q2}) {
      m.m0 += 0.5 * detail::param_moment(*l, theta, 0);
      m.m1 += 0.5 * detail::param_moment(*l, theta, 1);
      m.m2 += 0.5 * detail::param_moment(*l, theta, 2);
    }
    return m;
  }
  static std::optional<SpectralMoments> analytic_impl(const UserTable& k, double theta) {
    SpectralMoments m;
    for (const auto& a : k.atoms)
      for (double w : a.w)
        if (w > 0.0) {
          const double wt = std::pow(w, theta);
          const double lw = std::log(w);
          m.m0 += a.p * wt;
          m.m1 += a.p * wt * lw;
          m.m2 += a.p * wt * lw * lw;
        }
    return m;
  }

  WeightModelKind kind_;
  std::string name_;
  Declared nonlattice_ = Declared::unknown;
  std::optional<std::size_t> max_children_;
};

inline WeightVector sample_weights(const WeightModel& model, Rng& rng) { return model.sample(rng); }

/// The preset catalogue. Econophysics uses p_i, q_i uniform on [0, 1], which
/// conserves the mean wealth (E[p₁+q₁+q₂+p₂] = 2).
inline std::vector<WeightModel> builtin_models() {
  return {
      WeightModel::kac(),
      WeightModel::deterministic_pair(0.5),
      WeightModel::power_uniform_split(2.0),
      WeightModel::econophysics(UniformParam{0, 1}, UniformParam{0, 1}, UniformParam{0, 1}, UniformParam{0, 1}),
      WeightModel::table({{0.5, {0.3, 0.7}}, {0.5, {0.5, 0.5}}}),
  };
}

/// Mean of the four trading coefficients summed; 2 means Φ(1) = 0.
inline double econophysics_total_mean(const Econophysics& k) {
  return detail::param_mean(k.p1) + detail::param_mean(k.q1) + detail::param_mean(k.p2) +
         detail::param_mean(k.q2);
}

}  // namespace kinetic_brw
