#pragma once

// Initial conditions μ₀ for the evolution equation, each carrying a declared
// integrability index γ ∈ (0, 2] and a centering flag.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <variant>

#include "errors.hpp"
#include "random.hpp"
#include "stats.hpp"

namespace kinetic_brw {

struct PointMass {
  double c = 0.0;
};
struct CenteredUniform {
  double half_width = 1.0;
};
struct CenteredGaussian {
  double sd = 1.0;
};
/// Symmetric α-stable law with characteristic function exp(-|scale·ξ|^α).
struct SymmetricStable {
  double alpha = 1.0;
  double scale = 1.0;
};

using InitialLawKind = std::variant<PointMass, CenteredUniform, CenteredGaussian, SymmetricStable>;

/// Draw from the unit symmetric α-stable law (Chambers-Mallows-Stuck, β = 0).
inline double sample_symmetric_stable(double alpha, Rng& rng) {
  const double theta = std::numbers::pi * (rng.uniform() - 0.5);
  const double w = rng.exponential();
  if (alpha == 1.0) return std::tan(theta);
  return std::sin(alpha * theta) / std::pow(std::cos(theta), 1.0 / alpha) *
         std::pow(std::cos((1.0 - alpha) * theta) / w, (1.0 - alpha) / alpha);
}

/// E|X|^p for the unit symmetric α-stable law, finite for p < α.
inline double symmetric_stable_abs_moment(double alpha, double p) {
  return std::pow(2.0, p) * std::tgamma((1.0 + p) / 2.0) * std::tgamma(1.0 - p / alpha) /
         (std::sqrt(std::numbers::pi) * std::tgamma(1.0 - p / 2.0));
}

class InitialLaw {
 public:
  InitialLaw(InitialLawKind kind, double gamma) : kind_(kind), gamma_(gamma) {
    if (!(gamma > 0.0 && gamma <= 2.0))
      throw DomainError("initial law: gamma must lie in (0, 2]");
    std::visit([](const auto& k) { validate(k); }, kind_);
    if (gamma > 1.0 && !centered())
      throw DomainError("initial law: gamma > 1 requires a centered law");
  }

  static InitialLaw point_mass(double c, double gamma = 1.0) { return {PointMass{c}, gamma}; }
  static InitialLaw centered_uniform(double half_width, double gamma = 2.0) {
    return {CenteredUniform{half_width}, gamma};
  }
  static InitialLaw gaussian(double sd, double gamma = 2.0) { return {CenteredGaussian{sd}, gamma}; }
  /// The stable law is in the normal domain of attraction of itself: γ = α.
  static InitialLaw symmetric_stable(double alpha, double scale = 1.0) {
    return {SymmetricStable{alpha, scale}, alpha};
  }

  const InitialLawKind& kind() const { return kind_; }
  double gamma() const { return gamma_; }

  bool centered() const {
    return std::visit(
        [](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, PointMass>) return k.c == 0.0;
          else if constexpr (std::is_same_v<T, SymmetricStable>) return k.alpha > 1.0;
          else return true;
        },
        kind_);
  }

  /// E[X] when it exists.
  std::optional<double> mean() const {
    return std::visit(
        [](const auto& k) -> std::optional<double> {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, PointMass>) return k.c;
          else if constexpr (std::is_same_v<T, SymmetricStable>) {
            if (k.alpha > 1.0) return 0.0;
            return std::nullopt;
          } else return 0.0;
        },
        kind_);
  }

  /// Closed-form E|X|^p, or nullopt when infinite.
  std::optional<double> abs_moment(double p) const {
    return std::visit(
        [p](const auto& k) -> std::optional<double> {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, PointMass>) {
            return k.c == 0.0 ? 0.0 : std::pow(std::abs(k.c), p);
          } else if constexpr (std::is_same_v<T, CenteredUniform>) {
            return std::pow(k.half_width, p) / (p + 1.0);
          } else if constexpr (std::is_same_v<T, CenteredGaussian>) {
            return std::pow(k.sd, p) * std::pow(2.0, p / 2.0) * std::tgamma((p + 1.0) / 2.0) /
                   std::sqrt(std::numbers::pi);
          } else {
            if (p >= k.alpha) return std::nullopt;
            return std::pow(k.scale, p) * symmetric_stable_abs_moment(k.alpha, p);
          }
        },
        kind_);
  }

  /// Characteristic function E[exp(iξX)] (real: all presets are symmetric
  /// except a shifted point mass, whose imaginary part is sin(cξ)).
  std::complex<double> characteristic_function(double xi) const {
    return std::visit(
        [xi](const auto& k) -> std::complex<double> {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, PointMass>) {
            return {std::cos(k.c * xi), std::sin(k.c * xi)};
          } else if constexpr (std::is_same_v<T, CenteredUniform>) {
            const double z = k.half_width * xi;
            return z == 0.0 ? 1.0 : std::sin(z) / z;
          } else if constexpr (std::is_same_v<T, CenteredGaussian>) {
            return std::exp(-0.5 * k.sd * k.sd * xi * xi);
          } else {
            return std::exp(-std::pow(std::abs(k.scale * xi), k.alpha));
          }
        },
        kind_);
  }

  double sample(Rng& rng) const {
    return std::visit(
        [&rng](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, PointMass>) {
            return k.c;
          } else if constexpr (std::is_same_v<T, CenteredUniform>) {
            return k.half_width * (2.0 * rng.uniform() - 1.0);
          } else if constexpr (std::is_same_v<T, CenteredGaussian>) {
            // Box-Muller; one draw per call keeps the stream usage fixed.
            const double r = std::sqrt(-2.0 * std::log(rng.uniform()));
            return k.sd * r * std::cos(2.0 * std::numbers::pi * rng.uniform());
          } else {
            return k.scale * sample_symmetric_stable(k.alpha, rng);
          }
        },
        kind_);
  }

  std::string name() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, PointMass>) return "point_mass";
          else if constexpr (std::is_same_v<T, CenteredUniform>) return "centered_uniform";
          else if constexpr (std::is_same_v<T, CenteredGaussian>) return "gaussian";
          else return "symmetric_stable";
        },
        kind_);
  }

 private:
  static void validate(const PointMass& k) {
    if (!std::isfinite(k.c)) throw DomainError("point_mass: c must be finite");
  }
  static void validate(const CenteredUniform& k) {
    if (!(k.half_width > 0.0)) throw DomainError("centered_uniform: half_width must be > 0");
  }
  static void validate(const CenteredGaussian& k) {
    if (!(k.sd > 0.0)) throw DomainError("gaussian: sd must be > 0");
  }
  static void validate(const SymmetricStable& k) {
    if (!(k.alpha > 0.0 && k.alpha <= 2.0)) throw DomainError("symmetric_stable: alpha must lie in (0, 2]");
    if (!(k.scale > 0.0)) throw DomainError("symmetric_stable: scale must be > 0");
  }

  InitialLawKind kind_;
  double gamma_;
};

inline double sample_initial(const InitialLaw& law, Rng& rng) { return law.sample(rng); }

struct MembershipReport {
  double gamma = 0.0;
  bool member = false;
  std::string reason;
  std::optional<double> analytic_moment;  ///< E|X|^γ, nullopt if infinite
  stats::Estimate mc_moment;              ///< Monte Carlo E|X|^γ
};

/// Declared membership of μ₀ in the class of laws with finite γ-th absolute
/// moment (centered when γ > 1), plus a Monte Carlo estimate of E|X|^γ.
inline MembershipReport check_membership(const InitialLaw& law, double gamma, Rng& rng,
                                         std::size_t draws = 100000) {
  if (!(gamma > 0.0 && gamma <= 2.0)) throw DomainError("check_membership: gamma must lie in (0, 2]");
  MembershipReport rep;
  rep.gamma = gamma;
  rep.analytic_moment = law.abs_moment(gamma);
  if (!rep.analytic_moment) {
    rep.member = false;
    rep.reason = "E|X|^gamma is infinite (gamma >= stable index)";
  } else if (gamma > 1.0 && !law.centered()) {
    rep.member = false;
    rep.reason = "gamma > 1 requires a centered law";
  } else {
    rep.member = true;
    rep.reason = "finite absolute moment";
  }
  std::vector<double> m(draws);
  for (auto& v : m) v = std::pow(std::abs(law.sample(rng)), gamma);
  rep.mc_moment = stats::mean_se(m);
  return rep;
}

}  // namespace kinetic_brw
