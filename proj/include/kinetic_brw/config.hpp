#pragma once

// Strict JSON run configuration. Every object is checked against its key
// set; unknown keys, wrong types and out-of-range values raise ConfigError.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "brw_engine.hpp"
#include "errors.hpp"
#include "initial_laws.hpp"
#include "spectral.hpp"
#include "weight_models.hpp"

namespace kinetic_brw::config {

using Json = nlohmann::ordered_json;

struct Budget {
  std::size_t particle_cap = kDefaultParticleCap;
  std::size_t samples = 1000;
  std::size_t bootstrap = 200;
  std::size_t mc_draws = 100000;
  std::size_t screen_draws = 100000;
  EvalMethod method = EvalMethod::automatic;
};

struct SpectralBlock {
  std::vector<double> theta_grid{0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 3.5, 4.0};
};

struct ThetaBlock {
  Bracket bracket;
  double tol = 1e-12;
};

struct SimulateBlock {
  std::vector<double> t{1.0};
};

struct ScalingBlock {
  std::vector<double> t_grid{1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  std::vector<double> xi_grid{0.25, 0.5, 1.0, 2.0, 4.0};
  std::optional<Regime> regime_override;
  double iqr_floor_fraction = 0.1;
  double ks_threshold = 0.05;
};

struct FixedPointBlock {
  std::size_t iters = 20;
  double ks_tol = 0.02;
  std::size_t pool_size = 10000;
  std::optional<std::string> seed_from;
  bool factorization = true;
  std::size_t replicates = 2000;
  std::size_t generations = 12;
};

struct MartingalesBlock {
  double delta = 1.0;
  std::size_t n_max = 5;
  std::size_t replicates = 10000;
};

struct CheckBlock {
  std::vector<double> t_grid{0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0};
};

struct RunConfig {
  WeightModel model = WeightModel::kac();
  std::optional<InitialLaw> initial;
  std::uint64_t seed = 0;
  Budget budget;
  SpectralBlock spectral;
  ThetaBlock theta;
  SimulateBlock simulate;
  ScalingBlock scaling;
  FixedPointBlock fixed_point;
  MartingalesBlock martingales;
  CheckBlock check;
  Json raw;  ///< parsed document, echoed into run summaries
};

namespace detail {

/// 1-based line and column of a byte offset.
inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

/// View of one JSON object that remembers which keys were consumed.
class Object {
 public:
  Object(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) fail("expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    for (const auto& [k, v] : j_.items()) {
      bool known = false;
      for (const char* a : keys) known = known || k == a;
      if (!known) throw ConfigError(path_ + ": unknown key '" + k + "'");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  const Json& at(const char* key) const {
    if (!has(key)) fail(std::string("missing required key '") + key + "'");
    return j_.at(key);
  }
  std::string child(const char* key) const { return path_ + "." + key; }

  double number(const char* key) const {
    const Json& v = at(key);
    if (!v.is_number()) throw ConfigError(child(key) + ": expected a number");
    return v.get<double>();
  }
  double number_or(const char* key, double def) const { return has(key) ? number(key) : def; }

  std::uint64_t unsigned_int(const char* key) const {
    const Json& v = at(key);
    if (!v.is_number_unsigned()) throw ConfigError(child(key) + ": expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }
  std::size_t count_or(const char* key, std::size_t def, std::size_t min = 1) const {
    if (!has(key)) return def;
    const auto v = unsigned_int(key);
    if (v < min) throw ConfigError(child(key) + ": must be >= " + std::to_string(min));
    return static_cast<std::size_t>(v);
  }

  std::string string(const char* key) const {
    const Json& v = at(key);
    if (!v.is_string()) throw ConfigError(child(key) + ": expected a string");
    return v.get<std::string>();
  }
  bool boolean_or(const char* key, bool def) const {
    if (!has(key)) return def;
    const Json& v = at(key);
    if (!v.is_boolean()) throw ConfigError(child(key) + ": expected true or false");
    return v.get<bool>();
  }

  std::vector<double> numbers(const char* key) const {
    const Json& v = at(key);
    if (!v.is_array() || v.empty()) throw ConfigError(child(key) + ": expected a non-empty array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(child(key) + ": expected a non-empty array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  std::vector<double> numbers_or(const char* key, std::vector<double> def) const {
    return has(key) ? numbers(key) : std::move(def);
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(path_ + ": " + msg); }

 private:
  const Json& j_;
  std::string path_;
};

inline ParamLaw parse_param(const Json& j, const std::string& path) {
  Object o(j, path);
  const auto kind = o.string("kind");
  if (kind == "uniform") {
    o.allow({"kind", "lo", "hi"});
    return UniformParam{o.number("lo"), o.number("hi")};
  }
  if (kind == "discrete") {
    o.allow({"kind", "values", "probs"});
    return DiscreteParam{o.numbers("values"), o.numbers("probs")};
  }
  o.fail("unknown parameter law '" + kind + "' (expected uniform or discrete)");
}

/// Rewraps precondition failures from model constructors as config errors.
template <class Build>
auto build(const std::string& path, Build&& f) {
  try {
    return f();
  } catch (const DomainError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline WeightModel parse_model(const Json& j) {
  const std::string path = "model";
  Object o(j, path);
  const auto kind = o.string("kind");
  if (kind == "kac") {
    o.allow({"kind"});
    return WeightModel::kac();
  }
  if (kind == "deterministic_pair") {
    o.allow({"kind", "a"});
    return build(path, [&] { return WeightModel::deterministic_pair(o.number("a")); });
  }
  if (kind == "power_uniform_split") {
    o.allow({"kind", "a"});
    return build(path, [&] { return WeightModel::power_uniform_split(o.number("a")); });
  }
  if (kind == "econophysics") {
    o.allow({"kind", "p1", "q1", "p2", "q2"});
    auto p1 = parse_param(o.at("p1"), o.child("p1"));
    auto q1 = parse_param(o.at("q1"), o.child("q1"));
    auto p2 = parse_param(o.at("p2"), o.child("p2"));
    auto q2 = parse_param(o.at("q2"), o.child("q2"));
    return build(path, [&] { return WeightModel::econophysics(p1, q1, p2, q2); });
  }
  if (kind == "table") {
    o.allow({"kind", "atoms"});
    const Json& atoms = o.at("atoms");
    if (!atoms.is_array() || atoms.empty()) o.fail("atoms: expected a non-empty array");
    std::vector<TableAtom> parsed;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      Object a(atoms[i], path + ".atoms[" + std::to_string(i) + "]");
      a.allow({"p", "w"});
      parsed.push_back({a.number("p"), a.numbers("w")});
    }
    return build(path, [&] { return WeightModel::table(std::move(parsed)); });
  }
  o.fail("unknown model kind '" + kind + "'");
}

inline InitialLaw parse_initial(const Json& j) {
  const std::string path = "initial";
  Object o(j, path);
  const auto kind = o.string("kind");
  if (kind == "point_mass") {
    o.allow({"kind", "c", "gamma"});
    return build(path, [&] { return InitialLaw::point_mass(o.number("c"), o.number_or("gamma", 1.0)); });
  }
  if (kind == "centered_uniform") {
    o.allow({"kind", "half_width", "gamma"});
    return build(path,
                 [&] { return InitialLaw::centered_uniform(o.number("half_width"), o.number_or("gamma", 2.0)); });
  }
  if (kind == "gaussian") {
    o.allow({"kind", "sd", "gamma"});
    return build(path, [&] { return InitialLaw::gaussian(o.number("sd"), o.number_or("gamma", 2.0)); });
  }
  if (kind == "symmetric_stable") {
    o.allow({"kind", "alpha", "scale", "gamma"});
    const double alpha = o.number("alpha");
    if (o.has("gamma") && o.number("gamma") != alpha) o.fail("gamma of a stable law must equal alpha");
    return build(path, [&] { return InitialLaw::symmetric_stable(alpha, o.number_or("scale", 1.0)); });
  }
  o.fail("unknown initial law kind '" + kind + "'");
}

inline void require_increasing(const std::vector<double>& g, const std::string& path, bool allow_zero) {
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!std::isfinite(g[k]) || g[k] < 0.0 || (!allow_zero && g[k] == 0.0))
      throw ConfigError(path + ": values must be finite and " + (allow_zero ? "nonnegative" : "positive"));
    if (k > 0 && !(g[k] > g[k - 1])) throw ConfigError(path + ": values must be strictly increasing");
  }
}

inline EvalMethod parse_method(const std::string& s, const std::string& path) {
  if (s == "automatic") return EvalMethod::automatic;
  if (s == "analytic") return EvalMethod::analytic;
  if (s == "quadrature") return EvalMethod::quadrature;
  if (s == "monte_carlo") return EvalMethod::monte_carlo;
  throw ConfigError(path + ": unknown method '" + s + "'");
}

}  // namespace detail

/// Validates a parsed document into a RunConfig.
inline RunConfig from_json(const Json& doc) {
  using detail::Object;
  Object top(doc, "config");
  top.allow({"model", "initial", "seed", "budget", "spectral", "theta", "simulate", "scaling_study", "fixed_point",
             "martingales", "check_assumptions"});
  RunConfig cfg;
  cfg.raw = doc;
  cfg.model = detail::parse_model(top.at("model"));
  if (top.has("initial")) cfg.initial = detail::parse_initial(top.at("initial"));
  if (top.has("seed")) cfg.seed = top.unsigned_int("seed");

  if (top.has("budget")) {
    Object b(top.at("budget"), "budget");
    b.allow({"particle_cap", "samples", "bootstrap", "mc_draws", "screen_draws", "method"});
    cfg.budget.particle_cap = b.count_or("particle_cap", cfg.budget.particle_cap);
    cfg.budget.samples = b.count_or("samples", cfg.budget.samples);
    cfg.budget.bootstrap = b.count_or("bootstrap", cfg.budget.bootstrap, 0);
    cfg.budget.mc_draws = b.count_or("mc_draws", cfg.budget.mc_draws, 2);
    cfg.budget.screen_draws = b.count_or("screen_draws", cfg.budget.screen_draws);
    if (b.has("method")) cfg.budget.method = detail::parse_method(b.string("method"), b.child("method"));
  }
  if (top.has("spectral")) {
    Object s(top.at("spectral"), "spectral");
    s.allow({"theta_grid"});
    cfg.spectral.theta_grid = s.numbers_or("theta_grid", cfg.spectral.theta_grid);
    detail::require_increasing(cfg.spectral.theta_grid, s.child("theta_grid"), true);
  }
  if (top.has("theta")) {
    Object t(top.at("theta"), "theta");
    t.allow({"bracket", "tol"});
    if (t.has("bracket")) {
      const auto br = t.numbers("bracket");
      if (br.size() != 2 || !(br[0] > 0.0 && br[1] > br[0])) t.fail("bracket must be [lo, hi] with 0 < lo < hi");
      cfg.theta.bracket = {br[0], br[1]};
    }
    cfg.theta.tol = t.number_or("tol", cfg.theta.tol);
    if (!(cfg.theta.tol > 0.0)) t.fail("tol must be > 0");
  }
  if (top.has("simulate")) {
    Object s(top.at("simulate"), "simulate");
    s.allow({"t"});
    cfg.simulate.t = s.numbers_or("t", cfg.simulate.t);
    detail::require_increasing(cfg.simulate.t, s.child("t"), true);
  }
  if (top.has("scaling_study")) {
    Object s(top.at("scaling_study"), "scaling_study");
    s.allow({"t_grid", "xi_grid", "regime_override", "iqr_floor_fraction", "ks_threshold"});
    cfg.scaling.t_grid = s.numbers_or("t_grid", cfg.scaling.t_grid);
    detail::require_increasing(cfg.scaling.t_grid, s.child("t_grid"), true);
    cfg.scaling.xi_grid = s.numbers_or("xi_grid", cfg.scaling.xi_grid);
    if (s.has("regime_override")) {
      cfg.scaling.regime_override = regime_from_string(s.string("regime_override"));
      if (!cfg.scaling.regime_override) s.fail("regime_override: expected subcritical, boundary or beyond_boundary");
    }
    cfg.scaling.iqr_floor_fraction = s.number_or("iqr_floor_fraction", cfg.scaling.iqr_floor_fraction);
    cfg.scaling.ks_threshold = s.number_or("ks_threshold", cfg.scaling.ks_threshold);
  }
  if (top.has("fixed_point")) {
    Object f(top.at("fixed_point"), "fixed_point");
    f.allow({"iters", "ks_tol", "pool_size", "seed_from", "factorization", "replicates", "generations"});
    cfg.fixed_point.iters = f.count_or("iters", cfg.fixed_point.iters);
    cfg.fixed_point.ks_tol = f.number_or("ks_tol", cfg.fixed_point.ks_tol);
    cfg.fixed_point.pool_size = f.count_or("pool_size", cfg.fixed_point.pool_size, 2);
    if (f.has("seed_from")) cfg.fixed_point.seed_from = f.string("seed_from");
    cfg.fixed_point.factorization = f.boolean_or("factorization", cfg.fixed_point.factorization);
    cfg.fixed_point.replicates = f.count_or("replicates", cfg.fixed_point.replicates, 2);
    cfg.fixed_point.generations = f.count_or("generations", cfg.fixed_point.generations);
  }
  if (top.has("martingales")) {
    Object m(top.at("martingales"), "martingales");
    m.allow({"delta", "n_max", "replicates"});
    cfg.martingales.delta = m.number_or("delta", cfg.martingales.delta);
    if (!(cfg.martingales.delta > 0.0)) m.fail("delta must be > 0");
    cfg.martingales.n_max = m.count_or("n_max", cfg.martingales.n_max);
    cfg.martingales.replicates = m.count_or("replicates", cfg.martingales.replicates, 2);
  }
  if (top.has("check_assumptions")) {
    Object c(top.at("check_assumptions"), "check_assumptions");
    c.allow({"t_grid"});
    cfg.check.t_grid = c.numbers_or("t_grid", cfg.check.t_grid);
    detail::require_increasing(cfg.check.t_grid, c.child("t_grid"), false);
  }
  return cfg;
}

/// Parses config text; syntax errors report 1-based line and column.
inline RunConfig parse(const std::string& text, const std::string& source = "config") {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    const auto [line, col] = detail::line_column(text, offset);
    std::string what = e.what();
    // Keep only the description after nlohmann's positional prefix.
    if (const auto pos = what.find("syntax error"); pos != std::string::npos) what = what.substr(pos);
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON: " + what);
  }
  return from_json(doc);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace kinetic_brw::config
