#pragma once

// Subcommand orchestration: configuration, seeding, CSV and JSON emission.
// Exit codes: 0 success, 1 configuration or usage error, 2 analysis failure.

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "brw_engine.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "fixed_point.hpp"
#include "initial_laws.hpp"
#include "kinetic_solver.hpp"
#include "random.hpp"
#include "spectral.hpp"
#include "stats.hpp"
#include "weight_models.hpp"

namespace kinetic_brw::cli {

using Json = config::Json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitAnalysis = 2;

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"spectral",    "theta",             "simulate",   "scaling-study",
                                              "fixed-point", "check-assumptions", "martingales"};
  return names;
}

struct CliArgs {
  std::string subcommand;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  unsigned threads = 1;
  std::optional<std::size_t> cap;
  std::optional<std::vector<double>> t_grid;
  std::optional<std::size_t> samples;
  std::optional<std::string> regime_override;
  std::optional<std::string> seed_from;
  std::optional<std::size_t> iters;
  std::optional<double> ks_tol;
};

// ---------------------------------------------------------------------------
// Output helpers

/// Shortest round-trip representation; "nan", "inf", "-inf" for non-finite values.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// RFC-4180 writer: CRLF records, fields quoted when they contain a comma,
/// quote or line break.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
  }

  struct Field {
    std::string text;
    Field(const std::string& s) : text(s) {}
    Field(const char* s) : text(s) {}
    Field(double x) : text(format_number(x)) {}
    Field(std::size_t n) : text(std::to_string(n)) {}
    Field(int n) : text(std::to_string(n)) {}
    Field(bool b) : text(b ? "true" : "false") {}
  };

  void row(std::initializer_list<Field> fields) {
    bool first = true;
    for (const auto& f : fields) {
      if (!first) out_ << ',';
      first = false;
      out_ << quote(f.text);
    }
    out_ << "\r\n";
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  }

  std::ofstream out_;
  std::filesystem::path path_;
};

/// Splits RFC-4180 text into records of fields.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Reads one numeric column from a CSV with a header row: "value" if
/// present, else "u_t", else the last column.
inline std::vector<double> read_sample_column(const std::string& path) {
  const auto rows = parse_csv(config::read_file(path));
  if (rows.size() < 2) throw ConfigError(path + ": expected a header row and at least one sample");
  const auto& header = rows.front();
  std::size_t col = header.size() - 1;
  for (const char* name : {"u_t", "value"})
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) col = k;
  std::vector<double> xs;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (col >= rows[r].size()) throw ConfigError(path + ": row " + std::to_string(r + 1) + " is too short");
    try {
      std::size_t used = 0;
      const double x = std::stod(rows[r][col], &used);
      if (used != rows[r][col].size() || !std::isfinite(x)) throw std::invalid_argument("bad");
      xs.push_back(x);
    } catch (const std::logic_error&) {
      throw ConfigError(path + ": row " + std::to_string(r + 1) + " holds a non-finite or non-numeric sample");
    }
  }
  return xs;
}

/// Git blob object id: SHA-1 of "blob <size>\0" followed by the content.
inline std::string git_blob_hash(const std::string& content) {
  const std::string object = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(object.data(), object.size(), digest, &len, EVP_sha1(), nullptr) != 1)
    throw std::runtime_error("SHA-1 digest failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

inline Json estimate_json(const stats::Estimate& e) { return Json{{"mean", e.mean}, {"se", e.se}, {"n", e.n}}; }

// ---------------------------------------------------------------------------

struct RunContext {
  const CliArgs& args;
  config::RunConfig& cfg;
  StreamKey key;  ///< subcommand-scoped stream
  std::filesystem::path out_dir;
  std::ostream& out;
  std::ostream& err;
  Json results = Json::object();
  std::vector<std::string> files;

  SimOptions sim() const { return {cfg.budget.particle_cap, args.threads}; }
  std::filesystem::path file(const std::string& name) {
    files.push_back(name);
    return out_dir / name;
  }
  EvalBudget eval_budget() const {
    return {cfg.budget.method, cfg.budget.mc_draws, key.child("spectral-budget").value()};
  }
  SpectralProfile located_profile() const {
    return find_theta_star(make_profile(cfg.model, eval_budget()), cfg.theta.bracket, cfg.theta.tol);
  }
  const InitialLaw& initial() const {
    if (!cfg.initial) throw ConfigError("config: subcommand '" + args.subcommand + "' needs an 'initial' block");
    return *cfg.initial;
  }
};

inline Json profile_json(const SpectralProfile& p) {
  return Json{{"theta_star", p.theta_star()},     {"theta_star_se", p.theta_star_se()},
              {"F_at_theta", p.F_at_theta()},     {"phi_at_theta", p.phi_at_theta()},
              {"D_at_theta", p.D_at_theta()},     {"phi_log2_at_theta", p.phi_log2_at_theta()},
              {"sigma2", p.sigma2()},             {"method", to_string(p.method())},
              {"iterations", p.located_data().iterations}};
}

inline Json assumptions_json(const AssumptionReport& a) {
  return Json{{"nonlattice", to_string(a.nonlattice)},
              {"log2_moment", estimate_json(a.log2_moment)},
              {"log2_finite", a.log2_finite},
              {"x_log2", estimate_json(a.x_log2)},
              {"xtilde_log", estimate_json(a.xtilde_log)},
              {"xlog_finite", a.xlog_finite},
              {"offspring_finite", a.offspring_finite},
              {"offspring_reason", a.offspring_reason},
              {"warnings", a.warnings}};
}

inline Json regime_json(const RegimeReport& r) {
  return Json{{"gamma", r.gamma}, {"theta_star", r.theta_star}, {"regime", to_string(r.regime)},
              {"p", r.p},         {"r", r.r}};
}

// ---------------------------------------------------------------------------
// Subcommands

inline void run_spectral(RunContext& ctx) {
  const auto budget = ctx.eval_budget();
  CsvWriter csv(ctx.file("spectral.csv"));
  csv.row({"theta", "phi", "phi_se", "F"});
  std::ostringstream echo;
  echo << "theta,phi,phi_se,F\n";
  Json rows = Json::array();
  bool divergence = false;
  for (double theta : ctx.cfg.spectral.theta_grid) {
    const auto v = phi(ctx.cfg.model, theta, budget);
    const double F = theta > 0.0 ? v.value / theta : std::numeric_limits<double>::quiet_NaN();
    csv.row({theta, v.value, v.se, F});
    echo << format_number(theta) << ',' << format_number(v.value) << ',' << format_number(v.se) << ','
         << format_number(F) << '\n';
    divergence = divergence || v.divergence_suspected;
    rows.push_back(Json{{"theta", theta}, {"method", to_string(v.method)}, {"divergence_suspected", v.divergence_suspected}});
  }
  ctx.out << echo.str();
  ctx.results["points"] = rows;
  ctx.results["divergence_suspected"] = divergence;
}

inline void run_theta(RunContext& ctx) {
  const auto profile = ctx.located_profile();
  Rng rng(ctx.key.child("screen"));
  const auto screen = screen_assumptions(ctx.cfg.model, profile, rng, ctx.cfg.budget.screen_draws);
  CsvWriter csv(ctx.file("theta.csv"));
  csv.row({"theta_star", "theta_star_se", "F_at_theta", "D_at_theta", "phi_at_theta", "sigma2"});
  csv.row({profile.theta_star(), profile.theta_star_se(), profile.F_at_theta(), profile.D_at_theta(),
           profile.phi_at_theta(), profile.sigma2()});
  ctx.results = profile_json(profile);
  ctx.results["assumptions"] = assumptions_json(screen);
  auto& o = ctx.out;
  o << "theta_star   " << format_number(profile.theta_star()) << " (se " << format_number(profile.theta_star_se())
    << ")\n";
  o << "F(theta)     " << format_number(profile.F_at_theta()) << "\n";
  o << "D(theta)     " << format_number(profile.D_at_theta()) << "\n";
  o << "method       " << to_string(profile.method()) << "\n";
  o << "nonlattice   " << to_string(screen.nonlattice) << "\n";
  o << "E[sum A^t log^2 A]     " << format_number(screen.log2_moment.mean) << " +- "
    << format_number(screen.log2_moment.se) << (screen.log2_finite ? "" : "  (not finite)") << "\n";
  o << "E[X log+^2 X]          " << format_number(screen.x_log2.mean) << " +- " << format_number(screen.x_log2.se)
    << "\n";
  o << "E[X~ log+ X~]          " << format_number(screen.xtilde_log.mean) << " +- "
    << format_number(screen.xtilde_log.se) << (screen.xlog_finite ? "" : "  (not finite)") << "\n";
  o << "offspring    " << (screen.offspring_finite ? "ok: " : "fails: ") << screen.offspring_reason << "\n";
  for (const auto& w : screen.warnings) o << "warning: " << w << "\n";
  if (ctx.cfg.initial) {
    const auto reg = classify_regime(profile, ctx.cfg.initial->gamma());
    ctx.results["regime"] = regime_json(reg);
    o << "regime       " << to_string(reg.regime) << " (gamma " << format_number(reg.gamma) << ")\n";
  }
}

inline void run_simulate(RunContext& ctx) {
  const auto& law = ctx.initial();
  const auto times = ctx.args.t_grid.value_or(ctx.cfg.simulate.t);
  const std::size_t n = ctx.args.samples.value_or(ctx.cfg.budget.samples);
  CsvWriter csv(ctx.file("simulate.csv"));
  csv.row({"replicate", "t", "u_t"});
  Json per_time = Json::array();
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto set = sample_mu_t(ctx.cfg.model, law, times[k], n, ctx.key.child("time").child(k), ctx.sim());
    for (std::size_t i = 0; i < set.count(); ++i) csv.row({i, times[k], set.values[i]});
    const auto e = stats::mean_se(set.values);
    per_time.push_back(Json{{"t", times[k]}, {"mean", e.mean}, {"se", e.se}, {"count", set.count()},
                            {"truncations", set.truncations}});
    ctx.out << "t=" << format_number(times[k]) << " mean=" << format_number(e.mean) << " se=" << format_number(e.se)
            << " count=" << set.count() << "\n";
  }
  ctx.results["times"] = per_time;
}

inline void run_scaling_study(RunContext& ctx) {
  const auto& law = ctx.initial();
  const auto profile = ctx.located_profile();
  const auto grid = ctx.args.t_grid.value_or(ctx.cfg.scaling.t_grid);
  const std::size_t n = ctx.args.samples.value_or(ctx.cfg.budget.samples);
  ScalingOptions opt;
  opt.sim = ctx.sim();
  opt.xi_grid = ctx.cfg.scaling.xi_grid;
  opt.bootstrap = ctx.cfg.budget.bootstrap;
  opt.regime_override = ctx.cfg.scaling.regime_override;
  if (ctx.args.regime_override) {
    opt.regime_override = regime_from_string(*ctx.args.regime_override);
    if (!opt.regime_override) throw ConfigError("--regime-override: expected subcritical, boundary or beyond_boundary");
  }
  opt.iqr_floor_fraction = ctx.cfg.scaling.iqr_floor_fraction;
  opt.ks_threshold = ctx.cfg.scaling.ks_threshold;

  const auto res = scaling_study(ctx.cfg.model, law, profile, grid, n, ctx.key, opt);

  CsvWriter rows(ctx.file("scaling_study.csv"));
  rows.row({"t", "n", "ks_prev", "ks_prev_rejected", "iqr", "median_abs", "raw_mean", "raw_mean_se"});
  for (const auto& r : res.rows)
    rows.row({r.t, r.n, r.ks_prev, r.ks_prev_rejected, r.iqr, r.median_abs, r.raw_mean.mean, r.raw_mean.se});

  CsvWriter cf(ctx.file("scaling_cf.csv"));
  cf.row({"t", "xi", "re", "im", "re_lo", "re_hi", "im_lo", "im_hi"});
  for (const auto& r : res.rows)
    for (const auto& p : r.cf) cf.row({r.t, p.xi, p.re, p.im, p.re_lo, p.re_hi, p.im_lo, p.im_hi});

  CsvWriter samples(ctx.file("scaling_samples.csv"));
  samples.row({"replicate", "t", "u_t_raw", "value"});
  for (std::size_t k = 0; k < res.scaled.size(); ++k)
    for (std::size_t i = 0; i < res.scaled[k].count(); ++i)
      samples.row({i, res.scaled[k].t, res.raw[k].values[i], res.scaled[k].values[i]});

  CsvWriter terminal(ctx.file("scaling_terminal.csv"));
  terminal.row({"replicate", "value"});
  for (std::size_t i = 0; i < res.scaled.back().count(); ++i) terminal.row({i, res.scaled.back().values[i]});

  const auto& v = res.verdict;
  ctx.results["regime"] = regime_json(res.regime);
  ctx.results["profile"] = profile_json(profile);
  ctx.results["verdict"] = Json{{"converged", v.converged},
                                {"final_ks", v.final_ks},
                                {"final_ks_critical_1pct", stats::ks_critical_1pct(n, n)},
                                {"ks_trending_down", v.ks_trending_down},
                                {"ks_trend_slope", v.ks_trend_slope},
                                {"iqr", v.iqr},
                                {"iqr_initial", v.iqr_initial},
                                {"nondegenerate", v.nondegenerate}};
  ctx.results["warnings"] = res.warnings;
  ctx.out << "regime " << to_string(res.regime.regime) << ", converged=" << (v.converged ? "true" : "false")
          << ", final_ks=" << format_number(v.final_ks) << ", iqr=" << format_number(v.iqr) << "\n";
}

inline void run_fixed_point(RunContext& ctx) {
  const auto profile = ctx.located_profile();
  const double theta = profile.theta_star();
  const auto seed_path = ctx.args.seed_from ? ctx.args.seed_from : ctx.cfg.fixed_point.seed_from;
  std::vector<double> seed;
  if (seed_path) {
    seed = read_sample_column(*seed_path);
    ctx.results["seed_pool"] = Json{{"source", *seed_path}, {"size", seed.size()}};
  } else {
    if (!(theta <= 2.0)) throw AnalysisError("fixed-point: cold start needs a minimizer of at most 2");
    const std::size_t n = ctx.args.samples.value_or(ctx.cfg.fixed_point.pool_size);
    Rng rng(ctx.key.child("cold-start"));
    seed.resize(n);
    for (auto& x : seed) x = sample_symmetric_stable(theta, rng);
    ctx.results["seed_pool"] = Json{{"source", "symmetric stable, index theta_star"}, {"size", n}};
  }
  const std::size_t iters = ctx.args.iters.value_or(ctx.cfg.fixed_point.iters);
  const double ks_tol = ctx.args.ks_tol.value_or(ctx.cfg.fixed_point.ks_tol);
  const double F = profile.F_at_theta();
  const auto res = iterate_to_fixed_point(FixedPointPool::from_samples(std::move(seed)), ctx.cfg.model, F, iters,
                                          ks_tol, ctx.key.child("iterate"), ctx.args.threads);

  CsvWriter it(ctx.file("fixed_point_iterations.csv"));
  it.row({"iteration", "ks", "scale"});
  it.row({std::size_t{0}, std::numeric_limits<double>::quiet_NaN(), res.pool.scale_tracker.front()});
  for (std::size_t k = 0; k < res.report.ks.size(); ++k)
    it.row({k + 1, res.report.ks[k], res.pool.scale_tracker[k + 1]});
  CsvWriter pool(ctx.file("fixed_point_pool.csv"));
  pool.row({"index", "value"});
  for (std::size_t i = 0; i < res.pool.samples.size(); ++i) pool.row({i, res.pool.samples[i]});

  const auto resid = fixed_point_residual(res.pool, ctx.cfg.model, F, ctx.key.child("residual"), ctx.args.threads);
  ctx.results["F_at_theta"] = F;
  ctx.results["theta_star"] = theta;
  ctx.results["report"] = Json{{"iterations", res.report.iterations},   {"converged", res.report.converged},
                               {"collapsed", res.report.collapsed},     {"initial_scale", res.report.initial_scale},
                               {"final_scale", res.report.final_scale}, {"final_ks", res.report.ks.back()}};
  ctx.results["residual"] = Json{{"residual_ks", resid.residual_ks},
                                 {"noise_floor_ks", resid.noise_floor_ks},
                                 {"rejected_1pct", resid.rejected}};
  if (ctx.cfg.fixed_point.factorization) {
    if (theta < 2.0) {
      FactorizationOptions fo;
      fo.replicates = ctx.cfg.fixed_point.replicates;
      fo.generations = ctx.cfg.fixed_point.generations;
      fo.threads = ctx.args.threads;
      const auto fr = factorization_diagnostic(res.pool.samples, ctx.cfg.model, profile, ctx.key.child("factor"), fo);
      Json f{{"advisory", true},
             {"w_mean", estimate_json(fr.w_mean)},
             {"negative_fraction", fr.negative_fraction},
             {"reliable", fr.reliable},
             {"stable_scale", fr.fit.scale},
             {"ks", fr.fit.ks},
             {"notes", fr.notes}};
      if (fr.tail_fitted)
        f["tail_slope"] = Json{{"slope", fr.tail.slope}, {"ci_lo", fr.tail.ci_lo}, {"ci_hi", fr.tail.ci_hi},
                               {"expected", -theta}};
      ctx.results["factorization"] = f;
    } else {
      ctx.results["factorization"] = Json{{"skipped", "minimizer is not below 2"}};
    }
  }
  ctx.out << "iterations=" << res.report.iterations << " converged=" << (res.report.converged ? "true" : "false")
          << " collapsed=" << (res.report.collapsed ? "true" : "false")
          << " residual_ks=" << format_number(resid.residual_ks) << "\n";
}

inline void run_check_assumptions(RunContext& ctx) {
  const auto profile = ctx.located_profile();
  Rng screen_rng(ctx.key.child("screen"));
  const auto screen = screen_assumptions(ctx.cfg.model, profile, screen_rng, ctx.cfg.budget.screen_draws);
  const auto curve = characteristic_index_curve(profile, ctx.args.t_grid.value_or(ctx.cfg.check.t_grid));
  CsvWriter csv(ctx.file("check_assumptions.csv"));
  csv.row({"t", "m", "defined"});
  for (const auto& p : curve.points) csv.row({p.t, p.m, p.defined});

  ctx.results["profile"] = profile_json(profile);
  ctx.results["assumptions"] = assumptions_json(screen);
  ctx.results["characteristic_index"] = curve.alpha ? Json(*curve.alpha) : Json(nullptr);
  ctx.out << "theta_star " << format_number(profile.theta_star()) << ", characteristic index "
          << (curve.alpha ? format_number(*curve.alpha) : std::string("not found on grid")) << "\n";
  if (ctx.cfg.initial) {
    const auto& law = *ctx.cfg.initial;
    Rng member_rng(ctx.key.child("membership"));
    const auto m = check_membership(law, law.gamma(), member_rng, ctx.cfg.budget.screen_draws);
    const auto reg = classify_regime(profile, law.gamma());
    ctx.results["membership"] = Json{{"law", law.name()},
                                     {"gamma", m.gamma},
                                     {"member", m.member},
                                     {"reason", m.reason},
                                     {"analytic_moment", m.analytic_moment ? Json(*m.analytic_moment) : Json(nullptr)},
                                     {"mc_moment", estimate_json(m.mc_moment)}};
    ctx.results["regime"] = regime_json(reg);
    ctx.out << "initial law " << law.name() << " member=" << (m.member ? "true" : "false") << ", regime "
            << to_string(reg.regime) << "\n";
  }
}

inline void run_martingales(RunContext& ctx) {
  const auto profile = ctx.located_profile();
  const auto& mb = ctx.cfg.martingales;
  const std::size_t reps = ctx.args.samples.value_or(mb.replicates);
  const auto rep = skeleton_diagnostics(ctx.cfg.model, profile, mb.delta, mb.n_max, reps, ctx.key, ctx.sim());
  CsvWriter csv(ctx.file("martingales.csv"));
  csv.row({"n", "t", "W_mean", "W_se", "D_mean", "D_se", "V2_mean", "V2_se", "min_recentred_mean",
           "min_recentred_se", "empty_replicates"});
  for (const auto& r : rep.rows)
    csv.row({r.n, static_cast<double>(r.n) * mb.delta, r.additive.mean, r.additive.se, r.derivative.mean,
             r.derivative.se, r.second.mean, r.second.se, r.min_recentred.mean, r.min_recentred.se,
             r.empty_replicates});
  ctx.results["profile"] = profile_json(profile);
  ctx.results["delta"] = mb.delta;
  ctx.results["replicates"] = reps;
  ctx.results["sigma2_expected"] = rep.sigma2_expected;
  ctx.results["sigma2_estimate"] = estimate_json(rep.rows.front().second);
  for (const auto& r : rep.rows)
    ctx.out << "n=" << r.n << " W=" << format_number(r.additive.mean) << " +- " << format_number(r.additive.se)
            << " D=" << format_number(r.derivative.mean) << " +- " << format_number(r.derivative.se) << "\n";
}

// ---------------------------------------------------------------------------

inline void apply_overrides(const CliArgs& args, config::RunConfig& cfg) {
  if (args.cap) {
    if (*args.cap < 1) throw ConfigError("--cap must be >= 1");
    cfg.budget.particle_cap = *args.cap;
  }
  if (args.seed) cfg.seed = *args.seed;
  if (args.threads < 1) throw ConfigError("--threads must be >= 1");
  if (args.samples && *args.samples < 1) throw ConfigError("--samples must be >= 1");
  if (args.t_grid) config::detail::require_increasing(*args.t_grid, "--t-grid", true);
}

inline Json overrides_json(const CliArgs& a) {
  Json o = Json::object();
  if (a.seed) o["seed"] = *a.seed;
  if (a.cap) o["cap"] = *a.cap;
  if (a.t_grid) o["t_grid"] = *a.t_grid;
  if (a.samples) o["samples"] = *a.samples;
  if (a.regime_override) o["regime_override"] = *a.regime_override;
  if (a.seed_from) o["seed_from"] = *a.seed_from;
  if (a.iters) o["iters"] = *a.iters;
  if (a.ks_tol) o["ks_tol"] = *a.ks_tol;
  return o;
}

/// Executes one subcommand. Diagnostics go to `err`, human summaries to `out`.
inline int run(const CliArgs& args, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  try {
    const auto& subs = subcommands();
    if (std::find(subs.begin(), subs.end(), args.subcommand) == subs.end())
      throw ConfigError("unknown subcommand '" + args.subcommand + "'");
    const std::string text = config::read_file(args.config_path);
    auto cfg = config::parse(text, args.config_path);
    apply_overrides(args, cfg);

    std::filesystem::path out_dir(args.out_dir);
    std::filesystem::create_directories(out_dir);
    RunContext ctx{args, cfg, StreamKey(cfg.seed).child(args.subcommand), out_dir, out, err, Json::object(), {}};

    if (args.subcommand == "spectral") run_spectral(ctx);
    else if (args.subcommand == "theta") run_theta(ctx);
    else if (args.subcommand == "simulate") run_simulate(ctx);
    else if (args.subcommand == "scaling-study") run_scaling_study(ctx);
    else if (args.subcommand == "fixed-point") run_fixed_point(ctx);
    else if (args.subcommand == "check-assumptions") run_check_assumptions(ctx);
    else run_martingales(ctx);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Json summary{{"subcommand", args.subcommand},
                 {"config", cfg.raw},
                 {"config_path", args.config_path},
                 {"config_hash", git_blob_hash(text)},
                 {"seed", cfg.seed},
                 {"threads", args.threads},
                 {"overrides", overrides_json(args)},
                 {"outputs", ctx.files},
                 {"results", ctx.results},
                 {"wall_time_seconds", wall}};
    std::ofstream js(out_dir / (args.subcommand + ".summary.json"), std::ios::binary);
    if (!js) throw std::runtime_error("cannot write summary in " + out_dir.string());
    js << summary.dump(2) << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const AnalysisError& e) {
    err << "analysis error: " << e.what() << "\n";
    return kExitAnalysis;
  } catch (const DomainError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace kinetic_brw::cli
