#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "kinetic_brw/cli.hpp"

using namespace kinetic_brw;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  const fs::path dir = fs::temp_directory_path() / "kinetic_brw_cli_test" /
                       (std::string(info->test_suite_name()) + "." + info->name());
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text, const std::string& name = "config.json") {
  const fs::path p = dir / name;
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

std::string slurp(const fs::path& p) { return config::read_file(p.string()); }

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(cli::CliArgs args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

cli::CliArgs args_for(const std::string& sub, const fs::path& cfg, const fs::path& out, unsigned threads = 1) {
  cli::CliArgs a;
  a.subcommand = sub;
  a.config_path = cfg.string();
  a.out_dir = out.string();
  a.threads = threads;
  return a;
}

const char* kPusConfig = R"({
  "model": {"kind": "power_uniform_split", "a": 2.0},
  "initial": {"kind": "centered_uniform", "half_width": 1.0, "gamma": 2.0},
  "seed": 7,
  "budget": {"samples": 200, "bootstrap": 20, "screen_draws": 2000, "mc_draws": 5000},
  "simulate": {"t": [0.5, 1.5]},
  "scaling_study": {"t_grid": [1, 2, 3]},
  "fixed_point": {"iters": 3, "pool_size": 500, "replicates": 50, "generations": 5},
  "martingales": {"n_max": 3, "replicates": 200},
  "check_assumptions": {"t_grid": [0.5, 1.0, 1.5, 2.0]}
})";

int system_exit(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(GitBlobHash, MatchesGitObjectIds) {
  EXPECT_EQ(cli::git_blob_hash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(cli::git_blob_hash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST(Csv, QuotingRoundTrip) {
  const auto dir = scratch_dir();
  {
    cli::CsvWriter w(dir / "q.csv");
    w.row({"a", "b,c", "say \"hi\""});
    w.row({1.5, std::size_t{2}, true});
  }
  const auto text = slurp(dir / "q.csv");
  EXPECT_EQ(text, "a,\"b,c\",\"say \"\"hi\"\"\"\r\n1.5,2,true\r\n");
  const auto rows = cli::parse_csv(text);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0][1], "b,c");
  EXPECT_EQ(rows[0][2], "say \"hi\"");
}

TEST(Csv, NumbersRoundTrip) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 1e300}) EXPECT_EQ(std::stod(cli::format_number(x)), x);
  EXPECT_EQ(cli::format_number(std::numeric_limits<double>::quiet_NaN()), "nan");
}

TEST(Csv, SampleColumnSelection) {
  const auto dir = scratch_dir();
  std::ofstream(dir / "s.csv") << "replicate,value,other\r\n0,1.5,9\r\n1,-2,9\r\n";
  EXPECT_EQ(cli::read_sample_column((dir / "s.csv").string()), (std::vector<double>{1.5, -2.0}));
  std::ofstream(dir / "bad.csv") << "value\n1\nabc\n";
  EXPECT_THROW(cli::read_sample_column((dir / "bad.csv").string()), ConfigError);
}

TEST(Config, MalformedJsonReportsLineAndColumn) {
  const auto dir = scratch_dir();
  const auto cfg = write_config(dir, "{\n  \"model\": ,\n}\n");
  const auto r = run(args_for("theta", cfg, dir));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("config.json:2:12"), std::string::npos) << r.err;
}

TEST(Config, UnknownKeysRejected) {
  const auto dir = scratch_dir();
  auto r = run(args_for("theta", write_config(dir, R"({"model": {"kind": "kac"}, "extra": 1})"), dir));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("unknown key 'extra'"), std::string::npos);
  r = run(args_for("theta", write_config(dir, R"({"model": {"kind": "kac", "a": 1}})"), dir));
  EXPECT_EQ(r.code, 1);
  r = run(args_for("theta", write_config(dir, R"({"model": {"kind": "kac"}, "budget": {"samples": -3}})"), dir));
  EXPECT_EQ(r.code, 1);
}

TEST(Config, ModelAndLawValidationIsConfigError) {
  EXPECT_THROW(config::parse(R"({"model": {"kind": "deterministic_pair", "a": -1}})"), ConfigError);
  EXPECT_THROW(config::parse(R"({"model": {"kind": "kac"}, "initial": {"kind": "point_mass", "c": 1, "gamma": 2}})"),
               ConfigError);
  EXPECT_THROW(config::parse(R"({"model": {"kind": "table", "atoms": [{"p": 0.4, "w": [0.5]}]}})"), ConfigError);
  EXPECT_THROW(config::parse(R"({"model": {"kind": "kac"}, "seed": 1.5})"), ConfigError);
  const auto ok = config::parse(R"({"model": {"kind": "econophysics",
      "p1": {"kind": "uniform", "lo": 0, "hi": 1}, "q1": {"kind": "uniform", "lo": 0, "hi": 1},
      "p2": {"kind": "discrete", "values": [0.2, 0.8], "probs": [0.5, 0.5]}, "q2": {"kind": "uniform", "lo": 0, "hi": 1}},
      "seed": 18446744073709551615})");
  EXPECT_EQ(ok.seed, 18446744073709551615ull);
  EXPECT_EQ(ok.model.name(), "econophysics");
}

TEST(Theta, PowerUniformSplitSummary) {
  const auto dir = scratch_dir();
  const auto r = run(args_for("theta", write_config(dir, kPusConfig), dir));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto summary = config::Json::parse(slurp(dir / "theta.summary.json"));
  EXPECT_NEAR(summary["results"]["theta_star"].get<double>(), 1.2071068, 1e-6);
  EXPECT_EQ(summary["seed"].get<std::uint64_t>(), 7u);
  EXPECT_EQ(summary["config_hash"].get<std::string>(), cli::git_blob_hash(kPusConfig));
  EXPECT_EQ(summary["config"]["model"]["kind"], "power_uniform_split");
  EXPECT_TRUE(summary["wall_time_seconds"].is_number());
  EXPECT_EQ(summary["results"]["regime"]["regime"], "beyond_boundary");
  EXPECT_NE(r.out.find("theta_star"), std::string::npos);
}

TEST(Theta, BracketFailureExitsTwo) {
  const auto dir = scratch_dir();
  const auto r = run(args_for("theta", write_config(dir, R"({"model": {"kind": "deterministic_pair", "a": 1.0}})"), dir));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("not bracketed"), std::string::npos) << r.err;
}

TEST(Simulate, BudgetFailureExitsTwo) {
  const auto dir = scratch_dir();
  auto a = args_for("simulate", write_config(dir, kPusConfig), dir);
  a.cap = 5;
  a.t_grid = std::vector<double>{4.0};
  const auto r = run(a);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("budget"), std::string::npos) << r.err;
}

TEST(Simulate, MissingInitialIsConfigError) {
  const auto dir = scratch_dir();
  const auto r = run(args_for("simulate", write_config(dir, R"({"model": {"kind": "kac"}})"), dir));
  EXPECT_EQ(r.code, 1);
}

TEST(Simulate, WritesSamplesAndSummary) {
  const auto dir = scratch_dir();
  const auto r = run(args_for("simulate", write_config(dir, kPusConfig), dir));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = cli::parse_csv(slurp(dir / "simulate.csv"));
  ASSERT_EQ(rows.size(), 401u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"replicate", "t", "u_t"}));
  const auto summary = config::Json::parse(slurp(dir / "simulate.summary.json"));
  const auto& times = summary["results"]["times"];
  ASSERT_EQ(times.size(), 2u);
  EXPECT_EQ(times[0]["count"], 200);
  EXPECT_EQ(times[0]["truncations"], 0);
  EXPECT_TRUE(times[1]["se"].get<double>() > 0.0);
}

TEST(Spectral, PrintsCsvColumns) {
  const auto dir = scratch_dir();
  const auto r = run(args_for("spectral", write_config(dir, kPusConfig), dir));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("theta,phi,phi_se,F\n", 0), 0u);
  const auto rows = cli::parse_csv(slurp(dir / "spectral.csv"));
  EXPECT_EQ(rows[5][0], "1");
  EXPECT_NEAR(std::stod(rows[5][1]), -1.0 / 3.0, 1e-15);
}

TEST(ScalingAndFixedPoint, SeedFromTerminalSamples) {
  const auto dir = scratch_dir();
  const auto cfg = write_config(dir, kPusConfig);
  auto r = run(args_for("scaling-study", cfg, dir));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto summary = config::Json::parse(slurp(dir / "scaling-study.summary.json"));
  for (const char* k : {"converged", "final_ks", "iqr"}) EXPECT_TRUE(summary["results"]["verdict"].contains(k)) << k;
  auto fp = args_for("fixed-point", cfg, dir);
  fp.seed_from = (dir / "scaling_terminal.csv").string();
  fp.iters = 2;
  r = run(fp);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto pool = cli::parse_csv(slurp(dir / "fixed_point_pool.csv"));
  EXPECT_EQ(pool.size(), 201u);
  const auto its = cli::parse_csv(slurp(dir / "fixed_point_iterations.csv"));
  EXPECT_EQ(its.size(), 4u);
}

TEST(ScalingStudy, RegimeOverrideValidation) {
  const auto dir = scratch_dir();
  auto a = args_for("scaling-study", write_config(dir, kPusConfig), dir);
  a.regime_override = "sideways";
  EXPECT_EQ(run(a).code, 1);
  a.regime_override = "subcritical";
  a.t_grid = std::vector<double>{1.0, 2.0};
  ASSERT_EQ(run(a).code, 0);
  const auto summary = config::Json::parse(slurp(dir / "scaling-study.summary.json"));
  EXPECT_EQ(summary["results"]["regime"]["regime"], "subcritical");
}

TEST(CheckAssumptionsAndMartingales, Run) {
  const auto dir = scratch_dir();
  const auto cfg = write_config(dir, kPusConfig);
  auto r = run(args_for("check-assumptions", cfg, dir));
  ASSERT_EQ(r.code, 0) << r.err;
  auto summary = config::Json::parse(slurp(dir / "check-assumptions.summary.json"));
  EXPECT_TRUE(summary["results"]["membership"]["member"].get<bool>());
  r = run(args_for("martingales", cfg, dir));
  ASSERT_EQ(r.code, 0) << r.err;
  summary = config::Json::parse(slurp(dir / "martingales.summary.json"));
  EXPECT_NEAR(summary["results"]["sigma2_expected"].get<double>(),
              4.0 * std::pow(1.0 + std::sqrt(2.0), 2) / std::pow(2.0 + std::sqrt(2.0), 3), 1e-12);
}

TEST(Determinism, CsvIdenticalAcrossRunsAndThreads) {
  const auto dir = scratch_dir();
  const auto cfg = write_config(dir, kPusConfig);
  for (const auto& sub : cli::subcommands()) {
    const auto d1 = dir / (sub + "-1"), d2 = dir / (sub + "-3");
    ASSERT_EQ(run(args_for(sub, cfg, d1, 1)).code, 0) << sub;
    ASSERT_EQ(run(args_for(sub, cfg, d2, 3)).code, 0) << sub;
    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(d1)) {
      if (e.path().extension() != ".csv") continue;
      EXPECT_EQ(slurp(e.path()), slurp(d2 / e.path().filename())) << sub << " " << e.path().filename();
      ++compared;
    }
    EXPECT_GT(compared, 0u) << sub;
  }
}

TEST(Executable, ExitCodes) {
  const auto dir = scratch_dir();
  const auto cfg = write_config(dir, kPusConfig);
  const std::string exe = KINETIC_BRW_EXE;
  const std::string quiet = " > /dev/null 2>&1";
  EXPECT_EQ(system_exit(exe + " theta --config " + cfg.string() + " --out " + dir.string() + quiet), 0);
  EXPECT_EQ(system_exit(exe + " theta --config " + (dir / "missing.json").string() + quiet), 1);
  EXPECT_EQ(system_exit(exe + " theta --bogus" + quiet), 1);
  EXPECT_EQ(system_exit(exe + quiet), 1);
  EXPECT_EQ(system_exit(exe + " simulate --config " + cfg.string() + " --out " + dir.string() +
                        " --t-grid 1,x" + quiet),
            1);
  EXPECT_EQ(system_exit(exe + " simulate --config " + cfg.string() + " --out " + dir.string() +
                        " --t-grid 4 --cap 5 --samples 3" + quiet),
            2);
}
