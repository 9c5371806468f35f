#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "kinetic_brw/cli.hpp"

namespace {

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double x = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument(item);
    grid.push_back(x);
  }
  if (grid.empty()) throw std::invalid_argument(text);
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  using kinetic_brw::cli::CliArgs;
  CLI::App app{"Monte Carlo solver for kinetic-type equations via branching random walks"};
  app.require_subcommand(1);

  CliArgs args;
  std::optional<std::string> t_grid_text;
  for (const auto& name : kinetic_brw::cli::subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", args.config_path, "run configuration (JSON)")->required();
    sub->add_option("--seed", args.seed, "master seed; overrides the config");
    sub->add_option("--out", args.out_dir, "output directory")->capture_default_str();
    sub->add_option("--threads", args.threads, "worker threads")->capture_default_str();
    sub->add_option("--cap", args.cap, "particle budget per replicate");
    if (name == "simulate" || name == "scaling-study" || name == "check-assumptions")
      sub->add_option("--t-grid", t_grid_text, "comma-separated times");
    if (name == "simulate" || name == "scaling-study" || name == "fixed-point" || name == "martingales")
      sub->add_option("--samples", args.samples, "samples (replicates or pool size)");
    if (name == "scaling-study") sub->add_option("--regime-override", args.regime_override, "force a regime");
    if (name == "fixed-point") {
      sub->add_option("--seed-from", args.seed_from, "CSV of seed samples");
      sub->add_option("--iters", args.iters, "maximum iterations");
      sub->add_option("--ks-tol", args.ks_tol, "KS stopping tolerance");
    }
    sub->callback([&args, name] { args.subcommand = name; });
  }

  try {
    app.parse(argc, argv);
    if (t_grid_text) args.t_grid = parse_grid(*t_grid_text);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kinetic_brw::cli::kExitConfig;
  } catch (const std::invalid_argument&) {
    std::cerr << "--t-grid: expected comma-separated numbers\n";
    return kinetic_brw::cli::kExitConfig;
  }
  return kinetic_brw::cli::run(args, std::cout, std::cerr);
}
