#include <iostream>

#include <CLI11.hpp>

#include "macrostate/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Macrostate parameters of isolated quantum lattice models"};
  app.require_subcommand(1);

  macrostate::RunOptions opts;
  std::string output_dir;
  std::string config, series_a, series_b;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--output-dir", output_dir, "Directory for output files (overrides output.dir)");
    sub->add_option("--override", opts.overrides, "Set a config entry, key=value with a dot path")->take_all();
    sub->add_flag("--quiet", opts.quiet, "Only report errors");
  };

  CLI::App* run = app.add_subcommand("run", "Run the configured pipelines and write series, report and manifest");
  run->add_option("config", config, "Scenario config (JSON)")->required();
  add_common(run);

  CLI::App* tau = app.add_subcommand("diagnose-tau", "Estimate the correlation decay time of the driven modes");
  tau->add_option("config", config, "Scenario config (JSON)")->required();
  add_common(tau);

  CLI::App* cmp = app.add_subcommand("compare", "Per-column deviations between two time-series files");
  cmp->add_option("series_a", series_a)->required();
  cmp->add_option("series_b", series_b)->required();
  add_common(cmp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : macrostate::kExitConfigError;
  }
  if (!output_dir.empty()) opts.output_dir = output_dir;

  if (run->parsed()) return macrostate::run_command(config, opts, std::cout, std::cerr);
  if (tau->parsed()) return macrostate::diagnose_tau_command(config, opts, std::cout, std::cerr);
  return macrostate::compare_command(series_a, series_b, opts, std::cout, std::cerr);
}
