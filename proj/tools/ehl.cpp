// ehl: command line driver.
//   ehl run <cfg>
//   ehl sweep <cfg> [--levels N] [--degrees 1,2] [--allow-partial]
//   ehl defaults

#include <CLI11.hpp>

#include "ehl/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Penalized interior-penalty DG solver for EHL contact problems"};
  app.require_subcommand(1);

  std::string run_cfg;
  auto* run = app.add_subcommand("run", "Solve the configured case and write artifacts");
  run->add_option("config", run_cfg, "Configuration file")->required();

  std::string sweep_cfg;
  int levels = 0;
  std::vector<int> degrees;
  bool allow_partial = false;
  auto* sweep = app.add_subcommand("sweep", "Convergence or penalty sweep, writes rates.csv");
  sweep->add_option("config", sweep_cfg, "Configuration file")->required();
  auto* levels_opt = sweep->add_option("--levels", levels, "Number of nested meshes");
  auto* degrees_opt = sweep->add_option("--degrees", degrees, "Polynomial degrees, comma separated")->delimiter(',');
  sweep->add_flag("--allow-partial", allow_partial, "Exit 0 when at least one row succeeded");

  app.add_subcommand("defaults", "Print the default line-contact configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ehl::cli::parse_error;
  }

  if (*run) return ehl::cli::run(run_cfg);
  if (*sweep) {
    ehl::cli::SweepOptions so;
    if (*levels_opt) so.levels = levels;
    if (*degrees_opt) so.degrees = degrees;
    so.allow_partial = allow_partial;
    return ehl::cli::sweep(sweep_cfg, so);
  }
  std::cout << ehl::write_config(ehl::default_run_config());
  return 0;
}
