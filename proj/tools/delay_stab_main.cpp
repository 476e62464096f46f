#include <CLI11.hpp>
#include <iostream>

#include "delaystab/commands.hpp"
#include "delaystab/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"delay-stab: predictor-observer boundary controllers for 1-D reaction-diffusion "
               "plants with delayed boundary measurement"};
  app.require_subcommand(1);

  std::string config_path;
  delaystab::io_cli::CommandOptions options;

  const std::vector<std::string> names = {"design",     "certify",   "simulate",
                                          "sweep",      "export-lmi", "reproduce-paper"};
  const std::vector<std::string> descriptions = {
      "resolve the modal split, place or validate gains, assemble the reduced model",
      "search the stability-certificate conditions, escalating the observer order",
      "closed-loop run of plant + controller, trace CSV output",
      "table of minimal certified observer orders over a swept parameter",
      "write the fixed-alpha feasibility problem in SDPA sparse format",
      "rerun the bundled reference scenarios and compare against their reference orders"};

  for (size_t i = 0; i < names.size(); ++i) {
    auto* sub = app.add_subcommand(names[i], descriptions[i]);
    sub->add_option("config", config_path, "run configuration file")->required();
    sub->add_option("--out", options.out_dir, "output directory (overrides the config)");
    sub->add_option("--n-max", options.n_max, "cap on the observer order escalation");
    sub->add_option("--seed-grid", options.seed_grid,
                    "search grid density: COARSE (default) or FINE");
  }

  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return delaystab::io_cli::run_command(command, config_path, options);
  } catch (const delaystab::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}
