#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "stochreg/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Stochastic output regulation: simulation and figure reproduction"};
  app.require_subcommand(1);

  std::string config;
  auto* run = app.add_subcommand("run", "run an experiment described by a JSON config");
  run->add_option("config", config, "experiment config")->required();

  std::string figure, out;
  bool fast = false;
  auto* repro = app.add_subcommand("reproduce", "rerun a figure preset (fig1, fig3, fig4, fig5, fig6)");
  repro->add_option("figure", figure, "figure id")->required();
  repro->add_option("--out", out, "output directory (default repro/<figure>)");
  repro->add_flag("--fast", fast, "coarse CI settings (dt = 5e-6, T = 0.5)");

  std::string model;
  auto* check = app.add_subcommand("check-stability", "non-resonance and closed-loop checks for a model");
  check->add_option("model", model, "model JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*run) return stochreg::run_command(config);
  if (*repro) return stochreg::reproduce_command(figure, out, fast);
  if (*check) return stochreg::check_stability_command(model);
  return 1;
}
