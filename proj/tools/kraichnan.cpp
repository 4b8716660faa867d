#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "kraichnan/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Kraichnan passive scalar verification runner"};
  app.require_subcommand(1);
  app.set_version_flag("--version", KRAICHNAN_VERSION);

  std::string run_cfg, validate_cfg, out_dir;
  auto* run = app.add_subcommand("run", "run an experiment config and write its artifacts");
  run->add_option("config", run_cfg, "experiment config (JSON)")->required();
  run->add_option("--output-dir", out_dir, "override the config's output_dir");
  auto* validate = app.add_subcommand("validate", "check a config and print it with defaults resolved");
  validate->add_option("config", validate_cfg, "experiment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kraichnan::cli::kConfigError;
  }

  if (*run) {
    std::optional<std::string> od;
    if (!out_dir.empty()) od = out_dir;
    return kraichnan::cli::run_command(run_cfg, od, std::cout, std::cerr);
  }
  return kraichnan::cli::validate_command(validate_cfg, std::cout, std::cerr);
}
