#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bodelim/config.hpp"
#include "bodelim/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bode-integral performance limits of LTI feedback loops"};
  std::string command, config, out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  app.add_option("command", command, "analyze | simulate | verify | report")
      ->required()
      ->check(CLI::IsMember({"analyze", "simulate", "verify", "report"}));
  app.add_option("--config", config, "run configuration (JSON)")->required();
  app.add_option("--out", out, "output directory (overrides output.directory)");
  app.add_option("--seed", seed, "master seed override");
  app.add_option("--trials", trials, "trials per loop override")->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : bodelim::kExitConfig;
  }

  try {
    bodelim::RunConfig cfg = bodelim::parse_config(config);
    if (!out.empty()) cfg.output.directory = out;
    if (seed) cfg.sim.seed = *seed;
    if (trials) cfg.sim.trials = *trials;
    return bodelim::dispatch(bodelim::parse_command(command), cfg, std::cout);
  } catch (const bodelim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return bodelim::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return bodelim::kExitNumeric;
  }
}
