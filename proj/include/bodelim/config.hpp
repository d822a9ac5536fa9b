#pragma once

// Run configuration: strict JSON ingestion, the defaults table echoed into
// every report, and command dispatch for the bode-limits tool.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bodelim/io.hpp"
#include "bodelim/verify.hpp"

namespace bodelim {

struct OutputSpec {
  std::string directory = "bode-limits-out";
  // json, text, csv (spectra and plot curves), binary (BLIMSIG1 signals),
  // signal_csv (signals as CSV; large)
  std::vector<std::string> formats{"json", "text", "csv", "binary"};
  bool wants(const std::string& f) const;
};

/// A system whose controller is absent can only be analyzed for its plant bounds.
struct ConfiguredSystem {
  std::string id;
  RationalTF plant;
  std::optional<RationalTF> controller;
  std::optional<NoiseSpec> noise;
};

struct RunConfig {
  std::vector<ConfiguredSystem> systems;
  SimParams sim;  // sim.seed is the master seed
  Tolerances tol;
  QuadratureOptions quadrature;
  std::vector<Weight> weights{Weight::kUnweighted, Weight::kInvOmegaSq};
  bool lemma1 = true;
  bool appendix = true;
  OutputSpec output;

  /// Throws ConfigError when a system lacks a controller.
  SuiteConfig suite() const;
};

/// Throws ConfigError with a line (syntax) or field path (schema) diagnostic.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::string& path);

/// Every numeric default in one record.
Json defaults_table();
/// The configuration as run (defaults filled in).
Json effective_config(const RunConfig& cfg);

enum class Command { kAnalyze, kSimulate, kVerify, kReport };

/// Throws ConfigError for an unknown command name.
Command parse_command(const std::string& name);

enum ExitCode : int { kExitHolds = 0, kExitViolated = 1, kExitConfig = 2, kExitNumeric = 3 };

/// Runs the command and writes its outputs under cfg.output.directory.
/// analyze: bounds and quadratures only. simulate: signals and spectra.
/// verify: the full suite. report: re-renders report.json from that directory.
/// Exceptions map to exit codes: ConfigError and DomainError 2, NumericError 3.
int dispatch(Command command, const RunConfig& cfg, std::ostream& log);

}  // namespace bodelim
