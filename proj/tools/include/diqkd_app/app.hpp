#pragma once

// Command layer behind the diqkd executable: JSON run configuration, the
// scan/threshold/key-length commands, and deterministic CSV/JSON rendering.
// Everything is seeded and renders byte-identically for a fixed
// configuration; scan evaluations are warm-started in scan order.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "diqkd/finitekey.hpp"
#include "diqkd/photonics.hpp"

namespace diqkd::app {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScanSpec {
  std::string variable;  // one of: L, eta_tilde_L, eta_L, T, n
  double min = 0.0;
  double max = 0.0;
  int steps = 0;  // >= 2 grid points
};

struct OutputSpec {
  std::string path;  // empty: stdout only
  std::string format = "auto";
};

struct OptimizerKnobs {
  int n_starts = 32;
  int max_evals = 6000;
};

// Pinned values for the finite-size free parameters; either all five are
// given (evaluate) or none (optimize).
struct FinitePin {
  bool pinned = false;
  double gamma = 0.0, t = 0.0, alpha_p = 0.0, alpha_pp = 0.0, q_n = 0.0;
};

struct RunConfig {
  photonics::SetupParams scenario;
  finitekey::EpsilonSet epsilons;
  double completeness_k = finitekey::kDefaultCompletenessSigma;
  FinitePin finite;
  ScanSpec scan;
  OutputSpec output;
  std::uint64_t seed = 1;
  OptimizerKnobs optimizer;
  std::vector<double> n_list;
  bool asymptotic = false;
  std::vector<double> t_list;
};

RunConfig parse_config_text(const std::string& json_text);
RunConfig parse_config_file(const std::string& path);

// Command results carry the rendered payload (CSV or JSON) plus a one-line
// summary for stdout.
struct CommandResult {
  std::string payload;
  std::string summary;
};

CommandResult cmd_chsh_scan(const RunConfig& config);
CommandResult cmd_threshold(const RunConfig& config);
CommandResult cmd_rate_vs_distance(const RunConfig& config);
CommandResult cmd_t_scan(const RunConfig& config);
CommandResult cmd_finite_keylen(const RunConfig& config);

// Dispatches by subcommand name and writes output.path when set.
// Returns the process exit code (0 ok, 2 config error, 3 infeasible).
int run_command(const std::string& name, const RunConfig& config);

// 12 significant digits, C locale. Used for every CSV number.
std::string format_number(double v);

}  // namespace diqkd::app
