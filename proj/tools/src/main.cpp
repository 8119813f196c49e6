// diqkd: key rates for heralded single-photon path-entanglement DIQKD.
//
// Subcommands: chsh-scan, threshold, rate-vs-distance, t-scan, finite-keylen.
// Configuration comes from --config (JSON); flags override file values.
// Exit codes: 0 success, 2 configuration error, 3 numerical infeasibility.

#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "diqkd_app/app.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_path;
  std::string scan_text;
  std::vector<double> n_values;
  std::vector<double> t_values;
  bool asymptotic = false;
  bool have_seed = false;
  std::uint64_t seed = 0;
  int threads = 0;
  int n_starts = 0;
  int max_evals = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON run configuration");
  cmd->add_option("--out", flags.out_path, "output file (CSV or JSON)");
  cmd->add_option("--scan", flags.scan_text, "scan axis as variable:min:max:steps");
  cmd->add_option("--n", flags.n_values, "number of protocol rounds (repeatable)");
  cmd->add_option("--t-list", flags.t_values, "beamsplitter transmittances for t-scan");
  cmd->add_flag("--asymptotic", flags.asymptotic, "include the asymptotic curve");
  cmd->add_option("--seed", flags.seed, "optimizer seed")->each([&](const std::string&) {
    flags.have_seed = true;
  });
  cmd->add_option("--threads", flags.threads, "worker threads (default: DIQKD_THREADS or all)");
  cmd->add_option("--n-starts", flags.n_starts, "optimizer restarts per point");
  cmd->add_option("--max-evals", flags.max_evals, "objective evaluations per restart");
}

diqkd::app::ScanSpec parse_scan_text(const std::string& text) {
  diqkd::app::ScanSpec scan;
  std::size_t pos = 0;
  std::vector<std::string> parts;
  while (pos <= text.size()) {
    const auto next = text.find(':', pos);
    parts.push_back(text.substr(pos, next == std::string::npos ? next : next - pos));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  if (parts.size() != 4)
    throw diqkd::app::ConfigError("--scan expects variable:min:max:steps");
  scan.variable = parts[0];
  try {
    scan.min = std::stod(parts[1]);
    scan.max = std::stod(parts[2]);
    scan.steps = std::stoi(parts[3]);
  } catch (const std::exception&) {
    throw diqkd::app::ConfigError("--scan expects numeric min:max:steps");
  }
  return scan;
}

int run(const std::string& name, const CommonFlags& flags) {
  try {
    diqkd::app::RunConfig cfg;
    if (!flags.config_path.empty()) cfg = diqkd::app::parse_config_file(flags.config_path);
    if (!flags.out_path.empty()) cfg.output.path = flags.out_path;
    if (!flags.scan_text.empty()) cfg.scan = parse_scan_text(flags.scan_text);
    if (!flags.n_values.empty()) cfg.n_list = flags.n_values;
    if (!flags.t_values.empty()) cfg.t_list = flags.t_values;
    if (flags.asymptotic) cfg.asymptotic = true;
    if (flags.have_seed) cfg.seed = flags.seed;
    if (flags.n_starts > 0) cfg.optimizer.n_starts = flags.n_starts;
    if (flags.max_evals > 0) cfg.optimizer.max_evals = flags.max_evals;
    if (flags.threads > 0)
      setenv("DIQKD_THREADS", std::to_string(flags.threads).c_str(), 1);
    return diqkd::app::run_command(name, cfg);
  } catch (const diqkd::app::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Device-independent QKD rates for heralded single-photon path entanglement"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"chsh-scan", "optimized CHSH score versus local channel efficiency (CSV)"},
      {"threshold", "bisect the local efficiency where the asymptotic rate reaches zero"},
      {"rate-vs-distance", "key rate versus distance for asymptotic and finite n (CSV)"},
      {"t-scan", "asymptotic rate versus local efficiency for several T (CSV)"},
      {"finite-keylen", "optimized finite-size key length at a given n (JSON)"},
  };

  std::vector<CommonFlags> flags(std::size(subs));
  std::vector<CLI::App*> cmds;
  for (std::size_t i = 0; i < std::size(subs); ++i) {
    CLI::App* cmd = app.add_subcommand(subs[i].name, subs[i].help);
    add_common(cmd, flags[i]);
    cmds.push_back(cmd);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (std::size_t i = 0; i < cmds.size(); ++i)
    if (cmds[i]->parsed()) return run(subs[i].name, flags[i]);
  return 2;
}
