#include "diqkd_app/app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "diqkd/protocol.hpp"

namespace diqkd::app {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("unknown key \"" + key + "\" in " + where);
  }
}

double num_or(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) throw ConfigError(std::string(key) + " must be a number");
  return obj[key].get<double>();
}

std::vector<double> num_list(const json& v, const char* key) {
  std::vector<double> out;
  if (v.is_number()) {
    out.push_back(v.get<double>());
  } else if (v.is_array()) {
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(std::string(key) + " must hold numbers");
      out.push_back(e.get<double>());
    }
  } else {
    throw ConfigError(std::string(key) + " must be a number or array of numbers");
  }
  return out;
}

optimizer::SearchSpec search_spec(const RunConfig& cfg) {
  optimizer::SearchSpec s;
  s.n_starts = cfg.optimizer.n_starts;
  s.max_evals_per_start = cfg.optimizer.max_evals;
  s.seed = cfg.seed;
  return s;
}

json scenario_json(const photonics::SetupParams& p) {
  return json{{"T", p.T},
              {"L", p.L},
              {"alpha_att", p.alpha_att},
              {"eta_D", p.eta_D},
              {"eta_tilde_L", p.eta_tilde_L},
              {"eta_tilde_D", p.eta_tilde_D},
              {"nu", p.nu}};
}

json epsilons_json(const finitekey::EpsilonSet& e) {
  return json{{"eps_s", e.eps_s},   {"eps_s_p", e.eps_s_p}, {"eps_s_pp", e.eps_s_pp},
              {"eps_EA", e.eps_EA}, {"eps_PA", e.eps_PA},   {"eps_h", e.eps_h}};
}

json settings_json(const protocol::ProtocolSettings& st) {
  const auto one = [](const measurements::MeasurementSetting& m, int sign) {
    return json{{"xi_amp", m.xi_amp},
                {"xi_phase", m.xi_phase},
                {"alpha_amp", m.alpha_amp},
                {"alpha_phase", m.alpha_phase},
                {"sign", sign}};
  };
  return json{{"a1", one(st.alice[0], st.alice_sign[0])},
              {"a2", one(st.alice[1], st.alice_sign[1])},
              {"b1", one(st.bob[0], st.bob_sign[0])},
              {"b2", one(st.bob[1], st.bob_sign[1])},
              {"b3", one(st.bob[2], st.bob_sign[2])}};
}

void append_setting_columns(std::string& header) {
  for (const char* who : {"a1", "a2", "b1", "b2", "b3"})
    for (const char* field : {"xi_amp", "xi_phase", "alpha_amp", "alpha_phase"}) {
      header += ',';
      header += field;
      header += '_';
      header += who;
    }
}

void append_setting_values(std::string& row, const protocol::ProtocolSettings& st) {
  const std::array<const measurements::MeasurementSetting*, 5> all = {
      &st.alice[0], &st.alice[1], &st.bob[0], &st.bob[1], &st.bob[2]};
  for (const auto* m : all) {
    row += ',' + format_number(m->xi_amp) + ',' + format_number(m->xi_phase) + ',' +
           format_number(m->alpha_amp) + ',' + format_number(m->alpha_phase);
  }
}

std::vector<double> scan_grid(const ScanSpec& scan) {
  if (scan.steps < 2) throw ConfigError("scan.steps must be >= 2");
  if (!(scan.min < scan.max)) throw ConfigError("scan.min must be below scan.max");
  std::vector<double> grid(scan.steps);
  for (int i = 0; i < scan.steps; ++i)
    grid[i] = scan.min + (scan.max - scan.min) * i / double(scan.steps - 1);
  return grid;
}

// Key statistics of the configured scenario under jointly optimized
// measurements.
protocol::KeyRateReport scenario_stats(const RunConfig& cfg) {
  cfg.scenario.validate();
  photonics::HeraldedState hs = photonics::heralded_state_analytic(cfg.scenario);
  return protocol::optimize_protocol(hs, cfg.scenario, search_spec(cfg));
}

}  // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

RunConfig parse_config_text(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown_keys(root,
                      {"scenario", "epsilons", "completeness_k", "finite", "scan", "output",
                       "seed", "optimizer", "n", "asymptotic", "t_list"},
                      "config");

  RunConfig cfg;
  if (root.contains("scenario")) {
    const auto& sc = root["scenario"];
    reject_unknown_keys(sc, {"T", "L", "alpha_att", "eta_D", "eta_tilde_L", "eta_tilde_D", "nu"},
                        "scenario");
    cfg.scenario.T = num_or(sc, "T", cfg.scenario.T);
    cfg.scenario.L = num_or(sc, "L", cfg.scenario.L);
    cfg.scenario.alpha_att = num_or(sc, "alpha_att", cfg.scenario.alpha_att);
    cfg.scenario.eta_D = num_or(sc, "eta_D", cfg.scenario.eta_D);
    cfg.scenario.eta_tilde_L = num_or(sc, "eta_tilde_L", cfg.scenario.eta_tilde_L);
    cfg.scenario.eta_tilde_D = num_or(sc, "eta_tilde_D", cfg.scenario.eta_tilde_D);
    cfg.scenario.nu = num_or(sc, "nu", cfg.scenario.nu);
  }
  if (root.contains("epsilons")) {
    const auto& ep = root["epsilons"];
    reject_unknown_keys(ep, {"eps_s", "eps_s_p", "eps_s_pp", "eps_EA", "eps_PA", "eps_h"},
                        "epsilons");
    cfg.epsilons.eps_s = num_or(ep, "eps_s", cfg.epsilons.eps_s);
    cfg.epsilons.eps_s_p = num_or(ep, "eps_s_p", cfg.epsilons.eps_s_p);
    cfg.epsilons.eps_s_pp = num_or(ep, "eps_s_pp", cfg.epsilons.eps_s_pp);
    cfg.epsilons.eps_EA = num_or(ep, "eps_EA", cfg.epsilons.eps_EA);
    cfg.epsilons.eps_PA = num_or(ep, "eps_PA", cfg.epsilons.eps_PA);
    cfg.epsilons.eps_h = num_or(ep, "eps_h", cfg.epsilons.eps_h);
  }
  cfg.completeness_k = num_or(root, "completeness_k", cfg.completeness_k);
  if (root.contains("finite")) {
    const auto& fin = root["finite"];
    reject_unknown_keys(fin, {"gamma", "t", "alpha_p", "alpha_pp", "q_n"}, "finite");
    const bool any = !fin.empty();
    const bool all = fin.contains("gamma") && fin.contains("t") && fin.contains("alpha_p") &&
                     fin.contains("alpha_pp") && fin.contains("q_n");
    if (any && !all)
      throw ConfigError("finite overrides must pin all of gamma, t, alpha_p, alpha_pp, q_n");
    if (all) {
      cfg.finite.pinned = true;
      cfg.finite.gamma = fin["gamma"].get<double>();
      cfg.finite.t = fin["t"].get<double>();
      cfg.finite.alpha_p = fin["alpha_p"].get<double>();
      cfg.finite.alpha_pp = fin["alpha_pp"].get<double>();
      cfg.finite.q_n = fin["q_n"].get<double>();
    }
  }
  if (root.contains("scan")) {
    const auto& sc = root["scan"];
    reject_unknown_keys(sc, {"variable", "min", "max", "steps"}, "scan");
    if (!sc.contains("variable") || !sc["variable"].is_string())
      throw ConfigError("scan.variable must be a string");
    cfg.scan.variable = sc["variable"].get<std::string>();
    cfg.scan.min = num_or(sc, "min", 0.0);
    cfg.scan.max = num_or(sc, "max", 0.0);
    cfg.scan.steps = static_cast<int>(num_or(sc, "steps", 0.0));
  }
  if (root.contains("output")) {
    const auto& out = root["output"];
    reject_unknown_keys(out, {"path", "format"}, "output");
    if (out.contains("path")) cfg.output.path = out["path"].get<std::string>();
    if (out.contains("format")) cfg.output.format = out["format"].get<std::string>();
  }
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned() && !root["seed"].is_number_integer())
      throw ConfigError("seed must be an integer");
    cfg.seed = root["seed"].get<std::uint64_t>();
  }
  if (root.contains("optimizer")) {
    const auto& op = root["optimizer"];
    reject_unknown_keys(op, {"n_starts", "max_evals"}, "optimizer");
    cfg.optimizer.n_starts = static_cast<int>(num_or(op, "n_starts", cfg.optimizer.n_starts));
    cfg.optimizer.max_evals = static_cast<int>(num_or(op, "max_evals", cfg.optimizer.max_evals));
    if (cfg.optimizer.n_starts < 1 || cfg.optimizer.max_evals < 10)
      throw ConfigError("optimizer knobs out of range");
  }
  if (root.contains("n")) cfg.n_list = num_list(root["n"], "n");
  if (root.contains("asymptotic")) {
    if (!root["asymptotic"].is_boolean()) throw ConfigError("asymptotic must be a boolean");
    cfg.asymptotic = root["asymptotic"].get<bool>();
  }
  if (root.contains("t_list")) cfg.t_list = num_list(root["t_list"], "t_list");

  try {
    cfg.scenario.validate();
    cfg.epsilons.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

CommandResult cmd_chsh_scan(const RunConfig& config) {
  RunConfig cfg = config;
  if (cfg.scan.variable.empty()) cfg.scan = ScanSpec{"eta_tilde_L", 0.75, 1.0, 26};
  if (cfg.scan.variable != "eta_tilde_L")
    throw ConfigError("chsh-scan scans eta_tilde_L; got scan.variable = " + cfg.scan.variable);
  const auto grid = scan_grid(cfg.scan);

  std::string csv = "eta_tilde_L,S";
  append_setting_columns(csv);
  csv += '\n';

  // The scanned state is the heralded pair mixed only by local loss (the
  // T -> 0 limit); t-scan covers the full T dependence.
  std::vector<Eigen::VectorXd> warm;
  double s_min = 1e9, s_max = -1e9, crossing = -1.0, prev_s = 0.0, prev_eta = 0.0;
  for (const double eta_tilde_l : grid) {
    const auto state = photonics::analytic_heralded_density(0.0, eta_tilde_l);
    const auto rep =
        protocol::optimize_chsh(state, cfg.scenario.eta_tilde_D, search_spec(cfg), warm);
    warm = {protocol::pack_chsh(rep.settings)};
    std::string row = format_number(eta_tilde_l) + ',' + format_number(rep.S);
    append_setting_values(row, rep.settings);
    csv += row + '\n';
    if (prev_s < 2.0 && rep.S >= 2.0 && crossing < 0.0 && eta_tilde_l > grid.front())
      crossing = prev_eta + (eta_tilde_l - prev_eta) * (2.0 - prev_s) / (rep.S - prev_s);
    prev_s = rep.S;
    prev_eta = eta_tilde_l;
    s_min = std::min(s_min, rep.S);
    s_max = std::max(s_max, rep.S);
  }

  CommandResult res;
  res.payload = csv;
  std::ostringstream sum;
  sum << "chsh-scan: " << grid.size() << " points, S in [" << format_number(s_min) << ", "
      << format_number(s_max) << "]";
  if (crossing > 0.0) sum << ", S = 2 near eta_tilde_L = " << format_number(crossing);
  res.summary = sum.str();
  return res;
}

CommandResult cmd_threshold(const RunConfig& config) {
  RunConfig cfg = config;
  double lo = 0.85, hi = 0.93;
  if (!cfg.scan.variable.empty()) {
    if (cfg.scan.variable != "eta_L")
      throw ConfigError("threshold bisects eta_L; got scan.variable = " + cfg.scan.variable);
    lo = cfg.scan.min;
    hi = cfg.scan.max;
  }
  const double eta_td = cfg.scenario.eta_tilde_D;
  if (!(lo < hi) || hi > eta_td + 1e-12)
    throw ConfigError("threshold bracket must satisfy lo < hi <= eta_tilde_D");

  std::vector<Eigen::VectorXd> warm;
  json trace = json::array();
  const auto rate_at = [&](double eta_l) {
    photonics::SetupParams p = cfg.scenario;
    p.eta_tilde_L = std::min(1.0, eta_l / eta_td);
    photonics::HeraldedState hs{photonics::analytic_heralded_density(0.0, p.eta_tilde_L),
                                1.0};
    const auto rep = protocol::optimize_protocol(hs, p, search_spec(cfg), warm);
    warm = {protocol::pack_protocol(rep.settings, rep.q_n)};
    trace.push_back(json{{"eta_L", eta_l}, {"r_inf", rep.r_inf}, {"S", rep.S}});
    return rep;
  };

  const auto low_rep = rate_at(lo);
  const auto high_rep = rate_at(hi);
  if (low_rep.r_inf > 0.0 || high_rep.r_inf <= 0.0)
    throw InfeasibleError("threshold bracket failure: rate sign does not change over [" +
                          format_number(lo) + ", " + format_number(hi) + "]");

  auto best_positive = high_rep;
  double best_positive_eta = hi;
  while (hi - lo > 0.002) {
    const double mid = (lo + hi) / 2.0;
    const auto rep = rate_at(mid);
    if (rep.r_inf > 0.0) {
      hi = mid;
      best_positive = rep;
      best_positive_eta = mid;
    } else {
      lo = mid;
    }
  }

  const double threshold = (lo + hi) / 2.0;
  json report{{"command", "threshold"},
              {"eta_L_threshold", threshold},
              {"eta_tilde_L_threshold", threshold / eta_td},
              {"S_at_threshold", best_positive.S},
              {"r_inf_at_first_positive", best_positive.r_inf},
              {"first_positive_eta_L", best_positive_eta},
              {"q_n", best_positive.q_n},
              {"settings", settings_json(best_positive.settings)},
              {"bisection", trace},
              {"tolerance", 0.002},
              {"scenario", scenario_json(cfg.scenario)},
              {"seed", cfg.seed},
              {"optimizer", json{{"n_starts", cfg.optimizer.n_starts},
                                 {"max_evals", cfg.optimizer.max_evals}}}};

  CommandResult res;
  res.payload = report.dump(2) + "\n";
  res.summary = "threshold: eta_L = " + format_number(threshold) +
                " (S at first positive point " + format_number(best_positive.S) + ")";
  return res;
}

CommandResult cmd_rate_vs_distance(const RunConfig& config) {
  RunConfig cfg = config;
  if (cfg.scan.variable.empty()) cfg.scan = ScanSpec{"L", 0.0, 450.0, 46};
  if (cfg.scan.variable != "L")
    throw ConfigError("rate-vs-distance scans L; got scan.variable = " + cfg.scan.variable);
  if (cfg.n_list.empty() && !cfg.asymptotic) cfg.asymptotic = true;
  const auto grid = scan_grid(cfg.scan);

  const auto stats_rep = scenario_stats(cfg);
  const finitekey::KeyStats stats{stats_rep.S, stats_rep.p_key};

  // Bits per heralded round for each requested block; the asymptotic block
  // uses n = infinity.
  struct Block {
    double n;  // infinity encoded as 0
    double r;
  };
  std::vector<Block> blocks;
  if (cfg.asymptotic) blocks.push_back({0.0, std::max(stats_rep.r_inf, 0.0)});
  for (const double n : cfg.n_list) {
    if (n < 1.0) throw ConfigError("n must be >= 1");
    double ell;
    if (cfg.finite.pinned) {
      finitekey::FiniteSizeParams p;
      p.n = n;
      p.gamma = cfg.finite.gamma;
      p.t = cfg.finite.t;
      p.alpha_p = cfg.finite.alpha_p;
      p.alpha_pp = cfg.finite.alpha_pp;
      p.q_n = cfg.finite.q_n;
      p.epsilons = cfg.epsilons;
      p.k = cfg.completeness_k;
      ell = finitekey::key_length(stats.S, stats.H(p.q_n), p).ell;
    } else {
      ell = finitekey::optimize_finite(stats, n, cfg.epsilons, search_spec(cfg)).ell;
    }
    blocks.push_back({n, std::max(ell, 0.0) / n});
  }

  std::string csv = "L_km,n,R_bits_per_s,scheme\n";
  for (const auto& block : blocks) {
    const std::string n_text = block.n == 0.0 ? "inf" : format_number(block.n);
    for (const char* scheme : {"single_photon", "two_photon_scaling"}) {
      const bool two = scheme[0] == 't';
      for (const double l : grid) {
        photonics::SetupParams p = cfg.scenario;
        p.L = l;
        const double ph = two ? photonics::heralding_probability_twophoton(p)
                              : photonics::heralding_probability(p);
        const double rate = ph * p.nu * block.r;
        csv += format_number(l) + ',' + n_text + ',' + format_number(rate) + ',' + scheme +
               '\n';
      }
    }
  }

  CommandResult res;
  res.payload = csv;
  std::ostringstream sum;
  sum << "rate-vs-distance: r_inf = " << format_number(stats_rep.r_inf) << " (S = "
      << format_number(stats_rep.S) << ")";
  if (cfg.asymptotic && blocks.front().r > 0.0) {
    const double r0 = photonics::heralding_probability(cfg.scenario) *
                      std::pow(10.0, cfg.scenario.alpha_att * cfg.scenario.L / 20.0) *
                      cfg.scenario.nu * blocks.front().r;
    sum << ", asymptotic R = 0.1 bit/s at L = "
        << format_number(20.0 / cfg.scenario.alpha_att * std::log10(r0 / 0.1)) << " km";
  }
  res.summary = sum.str();
  return res;
}

CommandResult cmd_t_scan(const RunConfig& config) {
  RunConfig cfg = config;
  if (cfg.t_list.empty()) cfg.t_list = {0.001, 0.005, 0.02, 0.05};
  if (cfg.scan.variable.empty()) cfg.scan = ScanSpec{"eta_L", 0.80, 1.0, 21};
  if (cfg.scan.variable != "eta_L")
    throw ConfigError("t-scan scans eta_L; got scan.variable = " + cfg.scan.variable);
  const auto grid = scan_grid(cfg.scan);
  const double eta_td = cfg.scenario.eta_tilde_D;
  if (grid.back() > eta_td + 1e-12)
    throw ConfigError("eta_L cannot exceed eta_tilde_D");

  std::string csv = "T,eta_L,r_inf\n";
  for (const double t_bs : cfg.t_list) {
    if (!(t_bs > 0.0 && t_bs < 1.0)) throw ConfigError("t_list entries must lie in (0, 1)");
    std::vector<Eigen::VectorXd> warm;
    for (const double eta_l : grid) {
      photonics::SetupParams p = cfg.scenario;
      p.T = t_bs;
      p.eta_tilde_L = eta_l / eta_td;
      photonics::HeraldedState hs{photonics::analytic_heralded_density(t_bs, p.eta_tilde_L),
                                  1.0};
      const auto rep = protocol::optimize_protocol(hs, p, search_spec(cfg), warm);
      warm = {protocol::pack_protocol(rep.settings, rep.q_n)};
      csv += format_number(t_bs) + ',' + format_number(eta_l) + ',' +
             format_number(rep.r_inf) + '\n';
    }
  }

  CommandResult res;
  res.payload = csv;
  res.summary = "t-scan: " + std::to_string(cfg.t_list.size()) + " transmittance values x " +
                std::to_string(grid.size()) + " efficiencies";
  return res;
}

CommandResult cmd_finite_keylen(const RunConfig& config) {
  if (config.n_list.empty()) throw ConfigError("finite-keylen requires n");
  const double n = config.n_list.front();
  if (n < 1.0) throw ConfigError("n must be >= 1");

  const auto stats_rep = scenario_stats(config);
  const finitekey::KeyStats stats{stats_rep.S, stats_rep.p_key};

  finitekey::FiniteSizeParams params;
  finitekey::KeyLengthResult kl;
  if (config.finite.pinned) {
    params.n = n;
    params.gamma = config.finite.gamma;
    params.t = config.finite.t;
    params.alpha_p = config.finite.alpha_p;
    params.alpha_pp = config.finite.alpha_pp;
    params.q_n = config.finite.q_n;
    params.epsilons = config.epsilons;
    params.k = config.completeness_k;
    kl = finitekey::key_length(stats.S, stats.H(params.q_n), params);
  } else {
    auto opt = finitekey::optimize_finite(stats, n, config.epsilons, search_spec(config));
    params = opt.params;
    params.k = config.completeness_k;
    kl = finitekey::key_length(stats.S, stats.H(params.q_n), params);
  }

  const double rate = finitekey::finite_rate_per_second(kl.l_raw > 0.0 ? kl.ell : 0.0, n,
                                                        config.scenario);
  json report{
      {"command", "finite-keylen"},
      {"n", n},
      {"ell", kl.ell},
      {"l_raw", kl.l_raw},
      {"ell_per_n", kl.l_raw > 0.0 ? kl.ell / n : 0.0},
      {"rate_bits_per_s", rate},
      {"soundness", kl.soundness},
      {"completeness_target", 0.01},
      {"params",
       json{{"gamma", params.gamma},
            {"t", params.t},
            {"alpha_p", params.alpha_p},
            {"alpha_pp", params.alpha_pp},
            {"q_n", params.q_n},
            {"k", params.k}}},
      {"stats",
       json{{"S", stats.S},
            {"H_A1_B3", stats.H(params.q_n)},
            {"r_inf", stats_rep.r_inf},
            {"p_key", stats.p_key}}},
      {"constants",
       json{{"flat_cost_bits", finitekey::kFlatCost},
            {"syndrome_slack", finitekey::kSyndromeSlack},
            {"log_base", 2}}},
      {"epsilons", epsilons_json(config.epsilons)},
      {"scenario", scenario_json(config.scenario)},
      {"settings", settings_json(stats_rep.settings)},
      {"seed", config.seed},
      {"optimizer",
       json{{"n_starts", config.optimizer.n_starts}, {"max_evals", config.optimizer.max_evals}}}};

  CommandResult res;
  res.payload = report.dump(2) + "\n";
  std::ostringstream sum;
  sum << "finite-keylen: n = " << format_number(n) << ", ell = " << format_number(kl.ell)
      << " bits (soundness " << format_number(kl.soundness) << ")";
  res.summary = sum.str();
  return res;
}

int run_command(const std::string& name, const RunConfig& config) {
  try {
    CommandResult result;
    if (name == "chsh-scan")
      result = cmd_chsh_scan(config);
    else if (name == "threshold")
      result = cmd_threshold(config);
    else if (name == "rate-vs-distance")
      result = cmd_rate_vs_distance(config);
    else if (name == "t-scan")
      result = cmd_t_scan(config);
    else if (name == "finite-keylen")
      result = cmd_finite_keylen(config);
    else
      throw ConfigError("unknown command: " + name);

    if (!config.output.path.empty()) {
      std::ofstream out(config.output.path, std::ios::binary);
      if (!out) throw ConfigError("cannot write output file: " + config.output.path);
      out << result.payload;
    } else {
      std::fputs(result.payload.c_str(), stdout);
    }
    std::fprintf(stdout, "%s\n", result.summary.c_str());
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const InfeasibleError& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }
}

}  // namespace diqkd::app
