#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "diqkd_app/app.hpp"

using namespace diqkd;
using nlohmann::json;

namespace {

app::RunConfig tiny_config(const std::string& extra = "") {
  std::string text = R"({
    "scenario": {"T": 0.005, "eta_tilde_D": 0.95, "eta_tilde_L": 0.9473684210526316},
    "optimizer": {"n_starts": 4, "max_evals": 800},
    "seed": 7)";
  if (!extra.empty()) text += "," + extra;
  text += "}";
  return app::parse_config_text(text);
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("number formatting") {
  CHECK(app::format_number(0.1) == "0.1");
  CHECK(app::format_number(2500.0) == "2500");
  CHECK(app::format_number(1.0 / 3.0) == "0.333333333333");
  CHECK(app::format_number(1e-7) == "1e-07");
}

TEST_CASE("config parsing") {
  SUBCASE("defaults and overrides") {
    const auto cfg = tiny_config();
    CHECK(cfg.scenario.T == 0.005);
    CHECK(cfg.scenario.eta_tilde_D == 0.95);
    CHECK(cfg.seed == 7);
    CHECK(cfg.optimizer.n_starts == 4);
    CHECK(cfg.epsilons.eps_s == 1e-6);
  }

  SUBCASE("unknown keys are errors") {
    CHECK_THROWS_AS(app::parse_config_text(R"({"scenario": {"TT": 0.1}})"),
                    app::ConfigError);
    CHECK_THROWS_AS(app::parse_config_text(R"({"bogus": 1})"), app::ConfigError);
  }

  SUBCASE("invalid JSON is a config error") {
    CHECK_THROWS_AS(app::parse_config_text("{"), app::ConfigError);
  }

  SUBCASE("epsilon constraint enforced") {
    CHECK_THROWS_AS(
        app::parse_config_text(R"({"epsilons": {"eps_s": 1e-7, "eps_s_p": 3e-7}})"),
        app::ConfigError);
  }

  SUBCASE("partial finite pins are rejected") {
    CHECK_THROWS_AS(app::parse_config_text(R"({"finite": {"gamma": 0.01}})"),
                    app::ConfigError);
    const auto cfg = app::parse_config_text(
        R"({"finite": {"gamma": 0.01, "t": 0.8, "alpha_p": 1.001, "alpha_pp": 1.001,
            "q_n": 0.0}})");
    CHECK(cfg.finite.pinned);
  }

  SUBCASE("scenario validation surfaces as config error") {
    CHECK_THROWS_AS(app::parse_config_text(R"({"scenario": {"eta_D": 1.5}})"),
                    app::ConfigError);
  }
}

TEST_CASE("chsh-scan output") {
  auto cfg = tiny_config(R"("scan": {"variable": "eta_tilde_L", "min": 0.9, "max": 1.0,
                           "steps": 3})");
  const auto res = app::cmd_chsh_scan(cfg);
  const auto lines = lines_of(res.payload);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] ==
        "eta_tilde_L,S,xi_amp_a1,xi_phase_a1,alpha_amp_a1,alpha_phase_a1,"
        "xi_amp_a2,xi_phase_a2,alpha_amp_a2,alpha_phase_a2,"
        "xi_amp_b1,xi_phase_b1,alpha_amp_b1,alpha_phase_b1,"
        "xi_amp_b2,xi_phase_b2,alpha_amp_b2,alpha_phase_b2,"
        "xi_amp_b3,xi_phase_b3,alpha_amp_b3,alpha_phase_b3");
  CHECK(lines[1].substr(0, 4) == "0.9,");

  SUBCASE("byte-identical across runs") {
    const auto again = app::cmd_chsh_scan(cfg);
    CHECK(again.payload == res.payload);
  }

  SUBCASE("wrong axis rejected") {
    cfg.scan.variable = "L";
    CHECK_THROWS_AS(app::cmd_chsh_scan(cfg), app::ConfigError);
  }
}

TEST_CASE("rate-vs-distance output") {
  auto cfg = tiny_config(
      R"("scan": {"variable": "L", "min": 0, "max": 200, "steps": 3}, "asymptotic": true)");
  const auto res = app::cmd_rate_vs_distance(cfg);
  const auto lines = lines_of(res.payload);
  REQUIRE(lines.size() == 1 + 2 * 3);  // header + 2 schemes x 3 distances
  CHECK(lines[0] == "L_km,n,R_bits_per_s,scheme");
  CHECK(lines[1].find(",inf,") != std::string::npos);
  CHECK(lines[1].find("single_photon") != std::string::npos);
  CHECK(lines[4].find("two_photon_scaling") != std::string::npos);

  SUBCASE("100 km costs one decade (single photon) or two (comparison)") {
    const auto cell = [&](int line, int col) {
      std::stringstream ss(lines[line]);
      std::string item;
      for (int c = 0; c <= col; ++c) std::getline(ss, item, ',');
      return std::stod(item);
    };
    const double r0 = cell(1, 2), r100 = cell(2, 2);
    const double t0 = cell(4, 2), t100 = cell(5, 2);
    if (r0 > 0.0) CHECK(r100 / r0 == doctest::Approx(0.1).epsilon(1e-9));
    if (t0 > 0.0) CHECK(t100 / t0 == doctest::Approx(0.01).epsilon(1e-9));
  }
}

TEST_CASE("finite-keylen report") {
  auto cfg = tiny_config(R"("n": 1e10)");
  const auto res = app::cmd_finite_keylen(cfg);
  const json report = json::parse(res.payload);
  CHECK(report["command"] == "finite-keylen");
  CHECK(report["n"].get<double>() == 1e10);
  CHECK(report["soundness"].get<double>() == doctest::Approx(3e-6).epsilon(1e-3));
  CHECK(report["completeness_target"].get<double>() == 0.01);
  CHECK(report.contains("ell"));
  CHECK(report.contains("params"));
  CHECK(report["epsilons"]["eps_s"].get<double>() == 1e-6);
  CHECK(report["scenario"]["T"].get<double>() == 0.005);

  SUBCASE("n is required") {
    app::RunConfig bare = tiny_config();
    CHECK_THROWS_AS(app::cmd_finite_keylen(bare), app::ConfigError);
  }
}

TEST_CASE("threshold bracket failure is infeasible, not a crash") {
  auto cfg = tiny_config(R"("scan": {"variable": "eta_L", "min": 0.70, "max": 0.75})");
  cfg.optimizer.n_starts = 3;
  cfg.optimizer.max_evals = 600;
  // Both bracket ends sit far below the key threshold, so the rate never
  // changes sign.
  CHECK_THROWS_AS(app::cmd_threshold(cfg), app::InfeasibleError);
}

TEST_CASE("t-scan output") {
  auto cfg = tiny_config(
      R"("scan": {"variable": "eta_L", "min": 0.92, "max": 0.95, "steps": 2},
         "t_list": [0.005, 0.05])");
  cfg.optimizer.n_starts = 6;
  cfg.optimizer.max_evals = 2000;
  const auto res = app::cmd_t_scan(cfg);
  const auto lines = lines_of(res.payload);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "T,eta_L,r_inf");
  CHECK(lines[1].substr(0, 6) == "0.005,");

  SUBCASE("larger source transmittance degrades the rate at fixed efficiency") {
    const auto rate = [&](int line) {
      const auto cells = lines_of(lines[line]);
      std::stringstream ss(lines[line]);
      std::string cell;
      std::getline(ss, cell, ',');
      std::getline(ss, cell, ',');
      std::getline(ss, cell, ',');
      return std::stod(cell);
    };
    CHECK(rate(1) >= rate(3));  // eta_L = 0.92: T = 0.005 vs T = 0.05
    CHECK(rate(2) >= rate(4));  // eta_L = 0.95
  }
}

TEST_CASE("binary entry point") {
  const std::string bin = DIQKD_BIN;
  const std::string dir = "/tmp/diqkd_cli_test";
  REQUIRE(std::system(("mkdir -p " + dir).c_str()) == 0);

  SUBCASE("bad config exits with code 2") {
    std::ofstream bad(dir + "/bad.json");
    bad << R"({"nonsense": true})";
    bad.close();
    const int rc =
        std::system((bin + " chsh-scan --config " + dir + "/bad.json >/dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(rc) == 2);
  }

  SUBCASE("missing subcommand exits with code 2") {
    const int rc = std::system((bin + " >/dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(rc) == 2);
  }

  SUBCASE("same seed gives identical output files") {
    std::ofstream conf(dir + "/conf.json");
    conf << R"({"scenario": {"eta_tilde_D": 0.95},
                "optimizer": {"n_starts": 3, "max_evals": 500},
                "scan": {"variable": "eta_tilde_L", "min": 0.95, "max": 1.0, "steps": 2},
                "seed": 11})";
    conf.close();
    const std::string cmd = bin + " chsh-scan --config " + dir + "/conf.json --out ";
    CHECK(WEXITSTATUS(std::system((cmd + dir + "/a.csv >/dev/null").c_str())) == 0);
    CHECK(WEXITSTATUS(std::system((cmd + dir + "/b.csv >/dev/null").c_str())) == 0);
    const int rc = std::system(("cmp -s " + dir + "/a.csv " + dir + "/b.csv").c_str());
    CHECK(WEXITSTATUS(rc) == 0);
    std::ifstream a(dir + "/a.csv");
    std::string header;
    std::getline(a, header);
    CHECK(header.substr(0, 13) == "eta_tilde_L,S");
  }
}
