#pragma once

// CHSH protocol layer: Born-rule statistics of the heralded state under the
// squeezed-displaced measurements, CHSH scores, the conditional entropy of
// the key rounds under noisy preprocessing, the asymptotic rate bound, and
// the joint optimization of all measurement settings.
//
// Alice measures x in {1, 2}; Bob measures y in {1, 2, 3}. Key rounds are
// (x, y) = (1, 3); CHSH uses the 2x2 block. Every setting carries a sign bit
// that relabels its outcomes.

#include <array>

#include "diqkd/fock.hpp"
#include "diqkd/measurements.hpp"
#include "diqkd/optimize.hpp"
#include "diqkd/photonics.hpp"

namespace diqkd::protocol {

inline const double kTsirelson = 2.0 * std::sqrt(2.0);

struct ProtocolSettings {
  std::array<measurements::MeasurementSetting, 2> alice;
  std::array<measurements::MeasurementSetting, 3> bob;
  std::array<int, 2> alice_sign{1, 1};
  std::array<int, 3> bob_sign{1, 1, 1};
};

// Joint outcome distribution over {+1, -1}^2; index 0 is the click outcome
// before sign relabeling.
struct JointDistribution {
  std::array<std::array<double, 2>, 2> p{};

  double correlator(int sign_a = 1, int sign_b = 1) const {
    return sign_a * sign_b * (p[0][0] - p[0][1] - p[1][0] + p[1][1]);
  }
  double total() const { return p[0][0] + p[0][1] + p[1][0] + p[1][1]; }
};

// p(a, b) = Tr(rho Pi_a x Pi_b) for a two-qubit state over modes {A, B}.
JointDistribution outcome_distribution(const fock::DensityOperator& state,
                                       const measurements::QubitPOVM& alice,
                                       const measurements::QubitPOVM& bob);

// S = <A1 B1> + <A1 B2> + <A2 B1> - <A2 B2> with the stored sign bits.
double chsh_score(const fock::DensityOperator& state, const ProtocolSettings& settings,
                  int cutoff = measurements::kDefaultCutoff);
double chsh_score(const fock::DensityOperator& state,
                  const std::array<measurements::QubitPOVM, 2>& alice,
                  const std::array<measurements::QubitPOVM, 2>& bob,
                  const std::array<int, 2>& alice_sign = {1, 1},
                  const std::array<int, 2>& bob_sign = {1, 1});

// H(A|B) in bits after Alice flips her outcome with probability q_n.
double conditional_entropy_bits(const JointDistribution& joint, double q_n);
double conditional_entropy_key(const fock::DensityOperator& state,
                               const measurements::MeasurementSetting& a1,
                               const measurements::MeasurementSetting& b3, double q_n,
                               int cutoff = measurements::kDefaultCutoff);

// Devetak-Winter lower bound with noisy preprocessing, in bits per herald:
//   1 - h((1+sqrt((S/2)^2-1))/2) - H + h((1+sqrt(1-q_n(1-q_n)(8-S^2)))/2).
// For S < 2 the Bell term is vacuous and the bound degenerates to -H.
// Throws for S beyond the Tsirelson bound (plus numerical slack).
double asymptotic_rate(double S, double H_A1_B3, double q_n);

// R = P_H nu r, bits per second.
double rate_per_second(double r, const photonics::SetupParams& params);

struct KeyRateReport {
  double S = 0.0;
  double H_A1_B3 = 0.0;
  double q_n = 0.0;
  double r_inf = 0.0;  // raw bound; may be negative
  double R_inf = 0.0;  // P_H nu max(r_inf, 0)
  std::array<double, 4> p_key{};  // joint (A1, B3) distribution, row-major
  ProtocolSettings settings;
};

struct ChshReport {
  double S = 0.0;
  ProtocolSettings settings;  // bob[2] tuned for key correlation with alice[0]
};

// Jointly optimizes the five measurement settings and q_n for the asymptotic
// rate. Sign bits are maximized exactly inside each evaluation.
KeyRateReport optimize_protocol(const photonics::HeraldedState& heralded,
                                const photonics::SetupParams& params,
                                const optimizer::SearchSpec& spec,
                                const std::vector<Eigen::VectorXd>& warm_starts = {},
                                double xi_cap = measurements::kXiCap);

// Maximizes the CHSH score alone (four settings).
ChshReport optimize_chsh(const fock::DensityOperator& state, double eta_tilde_D,
                         const optimizer::SearchSpec& spec,
                         const std::vector<Eigen::VectorXd>& warm_starts = {},
                         double xi_cap = measurements::kXiCap);

// Flat parameter vectors used by the optimizers, for warm starting scans.
Eigen::VectorXd pack_protocol(const ProtocolSettings& settings, double q_n);
Eigen::VectorXd pack_chsh(const ProtocolSettings& settings);

}  // namespace diqkd::protocol
