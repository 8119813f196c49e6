#pragma once

// Physical layer of the scheme: two heralded single-photon sources, an
// unbalanced beamsplitter of transmittance T on each side, symmetric lossy
// channels to a central station (50/50 beamsplitter + detectors of
// efficiency eta_D), and local channels of efficiency eta_tilde_L on the
// kept modes. Provides both the closed-form heralded state (leading order
// in T) and a full 4-mode Fock-space simulation that serves as its oracle.

#include "diqkd/fock.hpp"

namespace diqkd::photonics {

struct SetupParams {
  double T = 0.005;           // source beamsplitter transmittance
  double L = 0.0;             // Alice-Bob distance, km
  double alpha_att = 0.2;     // fiber attenuation, dB/km
  double eta_D = 1.0;         // heralding detector efficiency
  double eta_tilde_L = 0.9 / 0.95;  // local channel efficiency
  double eta_tilde_D = 0.95;  // local detector efficiency
  double nu = 5e6;            // source rate, Hz

  void validate() const;
  double eta_C() const;  // end-to-end channel efficiency at distance L
  double eta_H() const;  // eta_D * sqrt(eta_C): per-arm heralding efficiency
};

struct HeraldedState {
  fock::DensityOperator state;  // modes {A, B}, one qubit each
  double herald_prob = 0.0;
};

// 10^(-alpha_att L / 10)
double channel_efficiency(double L_km, double alpha_att);

// P_H = T eta_D sqrt(eta_C); single-photon (path) heralding.
double heralding_probability(const SetupParams& params);
// T^2 eta_D^2 eta_C; the two-photon-interference scaling, kept only as a
// comparison curve.
double heralding_probability_twophoton(const SetupParams& params);

// Post-herald two-qubit state after local loss, exact in eta_tilde_L and
// first order in T eta_H. Valid for T in [0, 1); T = 0 gives the pure
// path-entangled limit mixed only by local loss.
fock::DensityOperator analytic_heralded_density(double T, double eta_tilde_L);

HeraldedState heralded_state_analytic(const SetupParams& params);

// Full numerical herald: 4 modes at `chain_cutoff` photons, losses as
// beamsplitters, central-station projection onto exactly-one-detector
// outcomes with 1/(2n) weights, conditional phase correction folding both
// click classes onto the same target state, then local loss and reduction
// to the qubit pair. No truncation in T.
HeraldedState heralded_state_oracle(const SetupParams& params, int chain_cutoff = 3);

}  // namespace diqkd::photonics
