#include "diqkd/photonics.hpp"

#include <cmath>
#include <stdexcept>

namespace diqkd::photonics {

void SetupParams::validate() const {
  if (!(T > 0.0 && T < 1.0)) throw std::invalid_argument("SetupParams: T outside (0, 1)");
  if (L < 0.0) throw std::invalid_argument("SetupParams: negative distance");
  if (alpha_att < 0.0) throw std::invalid_argument("SetupParams: negative attenuation");
  for (double eta : {eta_D, eta_tilde_L, eta_tilde_D})
    if (eta < 0.0 || eta > 1.0)
      throw std::invalid_argument("SetupParams: efficiency outside [0, 1]");
  if (!(nu > 0.0)) throw std::invalid_argument("SetupParams: source rate must be positive");
}

double SetupParams::eta_C() const { return channel_efficiency(L, alpha_att); }
double SetupParams::eta_H() const { return eta_D * std::sqrt(eta_C()); }

double channel_efficiency(double L_km, double alpha_att) {
  if (L_km < 0.0) throw std::invalid_argument("channel_efficiency: negative distance");
  return std::pow(10.0, -alpha_att * L_km / 10.0);
}

double heralding_probability(const SetupParams& params) {
  return params.T * params.eta_D * std::sqrt(channel_efficiency(params.L, params.alpha_att));
}

double heralding_probability_twophoton(const SetupParams& params) {
  return params.T * params.T * params.eta_D * params.eta_D *
         channel_efficiency(params.L, params.alpha_att);
}

fock::DensityOperator analytic_heralded_density(double T, double eta_tilde_L) {
  if (T < 0.0 || T >= 1.0)
    throw std::invalid_argument("analytic_heralded_density: T outside [0, 1)");
  if (eta_tilde_L < 0.0 || eta_tilde_L > 1.0)
    throw std::invalid_argument("analytic_heralded_density: eta_tilde_L outside [0, 1]");

  // Basis |n_A n_B>, index 2 n_A + n_B. Entangled block weight
  // eta_tilde_L (1-T) split evenly with full coherence; everything else is
  // vacuum.
  fock::DensityOperator rho;
  rho.modes = {"A", "B"};
  rho.dims = {2, 2};
  rho.matrix = fock::Matrix::Zero(4, 4);
  const double w = 0.5 * eta_tilde_L * (1.0 - T);
  rho.matrix(1, 1) = w;
  rho.matrix(1, 2) = w;
  rho.matrix(2, 1) = w;
  rho.matrix(2, 2) = w;
  rho.matrix(0, 0) = 1.0 - eta_tilde_L + T * eta_tilde_L;
  return rho;
}

HeraldedState heralded_state_analytic(const SetupParams& params) {
  params.validate();
  return HeraldedState{analytic_heralded_density(params.T, params.eta_tilde_L),
                       heralding_probability(params)};
}

HeraldedState heralded_state_oracle(const SetupParams& params, int chain_cutoff) {
  params.validate();
  if (chain_cutoff < 2)
    throw std::invalid_argument("heralded_state_oracle: chain cutoff must be >= 2");
  const int d = chain_cutoff + 1;
  const double eta_h = params.eta_H();

  // |1>_A |1>_B |0>_C1 |0>_C2
  fock::Vector psi = fock::Vector::Zero(d * d * d * d);
  psi((d + 1) * d * d) = 1.0;  // n_A = n_B = 1
  fock::DensityOperator rho =
      fock::pure_state(psi, {"A", "B", "C1", "C2"}, {d, d, d, d});

  rho = fock::beamsplitter(rho, "A", "C1", params.T);
  rho = fock::beamsplitter(rho, "B", "C2", params.T);
  rho = fock::loss_channel(rho, "C1", eta_h);
  rho = fock::loss_channel(rho, "C2", eta_h);
  rho = fock::beamsplitter(rho, "C1", "C2", 0.5);

  // Exactly-one-detector outcomes, weighted 1/(2n). The two click classes
  // herald states that differ by a local pi phase on one arm; the parity
  // phase on A folds them onto the same target state.
  fock::DensityOperator herald;
  herald.modes = {"A", "B"};
  herald.dims = {d, d};
  herald.matrix = fock::Matrix::Zero(d * d, d * d);
  for (int n = 1; n <= chain_cutoff; ++n) {
    const double weight = 1.0 / (2.0 * n);
    auto m_n0 = fock::project_mode_levels(rho, {{"C1", n}, {"C2", 0}});
    auto m_0n = fock::project_mode_levels(rho, {{"C1", 0}, {"C2", n}});
    m_n0 = fock::apply_parity_phase(m_n0, "A");
    herald.matrix += weight * (m_n0.matrix + m_0n.matrix);
  }

  const double p_h = herald.trace();
  HeraldedState out;
  out.herald_prob = p_h;
  if (p_h <= 0.0) {
    out.state = fock::vacuum_state({"A", "B"}, {2, 2});
    out.herald_prob = 0.0;
    return out;
  }

  herald = fock::loss_channel(herald, "A", params.eta_tilde_L);
  herald = fock::loss_channel(herald, "B", params.eta_tilde_L);
  herald.matrix /= p_h;

  double discarded = 0.0;
  fock::DensityOperator qubits = fock::truncate_modes(herald, 1, &discarded);
  if (std::abs(discarded) > 1e-9)
    throw std::runtime_error("heralded_state_oracle: support leaked above one photon");
  out.state = std::move(qubits);
  return out;
}

}  // namespace diqkd::photonics
