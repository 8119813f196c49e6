#pragma once

// Binary squeezed-displaced photodetection measurements: a displacement
// D(alpha) followed by a squeezer S(xi) and a click/no-click detector of
// efficiency eta_tilde_D. The canonical construction is numerical (matrix
// exponentials of the fock module); qubit_povm uses an equivalent fast
// vector path that is cross-checked against it in the tests.
//
// Labeling convention: at eta_tilde_D = 1 the click element is the conjugated
// vacuum projector S D |0><0| D^dag S^dag; for eta_tilde_D < 1 the no-click
// element is the conjugated thermal-like operator (1-eta_tilde_D)^n and click
// is its complement. Outcome labels carry no physics; protocol-level sign
// bits absorb the relabeling freedom.

#include <Eigen/Dense>

#include "diqkd/fock.hpp"
#include "diqkd/optimize.hpp"

namespace diqkd::measurements {

// 4.08 dB of squeezing; dB = 20 |xi| log10(e).
inline const double kXiCap = 4.08 * std::log(10.0) / 20.0;
inline constexpr double kAlphaCap = 0.9;
inline constexpr int kDefaultCutoff = 20;

struct MeasurementSetting {
  double xi_amp = 0.0;
  double xi_phase = 0.0;
  double alpha_amp = 0.0;
  double alpha_phase = 0.0;
  double eta_tilde_D = 1.0;
};

struct QubitPOVM {
  Eigen::Matrix2cd pi_click;
  Eigen::Matrix2cd pi_noclick;
};

// Unit Bloch vector given by spherical angles; |n> = cos(t/2)|0> + e^{i p} sin(t/2)|1>.
struct BlochDirection {
  double theta = 0.0;
  double phi = 0.0;

  Eigen::Matrix2cd sigma() const;
};

// Full-space click element at the given truncation (dense, canonical).
fock::Matrix povm_click_full(const MeasurementSetting& setting, fock::FockDim dim);

// Top-left 2x2 block of the click element and its complement in the qubit
// identity. Fast path; agrees with povm_click_full to machine precision.
QubitPOVM qubit_povm(const MeasurementSetting& setting, int cutoff = kDefaultCutoff);

// w_i = (S D)^dag e_i for i = 0, 1: the two rows of S D needed for the qubit
// block. Exposed for the protocol hot loop and for tests.
void squeezed_displaced_rows(const MeasurementSetting& setting, int cutoff,
                             Eigen::VectorXcd& w0, Eigen::VectorXcd& w1);

// Ideal projective measurement along a Bloch direction: pi_click = |n><n|.
QubitPOVM pauli_povm(const BlochDirection& direction);

// mu = (1/2) Tr((pi_click - pi_noclick) sigma_n). The 1/2 normalizes a
// perfect Pauli measurement to mu = 1. Signed; |mu| <= 1.
double projective_part(const QubitPOVM& povm, const BlochDirection& direction);

struct MuResult {
  double mu_max = 0.0;
  MeasurementSetting best;
};

// max over (xi, alpha) within the amplitude caps of the projective part
// along `direction`, at fixed detector efficiency.
MuResult optimize_mu(const BlochDirection& direction, double eta_tilde_D,
                     const optimizer::SearchSpec& spec, double xi_cap = kXiCap,
                     double alpha_cap = kAlphaCap);

// Heisenberg-picture local loss on a POVM element:
// Tr(rho Lambda^dag(Pi)) = Tr(Lambda(rho) Pi).
fock::Matrix apply_local_loss_to_povm(const fock::Matrix& povm_element, double eta_tilde_L);

}  // namespace diqkd::measurements
