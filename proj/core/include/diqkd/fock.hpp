#pragma once

// Truncated Fock-space linear algebra for a small number of bosonic modes:
// ladder operators, Gaussian unitaries built as matrix exponentials, loss
// channels, beamsplitters, tensor products and partial traces. States are
// dense complex matrices over named modes; the first mode is the most
// significant index (kron order).

#include <complex>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace diqkd::fock {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Dimension of a single truncated mode: photon numbers 0..cutoff.
struct FockDim {
  int cutoff = 20;

  explicit FockDim(int cutoff_photons) : cutoff(cutoff_photons) {
    if (cutoff < 1) throw std::invalid_argument("FockDim: cutoff must be >= 1");
  }
  int dim() const { return cutoff + 1; }
};

// Tolerances for density-operator sanity checks. Violations are surfaced
// through Diagnostics, never repaired in place.
inline constexpr double kHermTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kPsdFloor = -1e-9;

struct Diagnostics {
  double hermiticity_defect = 0.0;  // max |M - M^dag|
  double trace = 0.0;
  double min_eigenvalue = 0.0;

  bool ok(bool expect_normalized = true) const {
    bool good = hermiticity_defect <= kHermTol && min_eigenvalue >= kPsdFloor;
    if (expect_normalized) good = good && std::abs(trace - 1.0) <= kTraceTol;
    return good;
  }
};

// Operator acting on one or more named modes.
struct ModeOperator {
  Matrix matrix;
  std::vector<std::string> modes;
  std::vector<int> dims;

  int dim() const { return static_cast<int>(matrix.rows()); }
};

// Density matrix over named modes. May be unnormalized, in which case the
// trace carries the weight (e.g. a heralding probability).
struct DensityOperator {
  Matrix matrix;
  std::vector<std::string> modes;
  std::vector<int> dims;

  int dim() const { return static_cast<int>(matrix.rows()); }
  double trace() const { return matrix.trace().real(); }
  int mode_index(const std::string& mode) const;

  Diagnostics diagnostics() const;
  // Throws std::runtime_error when the invariants are violated.
  void check_valid(bool expect_normalized = true) const;
};

// --- single-mode operators ---------------------------------------------

// A[n-1, n] = sqrt(n); the usual truncated ladder operator.
Matrix annihilation_matrix(FockDim dim);
ModeOperator annihilation(FockDim dim, const std::string& mode = "a");
Matrix number_operator(FockDim dim);

// exp(G) for a skew-Hermitian generator G, via eigendecomposition of iG.
Matrix unitary_from_generator(const Matrix& generator);
// max |U^dag U - I|; truncation quality diagnostic.
double unitarity_defect(const Matrix& u);

// D(alpha) = exp(alpha a^dag - alpha^* a), alpha = amp * e^{i phase}.
Matrix displacement_matrix(double alpha_amp, double alpha_phase, FockDim dim);
// S(xi) = exp((xi a^dag^2 - xi^* a^2) / 2), xi = amp * e^{i phase}.
Matrix squeezing_matrix(double xi_amp, double xi_phase, FockDim dim);

// --- state constructors --------------------------------------------------

DensityOperator pure_state(const Vector& amplitudes, std::vector<std::string> modes,
                           std::vector<int> dims);
DensityOperator vacuum_state(std::vector<std::string> modes, std::vector<int> dims);
DensityOperator tensor(const DensityOperator& a, const DensityOperator& b);

// --- channels and reductions ---------------------------------------------

// Two-mode mixing with the convention U|1>_a|0>_b = sqrt(1-T)|10> + sqrt(T)|01>,
// i.e. quanta transmit from mode_a into mode_b with amplitude +sqrt(T) and the
// single minus sign sits on the b->a arm.
DensityOperator beamsplitter(const DensityOperator& state, const std::string& mode_a,
                             const std::string& mode_b, double transmittance);

// Pure loss of efficiency eta on one mode (beamsplitter against vacuum with
// the ancilla traced out), applied through its Kraus decomposition.
DensityOperator loss_channel(const DensityOperator& state, const std::string& mode,
                             double eta);
// Heisenberg adjoint of the same channel, for pushing loss onto observables.
Matrix loss_channel_adjoint(const Matrix& observable, double eta);

DensityOperator partial_trace(const DensityOperator& state,
                              const std::vector<std::string>& modes_to_keep);

// <levels| rho |levels> over the assigned modes; returns the (unnormalized)
// operator on the remaining modes.
DensityOperator project_mode_levels(const DensityOperator& state,
                                    const std::map<std::string, int>& levels);

// Diagonal phase (-1)^n on one mode.
DensityOperator apply_parity_phase(const DensityOperator& state, const std::string& mode);

// Truncate every mode to new_cutoff, reporting the discarded weight.
DensityOperator truncate_modes(const DensityOperator& state, int new_cutoff,
                               double* discarded_weight = nullptr);

// Embed a single-mode operator into the full space of `state_modes`.
Matrix embed_operator(const Matrix& op, int mode_position, const std::vector<int>& dims);

Matrix kron(const Matrix& a, const Matrix& b);

// (1/2) * trace norm of (a - b); both Hermitian.
double trace_distance(const Matrix& a, const Matrix& b);

}  // namespace diqkd::fock
