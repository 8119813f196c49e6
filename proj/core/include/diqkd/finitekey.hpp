#pragma once

// Finite-size key length against general attacks, evaluated through the
// entropy-accumulation recipe: the CHSH-based entropy bound eta(s), its
// tangent family g_t, the affine min-tradeoff values f_t over test/key
// outcomes, variance and second-order correction terms, and the Lambert-W
// based final correction. Entropies and lengths are in bits; "log" means
// log base 2 throughout.

#include <array>

#include "diqkd/optimize.hpp"
#include "diqkd/photonics.hpp"

namespace diqkd::finitekey {

// CHSH winning probabilities: score S and probability omega relate by
// omega = (4 + S) / 8.
inline const double kOmegaMin = (1.0 - 1.0 / std::sqrt(2.0)) / 2.0;
inline const double kOmegaMax = (1.0 + 1.0 / std::sqrt(2.0)) / 2.0;
inline constexpr double kClassicalLow = 0.25;
inline constexpr double kClassicalHigh = 0.75;

inline const double kLambertScale = 4.0 / std::log(2.0);  // b in Y_b
inline constexpr double kSyndromeSlack = 50.0;            // + 50 sqrt(n) syndrome bits
inline constexpr double kFlatCost = 264.0;                // constant key-length cost
inline const double kLog2Of5 = std::log2(5.0);
inline const double kLog2Of33 = std::log2(33.0);
inline constexpr double kDefaultCompletenessSigma = 3.0;  // k in omega_thr

struct EpsilonSet {
  double eps_s = 1e-6;
  double eps_s_p = 3e-7;
  double eps_s_pp = 3e-7;
  double eps_EA = 1e-6;
  double eps_PA = 1e-6;
  double eps_h = 0x1p-61;  // hashing collision probability

  void validate() const;  // all positive, eps_s_p + 2 eps_s_pp < eps_s
  double soundness() const { return std::max(eps_EA, eps_PA + 2.0 * eps_s) + 4.0 * eps_h; }
};

struct FiniteSizeParams {
  double n = 1e10;         // rounds
  double gamma = 1e-2;     // test-round probability
  double t = 0.8;          // tangent point, in (3/4, omega_max]
  double q_n = 0.0;        // noisy-preprocessing bit-flip probability
  double alpha_p = 1.001;  // Renyi parameter, in (1, 2)
  double alpha_pp = 1.001; // Renyi parameter, in (1, 1 + 1/log2(5))
  EpsilonSet epsilons;
  double k = kDefaultCompletenessSigma;

  void validate() const;
};

// Entropy bound: 0 on [1/4, 3/4]; on (3/4, omega_max] the two-binary-entropy
// form with the noisy-preprocessing radical spanning the whole product
// q_n (1-q_n) (64 s - 64 s^2 - 8). Throws outside [1/4, omega_max].
double eta_bound(double s, double q_n);

// Variant with the preprocessing coefficient outside the radical. Kept for
// comparison only: it contradicts eta_bound already at q_n = 0 (constant
// offset of one bit) and nothing downstream uses it.
double eta_bound_printed_variant(double s, double q_n);

// d eta / ds in closed form; finite-difference checked in the tests.
// Domain (3/4, omega_max]; the slope diverges at omega_max itself.
double eta_slope(double t, double q_n);

// Tangent of eta at t, evaluated at any omega (affine extension).
double g_linear(double t, double omega, double q_n);

// Values of the affine min-tradeoff function on the three outcome deltas
// {lose, win, key}.
struct FAffineValues {
  double at_delta0 = 0.0;
  double at_delta1 = 0.0;
  double at_delta_perp = 0.0;
};
FAffineValues f_affine(double t, double gamma, double q_n);
double f_mean(const FAffineValues& f, double p0, double p1, double p_perp);
double f_variance(const FAffineValues& f, double p0, double p1, double p_perp);

// max over omega in Q of Var_{q(omega)}(f_t) <= (2+sqrt2)/(4 gamma) (g(1)-g(0))^2.
double variance_upper_bound(double t, double gamma, double q_n);

// Delta(f_t, omega) = eta(omega) - f_t(q(omega)) with q(omega) the outcome
// distribution of a strategy winning with probability omega.
double delta_gap(double t, double omega, double gamma, double q_n);

// Upper-bound form log2(2 / eps^2); eps in (0, 1].
double theta_eps(double eps);

double K_term(double alpha_p, double t, double q_n);
double V_of_variance(double variance);
double V_term(double t, double gamma, double q_n);  // at the variance upper bound

// Principal-branch Lambert W; Halley iteration, residual <= 1e-12 relative.
double lambert_w0(double x);
// W(e^z), stable for arbitrarily large z.
double lambert_w0_exp(double z);
// Y_b(x) = b W(e^{x/b} / b) with b = 4/ln 2. Maps R onto (0, inf).
double Y_correction(double x);

// omega_thr = 1 - q_thr/gamma, q_thr = q + k sqrt(q(1-q)/n), q = gamma(1-omega).
double omega_threshold(double S, double gamma, double n,
                       double k = kDefaultCompletenessSigma);

// m = n((1-gamma) H(A1|B3) + gamma h((4-S)/8)) + 50 sqrt(n).
double syndrome_length(double n, double gamma, double H_A1_B3, double S);

struct KeyLengthResult {
  double ell = 0.0;    // Y_b(l); strictly positive but ~0 when l << 0
  double l_raw = 0.0;  // pre-correction length; negative means no key
  double soundness = 0.0;
};

// Composes every term above. H_A1_B3 must already include the bit flip at
// params.q_n. Never clamped; rate reporting clamps.
KeyLengthResult key_length(double S, double H_A1_B3, const FiniteSizeParams& params);

// Statistics handed over by the protocol layer. The key-round joint
// distribution is kept so H can be re-evaluated at every candidate q_n.
struct KeyStats {
  double S = 0.0;
  std::array<double, 4> p_key{};  // joint (A1, B3), row-major

  double H(double q_n) const;
};

struct FiniteOptResult {
  double ell = 0.0;
  double l_raw = 0.0;
  FiniteSizeParams params;
};

// Maximizes l over (t, gamma, alpha', alpha'', q_n) at fixed n and epsilons.
// gamma and the Renyi offsets are searched on log scales.
FiniteOptResult optimize_finite(const KeyStats& stats, double n, const EpsilonSet& eps,
                                const optimizer::SearchSpec& spec);

// R = P_H nu max(ell, 0) / n, bits per second.
double finite_rate_per_second(double ell, double n, const photonics::SetupParams& params);

}  // namespace diqkd::finitekey
