#include "diqkd/finitekey.hpp"

#include <cmath>
#include <stdexcept>

#include "diqkd/math.hpp"
#include "diqkd/protocol.hpp"

namespace diqkd::finitekey {

namespace {

// h'(x) = log2((1-x)/x)
double binary_entropy_slope(double x) { return std::log2((1.0 - x) / x); }

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

void EpsilonSet::validate() const {
  for (double e : {eps_s, eps_s_p, eps_s_pp, eps_EA, eps_PA, eps_h})
    require(e > 0.0, "EpsilonSet: all epsilons must be positive");
  require(eps_s_p + 2.0 * eps_s_pp < eps_s,
          "EpsilonSet: requires eps_s' + 2 eps_s'' < eps_s");
}

void FiniteSizeParams::validate() const {
  require(n >= 1.0, "FiniteSizeParams: n must be >= 1");
  require(gamma > 0.0 && gamma < 1.0, "FiniteSizeParams: gamma outside (0, 1)");
  require(t > kClassicalHigh && t <= kOmegaMax + 1e-12,
          "FiniteSizeParams: t outside (3/4, omega_max]");
  require(q_n >= 0.0 && q_n <= 0.5, "FiniteSizeParams: q_n outside [0, 1/2]");
  require(alpha_p > 1.0 && alpha_p < 2.0, "FiniteSizeParams: alpha' outside (1, 2)");
  require(alpha_pp > 1.0 && alpha_pp < 1.0 + 1.0 / kLog2Of5,
          "FiniteSizeParams: alpha'' outside (1, 1 + 1/log2(5))");
  require(k > 0.0, "FiniteSizeParams: k must be positive");
  epsilons.validate();
}

double eta_bound(double s, double q_n) {
  require(q_n >= 0.0 && q_n <= 0.5, "eta_bound: q_n outside [0, 1/2]");
  if (s < kClassicalLow - 1e-12 || s > kOmegaMax + 1e-12)
    throw std::invalid_argument("eta_bound: s outside [1/4, omega_max]");
  if (s <= kClassicalHigh) return 0.0;

  const double u = std::max(0.0, 16.0 * s * s - 16.0 * s + 3.0);
  const double bell = binary_entropy_bits((1.0 + std::sqrt(u)) / 2.0);
  const double c = q_n * (1.0 - q_n);
  const double w = std::max(0.0, 64.0 * s - 64.0 * s * s - 8.0);
  const double noise = binary_entropy_bits((1.0 + std::sqrt(std::max(0.0, 1.0 - c * w))) / 2.0);
  return 1.0 - bell + noise;
}

double eta_bound_printed_variant(double s, double q_n) {
  require(q_n >= 0.0 && q_n <= 0.5, "eta_bound_printed_variant: q_n outside [0, 1/2]");
  if (s < kClassicalLow - 1e-12 || s > kOmegaMax + 1e-12)
    throw std::invalid_argument("eta_bound_printed_variant: s outside [1/4, omega_max]");
  if (s <= kClassicalHigh) return 0.0;
  const double u = std::max(0.0, 16.0 * s * s - 16.0 * s + 3.0);
  const double bell = binary_entropy_bits((1.0 + std::sqrt(u)) / 2.0);
  const double c = q_n * (1.0 - q_n);
  const double w = std::max(0.0, 64.0 * s - 64.0 * s * s - 8.0);
  const double noise = binary_entropy_bits((1.0 + c * std::sqrt(w)) / 2.0);
  return 1.0 - bell + noise;
}

double eta_slope(double t, double q_n) {
  require(q_n >= 0.0 && q_n <= 0.5, "eta_slope: q_n outside [0, 1/2]");
  if (!(t > kClassicalHigh) || t > kOmegaMax + 1e-12)
    throw std::invalid_argument("eta_slope: t outside (3/4, omega_max]");

  const double u = std::max(0.0, 16.0 * t * t - 16.0 * t + 3.0);
  const double du = 32.0 * t - 16.0;
  const double a = (1.0 + std::sqrt(u)) / 2.0;
  double slope = -binary_entropy_slope(a) * du / (4.0 * std::sqrt(u));

  if (q_n > 0.0) {
    const double c = q_n * (1.0 - q_n);
    const double w = std::max(0.0, 64.0 * t - 64.0 * t * t - 8.0);
    const double dw = 64.0 - 128.0 * t;
    const double v = std::max(0.0, 1.0 - c * w);
    const double b = (1.0 + std::sqrt(v)) / 2.0;
    slope += binary_entropy_slope(b) * (-c * dw) / (4.0 * std::sqrt(v));
  }
  return slope;
}

double g_linear(double t, double omega, double q_n) {
  return eta_bound(t, q_n) + (omega - t) * eta_slope(t, q_n);
}

FAffineValues f_affine(double t, double gamma, double q_n) {
  require(gamma > 0.0 && gamma <= 1.0, "f_affine: gamma outside (0, 1]");
  FAffineValues f;
  const double g0 = g_linear(t, 0.0, q_n);
  const double g1 = g_linear(t, 1.0, q_n);
  f.at_delta0 = g0 / gamma + (1.0 - 1.0 / gamma) * g1;
  f.at_delta1 = g1;
  f.at_delta_perp = g1;
  return f;
}

double f_mean(const FAffineValues& f, double p0, double p1, double p_perp) {
  return p0 * f.at_delta0 + p1 * f.at_delta1 + p_perp * f.at_delta_perp;
}

double f_variance(const FAffineValues& f, double p0, double p1, double p_perp) {
  const double mean = f_mean(f, p0, p1, p_perp);
  const double second = p0 * f.at_delta0 * f.at_delta0 + p1 * f.at_delta1 * f.at_delta1 +
                        p_perp * f.at_delta_perp * f.at_delta_perp;
  return second - mean * mean;
}

double variance_upper_bound(double t, double gamma, double q_n) {
  require(gamma > 0.0 && gamma <= 1.0, "variance_upper_bound: gamma outside (0, 1]");
  const double spread = g_linear(t, 1.0, q_n) - g_linear(t, 0.0, q_n);
  return (2.0 + std::sqrt(2.0)) / (4.0 * gamma) * spread * spread;
}

double delta_gap(double t, double omega, double gamma, double q_n) {
  const FAffineValues f = f_affine(t, gamma, q_n);
  return eta_bound(omega, q_n) -
         f_mean(f, gamma * (1.0 - omega), gamma * omega, 1.0 - gamma);
}

double theta_eps(double eps) {
  require(eps > 0.0 && eps <= 1.0, "theta_eps: eps outside (0, 1]");
  return std::log2(2.0 / (eps * eps));
}

double K_term(double alpha_p, double t, double q_n) {
  require(alpha_p > 1.0 && alpha_p < 2.0, "K_term: alpha' outside (1, 2)");
  const double d = 2.0 + g_linear(t, 1.0, q_n) - g_linear(t, kOmegaMin, q_n);
  const double cube = 2.0 - alpha_p;
  const double log_term = std::log(std::exp2(d) + std::exp(2.0));
  return std::exp2((alpha_p - 1.0) * d) * log_term * log_term * log_term /
         (6.0 * cube * cube * cube * std::log(2.0));
}

double V_of_variance(double variance) {
  const double root = kLog2Of33 + std::sqrt(2.0 + variance);
  return 0.5 * std::log(2.0) * root * root;
}

double V_term(double t, double gamma, double q_n) {
  return V_of_variance(variance_upper_bound(t, gamma, q_n));
}

double lambert_w0(double x) {
  constexpr double kMinusOneOverE = -0.36787944117144233;
  if (x < kMinusOneOverE - 1e-15)
    throw std::invalid_argument("lambert_w0: argument below -1/e");
  if (x == 0.0) return 0.0;
  if (x > 1e100) return lambert_w0_exp(std::log(x));

  double w;
  if (x < -0.25) {
    // branch-point expansion around -1/e
    const double p = std::sqrt(std::max(0.0, 2.0 * (std::exp(1.0) * x + 1.0)));
    w = -1.0 + p - p * p / 3.0 + 11.0 * p * p * p / 72.0;
  } else if (x < 3.0) {
    w = x / (1.0 + x);
  } else {
    const double l1 = std::log(x);
    const double l2 = std::log(l1);
    w = l1 - l2 + l2 / l1;
  }

  for (int it = 0; it < 60; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    if (std::abs(f) <= 1e-15 * std::max(1.0, std::abs(x))) break;
    const double fp = ew * (1.0 + w);
    const double fpp = ew * (2.0 + w);
    const double step = f / (fp - f * fpp / (2.0 * fp));
    w -= step;
    if (w < -1.0) w = -1.0 + 1e-16;  // keep on the principal branch
  }
  return w;
}

double lambert_w0_exp(double z) {
  // Solve w + ln w = z for w > 0; equals W(e^z).
  if (z < -700.0) return std::exp(z);  // w ~ e^z; iteration below would underflow
  double w = z > 1.0 ? z - std::log(z) : std::exp(z) / (1.0 + std::exp(z));
  for (int it = 0; it < 100; ++it) {
    const double g = w + std::log(w) - z;
    const double gp = 1.0 + 1.0 / w;
    const double gpp = -1.0 / (w * w);
    const double step = g / (gp - g * gpp / (2.0 * gp));
    const double next = w - step;
    w = next > 0.0 ? next : w / 2.0;
    if (std::abs(g) <= 1e-15 * std::max(1.0, std::abs(z))) break;
  }
  return w;
}

double Y_correction(double x) {
  const double b = kLambertScale;
  return b * lambert_w0_exp(x / b - std::log(b));
}

double omega_threshold(double S, double gamma, double n, double k) {
  require(gamma > 0.0 && gamma < 1.0, "omega_threshold: gamma outside (0, 1)");
  require(n >= 1.0, "omega_threshold: n must be >= 1");
  const double omega = (4.0 + S) / 8.0;
  const double q = gamma * (1.0 - omega);
  const double q_thr = q + k * std::sqrt(q * (1.0 - q) / n);
  return 1.0 - q_thr / gamma;
}

double syndrome_length(double n, double gamma, double H_A1_B3, double S) {
  return n * ((1.0 - gamma) * H_A1_B3 + gamma * binary_entropy_bits((4.0 - S) / 8.0)) +
         kSyndromeSlack * std::sqrt(n);
}

KeyLengthResult key_length(double S, double H_A1_B3, const FiniteSizeParams& params) {
  params.validate();
  if (S > 2.0 * std::sqrt(2.0) + 1e-9)
    throw std::invalid_argument("key_length: CHSH score above the Tsirelson bound");

  const EpsilonSet& eps = params.epsilons;
  const double n = params.n;
  const double a_p = params.alpha_p;
  const double a_pp = params.alpha_pp;

  const double omega_thr = omega_threshold(S, params.gamma, n, params.k);
  // inf over omega of Delta(f_t, omega) is attained at t and vanishes there.
  double l = n * g_linear(params.t, omega_thr, params.q_n);
  l -= (a_p - 1.0) * V_term(params.t, params.gamma, params.q_n);
  l -= n * (a_p - 1.0) * (a_p - 1.0) * K_term(a_p, params.t, params.q_n);
  l -= n * params.gamma;
  l -= n * (a_pp - 1.0) * kLog2Of5 * kLog2Of5;
  l -= (theta_eps(eps.eps_s_p) + a_p * std::log2(1.0 / eps.eps_EA)) / (a_p - 1.0);
  l -= (theta_eps(eps.eps_s_pp) + a_pp * std::log2(1.0 / eps.eps_EA)) / (a_pp - 1.0);
  l -= 3.0 * theta_eps(eps.eps_s - eps.eps_s_p - 2.0 * eps.eps_s_pp);
  l -= 5.0 * std::log2(eps.eps_PA);
  l -= syndrome_length(n, params.gamma, H_A1_B3, S);
  l -= kFlatCost;

  KeyLengthResult out;
  out.l_raw = l;
  out.ell = Y_correction(l);
  out.soundness = eps.soundness();
  return out;
}

double KeyStats::H(double q_n) const {
  protocol::JointDistribution joint;
  joint.p[0][0] = p_key[0];
  joint.p[0][1] = p_key[1];
  joint.p[1][0] = p_key[2];
  joint.p[1][1] = p_key[3];
  return protocol::conditional_entropy_bits(joint, q_n);
}

FiniteOptResult optimize_finite(const KeyStats& stats, double n, const EpsilonSet& eps,
                                const optimizer::SearchSpec& spec) {
  require(n >= 1.0, "optimize_finite: n must be >= 1");
  eps.validate();

  // Search space: t directly; gamma and the Renyi offsets on log scales to
  // resolve the interval endpoints; q_n directly. q_n stops slightly below
  // 1/2, where the key degenerates to noise and l flattens out.
  optimizer::SearchSpec s = spec;
  s.lower.resize(5);
  s.upper.resize(5);
  s.lower << kClassicalHigh + 1e-4, std::log(1e-7), std::log(1e-9), std::log(1e-9), 0.0;
  s.upper << kOmegaMax - 1e-7, std::log(0.99), std::log(1.0 - 1e-9),
      std::log(1.0 / kLog2Of5 - 1e-9), 0.48;

  const auto params_of = [&](const Eigen::VectorXd& x) {
    FiniteSizeParams p;
    p.n = n;
    p.t = x(0);
    p.gamma = std::exp(x(1));
    p.alpha_p = 1.0 + std::exp(x(2));
    p.alpha_pp = 1.0 + std::exp(x(3));
    p.q_n = x(4);
    p.epsilons = eps;
    return p;
  };

  const auto result = optimizer::maximize(
      [&](const Eigen::VectorXd& x) {
        const FiniteSizeParams p = params_of(x);
        return key_length(stats.S, stats.H(p.q_n), p).l_raw;
      },
      s);

  FiniteOptResult out;
  out.params = params_of(result.best_point);
  const auto kl = key_length(stats.S, stats.H(out.params.q_n), out.params);
  out.ell = kl.ell;
  out.l_raw = kl.l_raw;
  return out;
}

double finite_rate_per_second(double ell, double n, const photonics::SetupParams& params) {
  return photonics::heralding_probability(params) * params.nu * std::max(ell, 0.0) / n;
}

}  // namespace diqkd::finitekey
