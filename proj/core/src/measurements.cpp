#include "diqkd/measurements.hpp"

#include <cmath>
#include <stdexcept>

namespace diqkd::measurements {

namespace {

using fock::Complex;
using fock::Matrix;
using Eigen::VectorXcd;

// Skew-Hermitian generator with a single pair of bands at offset k:
// G(n+k, n) = raising * r[n], G(n, n+k) = -conj(raising) * r[n].
struct BandedGenerator {
  int offset;
  Complex raising;
  std::vector<double> r;

  void multiply(const VectorXcd& in, VectorXcd& out) const {
    const int dim = static_cast<int>(in.size());
    const Complex lowering = -std::conj(raising);
    for (int n = 0; n < dim; ++n) {
      Complex v = 0.0;
      if (n >= offset) v += raising * r[n - offset] * in(n - offset);
      if (n + offset < dim) v += lowering * r[n] * in(n + offset);
      out(n) = v;
    }
  }
};

BandedGenerator displacement_generator(double amp, double phase, int dim) {
  BandedGenerator g{1, std::polar(amp, phase), std::vector<double>(dim, 0.0)};
  for (int n = 0; n + 1 < dim; ++n) g.r[n] = std::sqrt(double(n + 1));
  return g;
}

BandedGenerator squeezing_generator(double amp, double phase, int dim) {
  BandedGenerator g{2, std::polar(amp, phase), std::vector<double>(dim, 0.0)};
  for (int n = 0; n + 2 < dim; ++n)
    g.r[n] = 0.5 * std::sqrt(double(n + 1) * double(n + 2));
  return g;
}

// y <- exp(G) y by Taylor summation. The generators stay at modest norm
// within the amplitude caps, so the series converges in a few tens of terms
// without cancellation trouble.
void apply_exp(const BandedGenerator& g, VectorXcd& y) {
  VectorXcd term = y;
  VectorXcd next(y.size());
  for (int k = 1; k <= 300; ++k) {
    g.multiply(term, next);
    term = next / double(k);
    y += term;
    if (term.squaredNorm() <= 1e-36 * y.squaredNorm()) return;
  }
  throw std::runtime_error("apply_exp: Taylor series did not converge");
}

}  // namespace

Eigen::Matrix2cd BlochDirection::sigma() const {
  const double ct = std::cos(theta), st = std::sin(theta);
  Eigen::Matrix2cd s;
  s << ct, st * std::exp(Complex(0, -phi)), st * std::exp(Complex(0, phi)), -ct;
  return s;
}

void squeezed_displaced_rows(const MeasurementSetting& setting, int cutoff,
                             VectorXcd& w0, VectorXcd& w1) {
  const int dim = cutoff + 1;
  // (S D)^dag e_i = D^dag (S^dag e_i) = exp(-G_D) exp(-G_S) e_i; the sign
  // flip of a skew-Hermitian band pair is a sign flip of its raising part.
  BandedGenerator gs = squeezing_generator(setting.xi_amp, setting.xi_phase, dim);
  BandedGenerator gd = displacement_generator(setting.alpha_amp, setting.alpha_phase, dim);
  gs.raising = -gs.raising;
  gd.raising = -gd.raising;
  w0 = VectorXcd::Zero(dim);
  w0(0) = 1.0;
  w1 = VectorXcd::Zero(dim);
  w1(1) = 1.0;
  apply_exp(gs, w0);
  apply_exp(gd, w0);
  apply_exp(gs, w1);
  apply_exp(gd, w1);
}

fock::Matrix povm_click_full(const MeasurementSetting& setting, fock::FockDim dim) {
  const Matrix d = fock::displacement_matrix(setting.alpha_amp, setting.alpha_phase, dim);
  const Matrix s = fock::squeezing_matrix(setting.xi_amp, setting.xi_phase, dim);
  const Matrix u = s * d;
  if (setting.eta_tilde_D >= 1.0) {
    const VectorXcd col = u.col(0);
    return col * col.adjoint();
  }
  Matrix k = Matrix::Zero(dim.dim(), dim.dim());
  for (int n = 0; n <= dim.cutoff; ++n) k(n, n) = std::pow(1.0 - setting.eta_tilde_D, n);
  return Matrix::Identity(dim.dim(), dim.dim()) - u * k * u.adjoint();
}

QubitPOVM qubit_povm(const MeasurementSetting& setting, int cutoff) {
  VectorXcd w0, w1;
  squeezed_displaced_rows(setting, cutoff, w0, w1);

  // block(i, j) = sum_n conj(w_i[n]) K_n w_j[n] with K the detector operator:
  // |0><0| for a perfect detector, (1-eta)^n otherwise.
  Complex b00 = 0, b01 = 0, b11 = 0;
  if (setting.eta_tilde_D >= 1.0) {
    b00 = std::conj(w0(0)) * w0(0);
    b01 = std::conj(w0(0)) * w1(0);
    b11 = std::conj(w1(0)) * w1(0);
  } else {
    const double q = 1.0 - setting.eta_tilde_D;
    double kn = 1.0;
    for (int n = 0; n <= cutoff; ++n, kn *= q) {
      b00 += std::conj(w0(n)) * kn * w0(n);
      b01 += std::conj(w0(n)) * kn * w1(n);
      b11 += std::conj(w1(n)) * kn * w1(n);
    }
  }
  Eigen::Matrix2cd block;
  block << b00.real(), b01, std::conj(b01), b11.real();

  QubitPOVM povm;
  if (setting.eta_tilde_D >= 1.0) {
    povm.pi_click = block;
  } else {
    povm.pi_click = Eigen::Matrix2cd::Identity() - block;
  }
  povm.pi_noclick = Eigen::Matrix2cd::Identity() - povm.pi_click;
  return povm;
}

QubitPOVM pauli_povm(const BlochDirection& direction) {
  QubitPOVM povm;
  povm.pi_click = (Eigen::Matrix2cd::Identity() + direction.sigma()) / 2.0;
  povm.pi_noclick = Eigen::Matrix2cd::Identity() - povm.pi_click;
  return povm;
}

double projective_part(const QubitPOVM& povm, const BlochDirection& direction) {
  const Eigen::Matrix2cd diff = povm.pi_click - povm.pi_noclick;
  return 0.5 * (diff * direction.sigma()).trace().real();
}

MuResult optimize_mu(const BlochDirection& direction, double eta_tilde_D,
                     const optimizer::SearchSpec& spec, double xi_cap, double alpha_cap) {
  optimizer::SearchSpec s = spec;
  s.lower = Eigen::Vector4d(0.0, -M_PI, 0.0, -M_PI);
  s.upper = Eigen::Vector4d(std::max(xi_cap, 1e-9), M_PI, std::max(alpha_cap, 1e-9), M_PI);
  const auto objective = [&](const Eigen::VectorXd& x) {
    MeasurementSetting m{x(0), x(1), x(2), x(3), eta_tilde_D};
    if (xi_cap <= 0.0) m.xi_amp = 0.0;
    if (alpha_cap <= 0.0) m.alpha_amp = 0.0;
    return projective_part(qubit_povm(m), direction);
  };
  const auto res = optimizer::maximize(objective, s);
  MuResult out;
  out.mu_max = res.best_value;
  out.best = MeasurementSetting{res.best_point(0), res.best_point(1), res.best_point(2),
                                res.best_point(3), eta_tilde_D};
  if (xi_cap <= 0.0) out.best.xi_amp = 0.0;
  if (alpha_cap <= 0.0) out.best.alpha_amp = 0.0;
  return out;
}

fock::Matrix apply_local_loss_to_povm(const fock::Matrix& povm_element,
                                      double eta_tilde_L) {
  return fock::loss_channel_adjoint(povm_element, eta_tilde_L);
}

}  // namespace diqkd::measurements
