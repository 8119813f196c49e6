#include "diqkd/fock.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace diqkd::fock {

namespace {

int total_dim(const std::vector<int>& dims) {
  int n = 1;
  for (int d : dims) n *= d;
  return n;
}

// Strides with the first mode most significant (kron order).
std::vector<int> strides_of(const std::vector<int>& dims) {
  std::vector<int> s(dims.size(), 1);
  for (int i = static_cast<int>(dims.size()) - 2; i >= 0; --i)
    s[i] = s[i + 1] * dims[i + 1];
  return s;
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

int DensityOperator::mode_index(const std::string& mode) const {
  for (std::size_t i = 0; i < modes.size(); ++i)
    if (modes[i] == mode) return static_cast<int>(i);
  throw std::invalid_argument("unknown mode label: " + mode);
}

Diagnostics DensityOperator::diagnostics() const {
  Diagnostics d;
  d.hermiticity_defect = (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
  d.trace = matrix.trace().real();
  Eigen::SelfAdjointEigenSolver<Matrix> es((matrix + matrix.adjoint()) / 2.0,
                                           Eigen::EigenvaluesOnly);
  d.min_eigenvalue = es.eigenvalues().minCoeff();
  return d;
}

void DensityOperator::check_valid(bool expect_normalized) const {
  const Diagnostics d = diagnostics();
  if (!d.ok(expect_normalized)) {
    throw std::runtime_error(
        "density operator invariant violated: hermiticity defect " +
        std::to_string(d.hermiticity_defect) + ", trace " + std::to_string(d.trace) +
        ", min eigenvalue " + std::to_string(d.min_eigenvalue));
  }
}

Matrix annihilation_matrix(FockDim dim) {
  Matrix a = Matrix::Zero(dim.dim(), dim.dim());
  for (int n = 1; n <= dim.cutoff; ++n) a(n - 1, n) = std::sqrt(double(n));
  return a;
}

ModeOperator annihilation(FockDim dim, const std::string& mode) {
  return ModeOperator{annihilation_matrix(dim), {mode}, {dim.dim()}};
}

Matrix number_operator(FockDim dim) {
  Matrix n = Matrix::Zero(dim.dim(), dim.dim());
  for (int k = 0; k <= dim.cutoff; ++k) n(k, k) = double(k);
  return n;
}

Matrix unitary_from_generator(const Matrix& generator) {
  const double skew_defect = (generator + generator.adjoint()).cwiseAbs().maxCoeff();
  if (skew_defect > 1e-12 * std::max(1.0, generator.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("unitary_from_generator: generator is not skew-Hermitian");
  const Matrix h = Complex(0, 1) * generator;  // Hermitian
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const auto& lam = es.eigenvalues();
  Vector phases(lam.size());
  for (Eigen::Index k = 0; k < lam.size(); ++k)
    phases(k) = std::exp(Complex(0, -lam(k)));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

double unitarity_defect(const Matrix& u) {
  return (u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
}

Matrix displacement_matrix(double alpha_amp, double alpha_phase, FockDim dim) {
  const Complex alpha = std::polar(alpha_amp, alpha_phase);
  const Matrix a = annihilation_matrix(dim);
  const Matrix g = alpha * a.adjoint() - std::conj(alpha) * a;
  return unitary_from_generator(g);
}

Matrix squeezing_matrix(double xi_amp, double xi_phase, FockDim dim) {
  const Complex xi = std::polar(xi_amp, xi_phase);
  const Matrix a = annihilation_matrix(dim);
  const Matrix a2 = a * a;
  const Matrix g = 0.5 * (xi * a2.adjoint() - std::conj(xi) * a2);
  return unitary_from_generator(g);
}

DensityOperator pure_state(const Vector& amplitudes, std::vector<std::string> modes,
                           std::vector<int> dims) {
  require(total_dim(dims) == amplitudes.size(), "pure_state: dimension mismatch");
  DensityOperator rho;
  rho.matrix = amplitudes * amplitudes.adjoint();
  rho.modes = std::move(modes);
  rho.dims = std::move(dims);
  return rho;
}

DensityOperator vacuum_state(std::vector<std::string> modes, std::vector<int> dims) {
  Vector v = Vector::Zero(total_dim(dims));
  v(0) = 1.0;
  return pure_state(v, std::move(modes), std::move(dims));
}

DensityOperator tensor(const DensityOperator& a, const DensityOperator& b) {
  DensityOperator out;
  out.matrix = kron(a.matrix, b.matrix);
  out.modes = a.modes;
  out.modes.insert(out.modes.end(), b.modes.begin(), b.modes.end());
  out.dims = a.dims;
  out.dims.insert(out.dims.end(), b.dims.begin(), b.dims.end());
  return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix embed_operator(const Matrix& op, int mode_position, const std::vector<int>& dims) {
  require(mode_position >= 0 && mode_position < static_cast<int>(dims.size()),
          "embed_operator: mode position out of range");
  require(op.rows() == dims[mode_position], "embed_operator: dimension mismatch");
  Matrix out = Matrix::Identity(1, 1);
  for (int m = 0; m < static_cast<int>(dims.size()); ++m) {
    if (m == mode_position)
      out = kron(out, op);
    else
      out = kron(out, Matrix::Identity(dims[m], dims[m]));
  }
  return out;
}

DensityOperator beamsplitter(const DensityOperator& state, const std::string& mode_a,
                             const std::string& mode_b, double transmittance) {
  require(transmittance >= 0.0 && transmittance <= 1.0,
          "beamsplitter: transmittance outside [0, 1]");
  const int ia = state.mode_index(mode_a);
  const int ib = state.mode_index(mode_b);
  require(ia != ib, "beamsplitter: modes must differ");
  require(state.dims[ia] == state.dims[ib], "beamsplitter: mode dimensions differ");

  const double theta = std::asin(std::sqrt(transmittance));
  const FockDim d(state.dims[ia] - 1);
  const Matrix a = embed_operator(annihilation_matrix(d), ia, state.dims);
  const Matrix b = embed_operator(annihilation_matrix(d), ib, state.dims);
  const Matrix g = theta * (a * b.adjoint() - a.adjoint() * b);
  const Matrix u = unitary_from_generator(g);

  DensityOperator out = state;
  out.matrix = u * state.matrix * u.adjoint();
  return out;
}

DensityOperator loss_channel(const DensityOperator& state, const std::string& mode,
                             double eta) {
  require(eta >= 0.0 && eta <= 1.0, "loss_channel: eta outside [0, 1]");
  const int im = state.mode_index(mode);
  const int d = state.dims[im];

  // K_k = sqrt((1-eta)^k / k!) * sqrt(eta)^n * a^k
  std::vector<Matrix> kraus;
  for (int k = 0; k < d; ++k) {
    Matrix kk = Matrix::Zero(d, d);
    for (int n = k; n < d; ++n) {
      double amp2 = std::pow(1.0 - eta, k) * std::pow(eta, n - k);
      double binom = 1.0;
      for (int j = 0; j < k; ++j) binom *= double(n - j) / double(j + 1);
      kk(n - k, n) = std::sqrt(amp2 * binom);
    }
    if (kk.cwiseAbs().maxCoeff() > 0.0) kraus.push_back(std::move(kk));
  }

  DensityOperator out = state;
  out.matrix = Matrix::Zero(state.dim(), state.dim());
  for (const Matrix& kk : kraus) {
    const Matrix full = embed_operator(kk, im, state.dims);
    out.matrix += full * state.matrix * full.adjoint();
  }
  return out;
}

Matrix loss_channel_adjoint(const Matrix& observable, double eta) {
  require(eta >= 0.0 && eta <= 1.0, "loss_channel_adjoint: eta outside [0, 1]");
  const int d = static_cast<int>(observable.rows());
  Matrix out = Matrix::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    Matrix kk = Matrix::Zero(d, d);
    for (int n = k; n < d; ++n) {
      double amp2 = std::pow(1.0 - eta, k) * std::pow(eta, n - k);
      double binom = 1.0;
      for (int j = 0; j < k; ++j) binom *= double(n - j) / double(j + 1);
      kk(n - k, n) = std::sqrt(amp2 * binom);
    }
    out += kk.adjoint() * observable * kk;
  }
  return out;
}

DensityOperator partial_trace(const DensityOperator& state,
                              const std::vector<std::string>& modes_to_keep) {
  require(!modes_to_keep.empty(), "partial_trace: empty keep-set");
  std::vector<int> keep;
  for (const auto& m : modes_to_keep) keep.push_back(state.mode_index(m));

  std::vector<int> traced;
  for (int i = 0; i < static_cast<int>(state.modes.size()); ++i)
    if (std::find(keep.begin(), keep.end(), i) == keep.end()) traced.push_back(i);

  const auto strides = strides_of(state.dims);
  std::vector<int> keep_dims, traced_dims;
  for (int i : keep) keep_dims.push_back(state.dims[i]);
  for (int i : traced) traced_dims.push_back(state.dims[i]);
  const int nk = total_dim(keep_dims);
  const int nt = total_dim(traced_dims);

  auto offset = [&](const std::vector<int>& positions, const std::vector<int>& dims,
                    int flat) {
    int off = 0;
    for (int i = static_cast<int>(positions.size()) - 1; i >= 0; --i) {
      off += (flat % dims[i]) * strides[positions[i]];
      flat /= dims[i];
    }
    return off;
  };

  DensityOperator out;
  out.matrix = Matrix::Zero(nk, nk);
  for (const auto& m : modes_to_keep) out.modes.push_back(m);
  out.dims = keep_dims;

  for (int r = 0; r < nk; ++r) {
    const int ro = offset(keep, keep_dims, r);
    for (int c = 0; c < nk; ++c) {
      const int co = offset(keep, keep_dims, c);
      Complex sum = 0.0;
      for (int t = 0; t < nt; ++t) {
        const int to = offset(traced, traced_dims, t);
        sum += state.matrix(ro + to, co + to);
      }
      out.matrix(r, c) = sum;
    }
  }
  return out;
}

DensityOperator project_mode_levels(const DensityOperator& state,
                                    const std::map<std::string, int>& levels) {
  require(!levels.empty(), "project_mode_levels: no levels given");
  std::vector<int> fixed;
  int fixed_offset = 0;
  const auto strides = strides_of(state.dims);
  for (const auto& [mode, level] : levels) {
    const int i = state.mode_index(mode);
    require(level >= 0 && level < state.dims[i], "project_mode_levels: level out of range");
    fixed.push_back(i);
    fixed_offset += level * strides[i];
  }
  require(fixed.size() < state.modes.size(), "project_mode_levels: no modes left");

  std::vector<int> rest;
  for (int i = 0; i < static_cast<int>(state.modes.size()); ++i)
    if (std::find(fixed.begin(), fixed.end(), i) == fixed.end()) rest.push_back(i);

  std::vector<int> rest_dims;
  for (int i : rest) rest_dims.push_back(state.dims[i]);
  const int nr = total_dim(rest_dims);

  auto offset = [&](int flat) {
    int off = 0;
    for (int i = static_cast<int>(rest.size()) - 1; i >= 0; --i) {
      off += (flat % rest_dims[i]) * strides[rest[i]];
      flat /= rest_dims[i];
    }
    return off;
  };

  DensityOperator out;
  out.matrix = Matrix::Zero(nr, nr);
  for (int i : rest) out.modes.push_back(state.modes[i]);
  out.dims = rest_dims;
  for (int r = 0; r < nr; ++r)
    for (int c = 0; c < nr; ++c)
      out.matrix(r, c) = state.matrix(offset(r) + fixed_offset, offset(c) + fixed_offset);
  return out;
}

DensityOperator apply_parity_phase(const DensityOperator& state, const std::string& mode) {
  const int im = state.mode_index(mode);
  const int d = state.dims[im];
  Matrix z = Matrix::Zero(d, d);
  for (int n = 0; n < d; ++n) z(n, n) = (n % 2 == 0) ? 1.0 : -1.0;
  const Matrix full = embed_operator(z, im, state.dims);
  DensityOperator out = state;
  out.matrix = full * state.matrix * full.adjoint();
  return out;
}

DensityOperator truncate_modes(const DensityOperator& state, int new_cutoff,
                               double* discarded_weight) {
  const int nd = new_cutoff + 1;
  std::vector<int> new_dims(state.dims.size(), nd);
  for (std::size_t i = 0; i < state.dims.size(); ++i)
    require(state.dims[i] >= nd, "truncate_modes: cannot grow a mode");

  const auto strides = strides_of(state.dims);
  const int n_new = total_dim(new_dims);
  auto offset = [&](int flat) {
    int off = 0;
    for (int i = static_cast<int>(new_dims.size()) - 1; i >= 0; --i) {
      off += (flat % nd) * strides[i];
      flat /= nd;
    }
    return off;
  };

  DensityOperator out;
  out.modes = state.modes;
  out.dims = new_dims;
  out.matrix = Matrix::Zero(n_new, n_new);
  for (int r = 0; r < n_new; ++r)
    for (int c = 0; c < n_new; ++c) out.matrix(r, c) = state.matrix(offset(r), offset(c));
  if (discarded_weight != nullptr)
    *discarded_weight = state.trace() - out.trace();
  return out;
}

double trace_distance(const Matrix& a, const Matrix& b) {
  const Matrix diff = ((a - b) + (a - b).adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(diff, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace diqkd::fock
