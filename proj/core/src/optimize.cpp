#include "diqkd/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "diqkd/parallel.hpp"

namespace diqkd::optimizer {

namespace {

constexpr double kLogitClip = 36.0;  // keeps exp() comfortably finite

double clamp01(double x, double margin) {
  return std::min(1.0 - margin, std::max(margin, x));
}

// u in R  ->  x in (lo, hi)
double to_box(double u, double lo, double hi) {
  const double s = 1.0 / (1.0 + std::exp(-std::clamp(u, -kLogitClip, kLogitClip)));
  return lo + (hi - lo) * s;
}

double from_box(double x, double lo, double hi) {
  const double s = clamp01((x - lo) / (hi - lo), 1e-12);
  return std::log(s / (1.0 - s));
}

int halton_prime(int i) {
  static const int primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31,
                               37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79};
  return primes[i % (sizeof(primes) / sizeof(primes[0]))];
}

double halton(int index, int base) {
  double f = 1.0, r = 0.0;
  for (int i = index; i > 0; i /= base) {
    f /= base;
    r += f * (i % base);
  }
  return r;
}

struct NelderMead {
  const Objective& objective;
  const SearchSpec& spec;
  long evals = 0;
  bool exhausted = false;

  double eval(const Eigen::VectorXd& u) {
    ++evals;
    Eigen::VectorXd x(spec.dims());
    for (int d = 0; d < spec.dims(); ++d) x(d) = to_box(u(d), spec.lower(d), spec.upper(d));
    const double v = objective(x);
    return std::isfinite(v) ? v : -1e300;  // infeasible points lose
  }

  // Minimizes f = -objective in the unconstrained u-space.
  void run(Eigen::VectorXd u0, double& best_val, Eigen::VectorXd& best_u) {
    const int n = spec.dims();
    // Adaptive coefficients (well behaved in higher dimensions).
    const double alpha = 1.0;
    const double beta = 1.0 + 2.0 / n;
    const double gamma = 0.75 - 0.5 / n;
    const double delta = 1.0 - 1.0 / n;

    double radius = 1.0;
    for (int restart = 0; restart < 3; ++restart) {
      std::vector<Eigen::VectorXd> pts(n + 1, u0);
      std::vector<double> f(n + 1);
      for (int i = 1; i <= n; ++i) pts[i](i - 1) += radius;
      for (int i = 0; i <= n; ++i) f[i] = -eval(pts[i]);

      while (evals < spec.max_evals_per_start) {
        std::vector<int> order(n + 1);
        for (int i = 0; i <= n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b]; });
        const int lo = order[0], hi = order[n], second_hi = order[n - 1];

        if (f[hi] - f[lo] < spec.tol) break;  // stalled

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i <= n; ++i)
          if (i != hi) centroid += pts[i];
        centroid /= n;

        const Eigen::VectorXd refl = centroid + alpha * (centroid - pts[hi]);
        const double f_refl = -eval(refl);

        if (f_refl < f[lo]) {
          const Eigen::VectorXd exp_pt = centroid + beta * (refl - centroid);
          const double f_exp = -eval(exp_pt);
          if (f_exp < f_refl) {
            pts[hi] = exp_pt;
            f[hi] = f_exp;
          } else {
            pts[hi] = refl;
            f[hi] = f_refl;
          }
        } else if (f_refl < f[second_hi]) {
          pts[hi] = refl;
          f[hi] = f_refl;
        } else {
          const bool outside = f_refl < f[hi];
          const Eigen::VectorXd base = outside ? refl : pts[hi];
          const Eigen::VectorXd contr = centroid + gamma * (base - centroid);
          const double f_contr = -eval(contr);
          if (f_contr < std::min(f_refl, f[hi])) {
            pts[hi] = contr;
            f[hi] = f_contr;
          } else {
            for (int i = 0; i <= n; ++i) {
              if (i == lo) continue;
              pts[i] = pts[lo] + delta * (pts[i] - pts[lo]);
              f[i] = -eval(pts[i]);
            }
          }
        }
        if (evals >= spec.max_evals_per_start) {
          exhausted = true;
          break;
        }
      }

      int lo = 0;
      for (int i = 1; i <= n; ++i)
        if (f[i] < f[lo]) lo = i;
      if (-f[lo] > best_val) {
        best_val = -f[lo];
        best_u = pts[lo];
      }
      u0 = pts[lo];
      radius *= 0.25;  // tighten and retry from the incumbent
      if (evals >= spec.max_evals_per_start) break;
    }
  }
};

}  // namespace

void SearchSpec::validate() const {
  if (lower.size() != upper.size() || lower.size() == 0)
    throw std::invalid_argument("SearchSpec: bounds missing or mismatched");
  for (int d = 0; d < dims(); ++d)
    if (!(lower(d) < upper(d)))
      throw std::invalid_argument("SearchSpec: lower must be < upper in every dim");
  if (n_starts < 1) throw std::invalid_argument("SearchSpec: n_starts must be >= 1");
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Result maximize(const Objective& objective, const SearchSpec& spec,
                const std::vector<Eigen::VectorXd>& warm_starts) {
  spec.validate();
  const int n = spec.dims();
  const int n_warm = static_cast<int>(warm_starts.size());
  const int n_total = spec.n_starts + n_warm;

  // Per-dimension Cranley-Patterson rotation derived from the seed.
  std::uint64_t rng = spec.seed ^ 0xa02bdbf7bb3c0a7ULL;
  Eigen::VectorXd shift(n);
  for (int d = 0; d < n; ++d)
    shift(d) = double(splitmix64(rng) >> 11) * 0x1.0p-53;

  struct StartResult {
    double value = -1e300;
    Eigen::VectorXd u;
    long evals = 0;
    bool exhausted = false;
  };
  std::vector<StartResult> results(n_total);

  parallel_for(
      n_total,
      [&](int i) {
        Eigen::VectorXd u0(n);
        if (i < n_warm) {
          for (int d = 0; d < n; ++d)
            u0(d) = from_box(std::clamp(warm_starts[i](d), spec.lower(d), spec.upper(d)),
                             spec.lower(d), spec.upper(d));
        } else {
          const int k = i - n_warm;
          for (int d = 0; d < n; ++d) {
            double q = halton(k + 1, halton_prime(d)) + shift(d);
            q -= std::floor(q);
            u0(d) = std::log(clamp01(q, 1e-3) / (1.0 - clamp01(q, 1e-3)));
          }
        }
        NelderMead nm{objective, spec};
        results[i].u = u0;
        nm.run(u0, results[i].value, results[i].u);
        results[i].evals = nm.evals;
        results[i].exhausted = nm.exhausted;
      },
      spec.n_threads);

  Result out;
  out.best_value = -1e300;
  int best_i = 0;
  for (int i = 0; i < n_total; ++i) {
    out.eval_count += results[i].evals;
    out.budget_exhausted = out.budget_exhausted || results[i].exhausted;
    if (results[i].value > out.best_value) {
      out.best_value = results[i].value;
      best_i = i;
    }
  }
  out.best_point.resize(n);
  for (int d = 0; d < n; ++d)
    out.best_point(d) = to_box(results[best_i].u(d), spec.lower(d), spec.upper(d));
  return out;
}

}  // namespace diqkd::optimizer
