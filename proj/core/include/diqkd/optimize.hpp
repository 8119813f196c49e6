#pragma once

// Bounded derivative-free maximization: adaptive Nelder-Mead restarted from
// scrambled low-discrepancy points inside the box. Box constraints are
// enforced through a smooth logit transform, so the simplex works in an
// unconstrained space. Deterministic for a fixed seed, independent of the
// number of worker threads.

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace diqkd::optimizer {

struct SearchSpec {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  int n_starts = 32;
  std::uint64_t seed = 0;
  int max_evals_per_start = 4000;
  double tol = 1e-10;
  int n_threads = 0;  // 0: DIQKD_THREADS or hardware concurrency

  int dims() const { return static_cast<int>(lower.size()); }
  void validate() const;
};

struct Result {
  double best_value = 0.0;
  Eigen::VectorXd best_point;
  long eval_count = 0;
  bool budget_exhausted = false;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

// Maximizes objective over the box. warm_starts are additional start points
// (clamped into the box) evaluated before the low-discrepancy ones.
Result maximize(const Objective& objective, const SearchSpec& spec,
                const std::vector<Eigen::VectorXd>& warm_starts = {});

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace diqkd::optimizer
