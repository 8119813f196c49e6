#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>

#include "diqkd/optimize.hpp"

using namespace diqkd;

namespace {

optimizer::SearchSpec box(int dims, double lo, double hi) {
  optimizer::SearchSpec s;
  s.lower = Eigen::VectorXd::Constant(dims, lo);
  s.upper = Eigen::VectorXd::Constant(dims, hi);
  return s;
}

}  // namespace

TEST_CASE("smooth unimodal objective is located precisely") {
  auto s = box(4, 0.0, 1.0);
  s.n_starts = 8;
  s.seed = 1;
  const auto res = optimizer::maximize(
      [](const Eigen::VectorXd& x) { return -(x.array() - 0.3).square().sum(); }, s);
  for (int d = 0; d < 4; ++d) CHECK(std::abs(res.best_point(d) - 0.3) < 1e-4);
  CHECK(res.best_value > -1e-8);
}

TEST_CASE("fixed seed gives bit-identical results") {
  auto s = box(3, -1.0, 2.0);
  s.n_starts = 6;
  s.seed = 99;
  const auto obj = [](const Eigen::VectorXd& x) {
    return std::sin(3 * x(0)) + std::cos(2 * x(1)) - x(2) * x(2);
  };
  const auto a = optimizer::maximize(obj, s);
  const auto b = optimizer::maximize(obj, s);
  CHECK(a.best_value == b.best_value);
  CHECK((a.best_point - b.best_point).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.eval_count == b.eval_count);
}

TEST_CASE("multimodal landscape: multi-start reaches the global optimum") {
  // Rastrigin-style bumps centered at 0.3 per coordinate; global maximum 0.
  auto s = box(4, 0.0, 1.0);
  s.n_starts = 32;
  s.seed = 5;
  const auto obj = [](const Eigen::VectorXd& x) {
    double v = 0.0;
    for (int d = 0; d < x.size(); ++d) {
      const double y = 1.5 * (x(d) - 0.3);
      v -= y * y - std::cos(2.0 * M_PI * y) + 1.0;
    }
    return v;
  };
  const auto res = optimizer::maximize(obj, s);
  CHECK(res.best_value > -1e-3);
}

TEST_CASE("all queried points stay within the box") {
  auto s = box(3, 0.2, 0.9);
  s.n_starts = 8;
  s.seed = 3;
  std::atomic<bool> violated{false};
  optimizer::maximize(
      [&](const Eigen::VectorXd& x) {
        for (int d = 0; d < 3; ++d)
          if (x(d) < 0.2 || x(d) > 0.9) violated = true;
        return -x.squaredNorm();
      },
      s);
  CHECK_FALSE(violated.load());
}

TEST_CASE("warm starts dominate") {
  auto s = box(5, -2.0, 2.0);
  s.n_starts = 1;
  s.seed = 17;
  s.max_evals_per_start = 200;  // starved on purpose
  const auto obj = [](const Eigen::VectorXd& x) { return -(x.array() - 1.7).square().sum(); };
  const Eigen::VectorXd opt = Eigen::VectorXd::Constant(5, 1.7);
  const auto res = optimizer::maximize(obj, s, {opt});
  CHECK(res.best_value >= obj(opt) - 1e-9);
}

TEST_CASE("exhausted budget is a status, not a failure") {
  auto s = box(6, 0.0, 1.0);
  s.n_starts = 2;
  s.seed = 7;
  s.max_evals_per_start = 20;
  const auto res = optimizer::maximize(
      [](const Eigen::VectorXd& x) { return -x.squaredNorm(); }, s);
  CHECK(res.budget_exhausted);
  CHECK(res.eval_count > 0);
}

TEST_CASE("spec validation") {
  optimizer::SearchSpec s;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.lower = Eigen::VectorXd::Constant(2, 1.0);
  s.upper = Eigen::VectorXd::Constant(2, 0.0);
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.upper = Eigen::VectorXd::Constant(2, 2.0);
  s.n_starts = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("result independent of worker count") {
  auto s = box(4, -1.0, 1.0);
  s.n_starts = 12;
  s.seed = 23;
  const auto obj = [](const Eigen::VectorXd& x) {
    return std::cos(4 * x(0)) * std::cos(3 * x(1)) - x(2) * x(2) + 0.3 * x(3);
  };
  auto s1 = s;
  s1.n_threads = 1;
  auto s2 = s;
  s2.n_threads = 4;
  const auto a = optimizer::maximize(obj, s1);
  const auto b = optimizer::maximize(obj, s2);
  CHECK(a.best_value == b.best_value);
  CHECK((a.best_point - b.best_point).cwiseAbs().maxCoeff() == 0.0);
}
