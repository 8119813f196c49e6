#include <benchmark/benchmark.h>

#include "diqkd/finitekey.hpp"
#include "diqkd/measurements.hpp"
#include "diqkd/photonics.hpp"
#include "diqkd/protocol.hpp"

using namespace diqkd;

static void bm_dense_displacement(benchmark::State& state) {
  const fock::FockDim dim(20);
  for (auto _ : state) {
    auto d = fock::displacement_matrix(0.9, 0.3, dim);
    benchmark::DoNotOptimize(d.data());
  }
}
BENCHMARK(bm_dense_displacement);

static void bm_qubit_povm(benchmark::State& state) {
  measurements::MeasurementSetting m{0.4, 0.7, 0.8, -1.1, 0.95};
  for (auto _ : state) {
    auto povm = measurements::qubit_povm(m);
    benchmark::DoNotOptimize(povm.pi_click.data());
  }
}
BENCHMARK(bm_qubit_povm);

static void bm_chsh_objective(benchmark::State& state) {
  const auto rho = photonics::analytic_heralded_density(0.0, 0.9);
  protocol::ProtocolSettings st;
  st.alice = {measurements::MeasurementSetting{0.3, 0.1, 0.6, 0.4, 0.95},
              measurements::MeasurementSetting{0.2, -0.8, 0.7, 1.9, 0.95}};
  st.bob = {measurements::MeasurementSetting{0.4, 0.9, 0.5, -0.3, 0.95},
            measurements::MeasurementSetting{0.1, 2.0, 0.8, 0.8, 0.95},
            measurements::MeasurementSetting{0.3, 0.3, 0.6, 0.1, 0.95}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(protocol::chsh_score(rho, st));
  }
}
BENCHMARK(bm_chsh_objective);

static void bm_heralded_oracle(benchmark::State& state) {
  photonics::SetupParams p;
  p.L = 100.0;
  for (auto _ : state) {
    auto hs = photonics::heralded_state_oracle(p);
    benchmark::DoNotOptimize(hs.herald_prob);
  }
}
BENCHMARK(bm_heralded_oracle);

static void bm_key_length(benchmark::State& state) {
  finitekey::FiniteSizeParams params;
  params.n = 1e12;
  params.gamma = 2e-4;
  params.t = 0.8;
  params.alpha_p = 1.0001;
  params.alpha_pp = 1.00001;
  params.q_n = 0.06;
  for (auto _ : state) {
    benchmark::DoNotOptimize(finitekey::key_length(2.4, 0.52, params).ell);
  }
}
BENCHMARK(bm_key_length);

BENCHMARK_MAIN();
