#include <benchmark/benchmark.h>

#include "exfree/analytic.hpp"
#include "exfree/dynamics.hpp"
#include "exfree/fock.hpp"
#include "exfree/metrics.hpp"
#include "exfree/model.hpp"

using namespace exfree;

namespace {

SystemParams params_at(int n) { return SystemParams::from_khz(80, 475, ModeDims{n, n, n}); }

void BM_SparseHamiltonian(benchmark::State& state) {
  const auto p = params_at(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sparse_h_full(p));
}
BENCHMARK(BM_SparseHamiltonian)->Arg(6)->Arg(12)->Arg(16);

void BM_UnitaryTransfer(benchmark::State& state) {
  const auto p = params_at(static_cast<int>(state.range(0)));
  const auto h = sparse_h_full(p);
  const auto psi = fock_state(p.dims, {1, 0, 0});
  const double t = analytic::tau_st(p);
  for (auto _ : state) benchmark::DoNotOptimize(evolve_unitary(h, psi, t));
}
BENCHMARK(BM_UnitaryTransfer)->Arg(6)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_TrotterStep(benchmark::State& state) {
  const auto p = params_at(static_cast<int>(state.range(0)));
  const TrotterStepper stepper(p, analytic::tau_st(p) / 2000.0);
  Vector amps = fock_state(p.dims, {1, 0, 0}).amplitudes();
  for (auto _ : state) {
    stepper.step(amps);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_TrotterStep)->Arg(6)->Arg(8);

void BM_LindbladTransfer(benchmark::State& state) {
  auto p = params_at(static_cast<int>(state.range(0)));
  p.coherence = measured_cavity_coherence();
  const auto h = build_h_full(p);
  const auto ops = collapse_operators(p);
  const DensityMatrix rho(fock_state(p.dims, {1, 0, 0}));
  const auto spec = EvolutionSpec::uniform(0.25 * analytic::tau_st(p), 2, Method::Lindblad);
  for (auto _ : state) benchmark::DoNotOptimize(evolve_lindblad(h, ops, rho, spec));
}
BENCHMARK(BM_LindbladTransfer)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Wigner(benchmark::State& state) {
  const ModeDims dims{static_cast<int>(state.range(0))};
  const DensityMatrix rho(binomial_code_state(BinomialLabel::ZeroL, dims[0]));
  const auto grid = wigner_grid(3.0, 41);
  for (auto _ : state) benchmark::DoNotOptimize(wigner(rho, grid));
}
BENCHMARK(BM_Wigner)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
