// SPDX-License-Identifier: Apache-2.0
#include <random>

#include <benchmark/benchmark.h>

#include "nflift/bessel.hpp"
#include "nflift/sim.hpp"

namespace {

using namespace nflift;

void BM_BesselRow(benchmark::State& state) {
  const double x = static_cast<double>(state.range(0));
  const int order = static_cast<int>(x) + 30;
  for (auto _ : state) benchmark::DoNotOptimize(BesselRow(order, x).values().data());
}
BENCHMARK(BM_BesselRow)->Arg(5)->Arg(50)->Arg(500);

void BM_BuildDictionary(benchmark::State& state) {
  const auto array = ArrayConfig::half_wavelength(static_cast<int>(state.range(0)), 100e9);
  const LiftingConfig lifting{5, 1, LiftingConfig::uniform_grid(0.1, 6.0, 10)};
  for (auto _ : state) benchmark::DoNotOptimize(build_dictionary(array, lifting).dictionary().data());
}
BENCHMARK(BM_BuildDictionary)->Arg(32)->Arg(64)->Arg(256);

struct Stack {
  ArrayConfig array = ArrayConfig::half_wavelength(64, 100e9);
  LiftingConfig lifting{5, 1, LiftingConfig::uniform_grid(0.1, 6.0, 10)};
  BesselVandermondeOperator op{array, lifting};
  SensingStack stack = build_sensing(draw_combiners(64, 4, 8, 1), op);
};

void BM_Forward(benchmark::State& state) {
  const Stack s;
  const Eigen::MatrixXcd x = Eigen::MatrixXcd::Random(s.lifting.num_bins(), s.lifting.num_harmonics());
  for (auto _ : state) benchmark::DoNotOptimize(s.stack.forward(x).data());
}
BENCHMARK(BM_Forward);

void BM_Adjoint(benchmark::State& state) {
  const Stack s;
  const Eigen::VectorXcd q = Eigen::VectorXcd::Random(s.stack.num_measurements());
  for (auto _ : state) benchmark::DoNotOptimize(s.stack.adjoint(q).data());
}
BENCHMARK(BM_Adjoint);

void BM_SolveSmall(benchmark::State& state) {
  Scenario scn;
  scn.array = ArrayConfig::half_wavelength(32, 100e9);
  scn.lifting = LiftingConfig{5, 1, LiftingConfig::inverse_uniform_grid(0.1, 6.0, 6)};
  PathDrawOptions o;
  o.num_paths = 2;
  scn.paths = draw_paths(scn.lifting, o, 1);
  const MeasurementParams params;
  const Workspace ws = make_workspace(scn.array, scn.lifting, params);
  const SdpProblem problem = assemble(ws.stack, generate(ws, scn, params).measurement);
  for (auto _ : state) benchmark::DoNotOptimize(solve(problem).objective);
}
BENCHMARK(BM_SolveSmall)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
