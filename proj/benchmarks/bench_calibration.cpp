#include <benchmark/benchmark.h>

#include "ivuscal/calibration.hpp"
#include "ivuscal/phantom.hpp"
#include "ivuscal/sim.hpp"

using namespace ivuscal;

namespace {

CalibrationProblem make_problem(std::uint64_t seed) {
  const PhantomModel phantom = default_phantom();
  const CalibrationParams gt = random_calibration(CalibrationRanges{}, seed);
  AcquisitionSpec spec;
  spec.pose_count = 147;
  spec.extra_azimuths_deg = {60.0, 90.0, 120.0};
  spec.slab_half_thickness_mm = 1e-4;
  spec.seed = seed + 1;
  const TrackedSequence seq = simulate_acquisition(phantom, gt, spec);
  return CalibrationProblem::assemble(phantom, seq.observations, seq.poses);
}

}  // namespace

static void BM_RegisteredError(benchmark::State& state) {
  const CalibrationProblem problem = make_problem(11);
  const CalibrationParams params;
  for (auto _ : state) {
    benchmark::DoNotOptimize(registered_error(problem, params));
  }
}
BENCHMARK(BM_RegisteredError);

static void BM_ObjectiveGradient(benchmark::State& state) {
  const CalibrationProblem problem = make_problem(12);
  const CalibrationParams params;
  for (auto _ : state) {
    benchmark::DoNotOptimize(objective_gradient(problem, params));
  }
}
BENCHMARK(BM_ObjectiveGradient);

static void BM_SolveIterations(benchmark::State& state) {
  const CalibrationProblem problem = make_problem(13);
  OptimizerConfig config;
  config.max_iters = static_cast<int>(state.range(0));
  config.epsilon_mm2 = 0.0;  // run the full budget
  config.plateau_rel_tol = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve(problem, config));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SolveIterations)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
