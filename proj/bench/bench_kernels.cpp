// Serial reference vs OpenMP path for the parallel kernels. Argument 0 runs
// the serial path, 1 the parallel one. Thread count follows EMUCAL_THREADS.

#include <benchmark/benchmark.h>

#include "emucal/config.hpp"
#include "emucal/dimred.hpp"
#include "emucal/emulator.hpp"
#include "emucal/experiment.hpp"
#include "emucal/inversion.hpp"
#include "emucal/simulator.hpp"

using namespace emucal;

namespace {

ExecPolicy policy(const benchmark::State& state) {
  return state.range(0) == 0 ? ExecPolicy::Serial : ExecPolicy::Parallel;
}

Config bench_config() {
  Config c = load_config(EMUCAL_SOURCE_DIR "/config/desk.json");
  c.inversion.n_iter = 2000;
  return c;
}

const TrainingResult& trained() {
  static const TrainingResult t = train_pipeline(bench_config());
  return t;
}

void BM_SimulateH(benchmark::State& state) {
  const Config c = load_config(EMUCAL_SOURCE_DIR "/config/reference.json");
  const Domain domain = c.domain();
  const auto theta = c.space.default_theta();
  for (auto _ : state)
    benchmark::DoNotOptimize(simulate_H(theta, c.space, domain, c.simulator_seed, c.simulator, policy(state)));
}

void BM_ReduceRuns(benchmark::State& state) {
  const auto& t = trained();
  for (auto _ : state) benchmark::DoNotOptimize(reduce_runs(t.runs, {}, policy(state)));
}

void BM_FitEmulator(benchmark::State& state) {
  const auto& t = trained();
  const Config c = bench_config();
  for (auto _ : state)
    benchmark::DoNotOptimize(fit_emulator(t.design, c.space, t.reduction.tables, c.stepwise, policy(state)));
}

void BM_RunChains(benchmark::State& state) {
  const auto& t = trained();
  const Config c = bench_config();
  const auto H = simulate_H(c.space.default_theta(), c.space, t.domain, c.simulator_seed, c.simulator);
  InversionProblem p;
  p.y = synthesize_observations(H, Eigen::VectorXd::Ones(t.domain.n_regions()), 0.5, 1);
  p.artifacts = &t.artifacts;
  for (auto _ : state) benchmark::DoNotOptimize(run_chains(p, c.inversion, 4, policy(state)));
}

}  // namespace

BENCHMARK(BM_SimulateH)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReduceRuns)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitEmulator)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunChains)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  set_thread_count(threads_from_env());
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
