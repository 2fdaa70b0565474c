#include <benchmark/benchmark.h>

#include <vector>

#include "mfgs/core.hpp"
#include "mfgs/envs.hpp"
#include "mfgs/rng.hpp"
#include "mfgs/solvers.hpp"

namespace {

mfgs::Environment bench_env() { return mfgs::make_beach_bar(20, 8, 0.1, 10); }

void BM_InducedMeanField(benchmark::State& state) {
  const mfgs::Environment env = bench_env();
  const mfgs::Policy policy = mfgs::uniform_policy(env);
  for (auto _ : state) benchmark::DoNotOptimize(mfgs::induced_mean_field(env, policy));
}
BENCHMARK(BM_InducedMeanField);

void BM_BestResponse(benchmark::State& state) {
  const mfgs::Environment env = bench_env();
  const mfgs::MeanFieldFlow flow = mfgs::induced_mean_field(env, mfgs::uniform_policy(env));
  for (auto _ : state) benchmark::DoNotOptimize(mfgs::best_response(env, flow));
}
BENCHMARK(BM_BestResponse);

void BM_Exploitability(benchmark::State& state) {
  const mfgs::Environment env = bench_env();
  const mfgs::Policy policy = mfgs::uniform_policy(env);
  for (auto _ : state) benchmark::DoNotOptimize(mfgs::exploitability(env, policy));
}
BENCHMARK(BM_Exploitability);

void BM_FictitiousPlayStep(benchmark::State& state) {
  const mfgs::Environment env = bench_env();
  mfgs::FictitiousPlayRun run(env);
  for (auto _ : state) run.step();
}
BENCHMARK(BM_FictitiousPlayStep);

void BM_MirrorDescentStep(benchmark::State& state) {
  const mfgs::Environment env = bench_env();
  mfgs::MirrorDescentRun run(env, 1.0);
  for (auto _ : state) run.step();
}
BENCHMARK(BM_MirrorDescentStep);

void BM_MfomoGradient(benchmark::State& state) {
  const mfgs::Environment env = mfgs::make_random_linear(1, 5, 8, 4);
  const mfgs::MfomoPoint point = mfgs::MfomoPoint::initial(env);
  for (auto _ : state) benchmark::DoNotOptimize(mfgs::mfomo_gradient(env, point));
}
BENCHMARK(BM_MfomoGradient);

void BM_ProjectSimplex(benchmark::State& state) {
  mfgs::Rng rng(7);
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (auto& x : v) x = rng.uniform(-2.0, 2.0);
  std::vector<double> scratch(v.size());
  for (auto _ : state) {
    scratch = v;
    mfgs::project_simplex_inplace(scratch);
    benchmark::DoNotOptimize(scratch.data());
  }
}
BENCHMARK(BM_ProjectSimplex)->Arg(16)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
