#include <benchmark/benchmark.h>

#include <memory>

#include "bmpc/barrier.hpp"
#include "bmpc/condense.hpp"
#include "bmpc/explicit_mpc.hpp"
#include "bmpc/problem_io.hpp"
#include "bmpc/rollout.hpp"
#include "bmpc/smoothing.hpp"

using namespace bmpc;

namespace {

const CondensedQp& di() {
  static const CondensedQp qp = condense(double_integrator_spec());
  return qp;
}

const Vector kState{{-6.0, 2.0}};

void BM_Condense(benchmark::State& state) {
  const auto spec = double_integrator_spec(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(condense(spec));
}
BENCHMARK(BM_Condense)->Arg(10)->Arg(40);

void BM_BarrierSolveCold(benchmark::State& state) {
  BarrierConfig cfg;
  cfg.eta = std::pow(10.0, -static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_barrier(di(), cfg, kState));
}
BENCHMARK(BM_BarrierSolveCold)->DenseRange(0, 4, 2)->Unit(benchmark::kMicrosecond);

void BM_BarrierSolveWarm(benchmark::State& state) {
  BarrierConfig cfg;
  cfg.eta = 1e-2;
  const Vector warm = solve_barrier(di(), cfg, kState).u_eta;
  const Vector x = kState + Vector{{1e-3, -1e-3}};
  for (auto _ : state) benchmark::DoNotOptimize(solve_barrier(di(), cfg, x, warm));
}
BENCHMARK(BM_BarrierSolveWarm)->Unit(benchmark::kMicrosecond);

void BM_PolicyJacobian(benchmark::State& state) {
  BarrierConfig cfg;
  cfg.eta = 0.1;
  const Vector u = solve_barrier(di(), cfg, kState).u_eta;
  const bool woodbury = state.range(0) != 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(woodbury ? policy_jacobian_woodbury(di(), cfg.eta, kState, u)
                                      : policy_jacobian(di(), cfg.eta, kState, u));
  }
  state.SetLabel(woodbury ? "woodbury" : "direct");
}
BENCHMARK(BM_PolicyJacobian)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_ExactQp(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(solve_qp(di(), kState));
}
BENCHMARK(BM_ExactQp)->Unit(benchmark::kMicrosecond);

void BM_ExplicitCached(benchmark::State& state) {
  PieceCache cache;
  eval_explicit(di(), kState, cache);
  for (auto _ : state) benchmark::DoNotOptimize(eval_explicit(di(), kState, cache));
}
BENCHMARK(BM_ExplicitCached)->Unit(benchmark::kMicrosecond);

void BM_RandomizedPolicy(benchmark::State& state) {
  PieceCache cache;
  const SmoothingSpec spec{NoiseDistribution::kGaussian, 1.0, static_cast<std::size_t>(state.range(0)), 1};
  for (auto _ : state) benchmark::DoNotOptimize(randomized_policy(di(), spec, kState, cache));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RandomizedPolicy)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_ClosedLoop(benchmark::State& state) {
  BarrierConfig cfg;
  cfg.eta = 0.1;
  const auto spec = double_integrator_spec();
  const auto policy = make_barrier_policy(std::make_shared<const CondensedQp>(di()), cfg);
  for (auto _ : state) benchmark::DoNotOptimize(closed_loop(spec, policy, kState, 20));
}
BENCHMARK(BM_ClosedLoop)->Unit(benchmark::kMillisecond);

void BM_PieceCensus(benchmark::State& state) {
  const StateGrid grid = StateGrid::uniform(Vector{{-10.0, -10.0}}, Vector{{10.0, 10.0}}, 50);
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_pieces(di(), grid, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_PieceCensus)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace
BENCHMARK_MAIN();
