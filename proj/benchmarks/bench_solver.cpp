// Structured vs dense solves of the stage-banded operator, and one relaxed
// fixed-point sweep on the default scene.

#include <benchmark/benchmark.h>

#include "simnet/checks.hpp"
#include "simnet/nlsim.hpp"
#include "simnet/optim.hpp"

using namespace simnet;

namespace {

void BM_StructuredSolveStages(benchmark::State& state) {
  auto rng = checks::make_rng(1, static_cast<std::uint64_t>(state.range(0)));
  const auto op = checks::random_stage_operator(state.range(0), 2 * 16, rng);
  const auto b = checks::random_cmatrix(op.size(), 1, rng);
  for (auto _ : state) benchmark::DoNotOptimize(netcore::solve_structured(op, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_StructuredSolveStages)->RangeMultiplier(2)->Range(4, 32)->Complexity(benchmark::oN);

void BM_StructuredSolvePorts(benchmark::State& state) {
  auto rng = checks::make_rng(2, static_cast<std::uint64_t>(state.range(0)));
  const auto op = checks::random_stage_operator(4, 2 * state.range(0), rng);
  const auto b = checks::random_cmatrix(op.size(), 1, rng);
  for (auto _ : state) benchmark::DoNotOptimize(netcore::solve_structured(op, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_StructuredSolvePorts)->RangeMultiplier(2)->Range(8, 64)->Complexity(benchmark::oNCubed);

void BM_DenseSolveStages(benchmark::State& state) {
  auto rng = checks::make_rng(1, static_cast<std::uint64_t>(state.range(0)));
  const auto op = checks::random_stage_operator(state.range(0), 2 * 16, rng);
  const netcore::CMatrix dense = op.to_dense();
  const auto b = checks::random_cmatrix(op.size(), 1, rng);
  for (auto _ : state) benchmark::DoNotOptimize(netcore::CMatrix(dense.partialPivLu().solve(b)));
}
BENCHMARK(BM_DenseSolveStages)->RangeMultiplier(2)->Range(4, 16);

void BM_FixedPointDefaultScene(benchmark::State& state) {
  static const auto sc = scene::build_scene(scene::SceneConfig{});
  const auto law = nlsim::CellLaw::rapp_radial(optim::initial_phases(sc.partition.cells(), 1, 0), RappParams{});
  auto rng = checks::make_rng(3);
  const auto x = linsim::Excitation::incident(checks::random_cmatrix(sc.partition.internal_ports(), 1, rng));
  nlsim::FixedPointOptions opt;
  opt.max_iters = 50;
  opt.tol = 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(nlsim::fixed_point_solve(sc, law, x, opt));
  state.SetItemsProcessed(state.iterations() * opt.max_iters);
}
BENCHMARK(BM_FixedPointDefaultScene)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
