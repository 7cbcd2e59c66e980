#include <benchmark/benchmark.h>

#include "lipstab/dtn.hpp"
#include "lipstab/singular.hpp"
#include "lipstab/stability.hpp"

using namespace lipstab;

namespace {

const Admittivity kThree{{cplx{1.5, 0.3}, cplx{2.0, -0.4}, cplx{0.8, 0.2}}, 10.0};

void BM_Assemble(benchmark::State& state) {
  const auto mesh = generate_mesh(build_partition(3, Rect{}, false), 1.0 / state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(assemble(mesh, kThree));
  state.counters["nodes"] = mesh->node_count();
}
BENCHMARK(BM_Assemble)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_DtNMatrix(benchmark::State& state) {
  const auto mesh = generate_mesh(build_partition(3, Rect{}, false), 1.0 / state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(dtn_matrix(mesh, kThree));
  state.counters["boundary"] = mesh->boundary_count();
}
BENCHMARK(BM_DtNMatrix)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_OperatorNorm(benchmark::State& state) {
  const auto d = dtn_matrix(generate_disk_mesh(1.0, 1.0 / state.range(0)), Admittivity{{1.0}, 10.0});
  for (auto _ : state) benchmark::DoNotOptimize(operator_norm(d.matrix, d.w_half));
}
BENCHMARK(BM_OperatorNorm)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_CorrectorSolve(benchmark::State& state) {
  const auto p = build_partition(3, Rect{}, false);
  const auto chain = build_chain(p, 3);
  const DirichletSolver solver(assemble(generate_mesh(p, 1.0 / state.range(0)), kThree));
  for (auto _ : state) benchmark::DoNotOptimize(green_correction(p, chain, solver, Vec2{0.5, 0.6}, 3));
}
BENCHMARK(BM_CorrectorSolve)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_HalfSpaceProbe(benchmark::State& state) {
  const std::vector<double> radii = {0.125, 0.0625, 0.03125};
  const auto a = TwoPhaseCoeffs::make(2.0, 1.0), b = TwoPhaseCoeffs::make(3.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(half_space_probe(a, b, 1.0, radii));
}
BENCHMARK(BM_HalfSpaceProbe)->Unit(benchmark::kMillisecond);

void BM_Reconstruct(benchmark::State& state) {
  const auto mesh = generate_mesh(build_partition(3, Rect{}, false), 1.0 / 16);
  const auto target = dtn_matrix(mesh, kThree);
  const auto guess = Admittivity::uniform(3, 1.0, 10.0);
  for (auto _ : state) benchmark::DoNotOptimize(gauss_newton_reconstruct(target, mesh, guess));
}
BENCHMARK(BM_Reconstruct)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
