#include <benchmark/benchmark.h>

#include "slowfast/averaging.hpp"
#include "slowfast/flow.hpp"
#include "slowfast/graphproc.hpp"

using namespace slowfast;

namespace {

struct Canonical {
  SurfaceSystem sys;
  ReebGraph graph;
  SaddleData saddle;
  CoefficientTable table;
  Canonical() : sys(canonical_sphere_system(0.1)) {
    sys.epsilon = 1e-3;
    sys.delta = 0.2;
    graph = build_reeb_graph(sys);
    saddle = branching_probabilities(sys, graph);
    TableOptions o;
    o.chebyshev_nodes = 24;
    table = tabulate(sys, graph, o);
  }
};

const Canonical& canonical() {
  static const Canonical c;
  return c;
}

void BM_Rk4Step(benchmark::State& state) {
  const SurfaceSystem& sys = canonical().sys;
  const Dynamics d = slow_dynamics(sys);
  Vec3 x = sys.x0;
  for (auto _ : state) {
    x = step(d, x, 0.02 * sys.epsilon, Method::Rk4Projected, nullptr, 1e-9, 50);
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_Rk4Step);

void BM_HeunSdeStep(benchmark::State& state) {
  const SurfaceSystem& sys = canonical().sys;
  const Dynamics d = sde_dynamics(sys);
  Rng rng(1);
  Vec3 x = sys.x0;
  for (auto _ : state) {
    x = step(d, x, 0.02 * sys.epsilon, Method::HeunStratonovich, &rng, 1e-9, 50);
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_HeunSdeStep);

void BM_TraceLevelCurve(benchmark::State& state) {
  const Canonical& c = canonical();
  for (auto _ : state) benchmark::DoNotOptimize(trace_edge_curve(c.sys, c.graph, 1, -0.1).period);
}
BENCHMARK(BM_TraceLevelCurve)->Unit(benchmark::kMillisecond);

void BM_Tabulate(benchmark::State& state) {
  const Canonical& c = canonical();
  TableOptions o;
  o.chebyshev_nodes = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(tabulate(c.sys, c.graph, o).edges.size());
}
BENCHMARK(BM_Tabulate)->Arg(12)->Arg(24)->Unit(benchmark::kMillisecond);

void BM_GraphDiffusion(benchmark::State& state) {
  const Canonical& c = canonical();
  GraphDiffusionConfig cfg;
  cfg.boundary = BoundaryPolicy::Reflect;
  std::uint64_t i = 0;
  for (auto _ : state) {
    Rng rng(2, i++);
    benchmark::DoNotOptimize(simulate_graph_diffusion(c.table, c.graph, c.saddle, 0.2, {2, 0.3}, 1.0, cfg, rng).steps);
  }
}
BENCHMARK(BM_GraphDiffusion)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
