#include <cmath>

#include <doctest.h>

#include "slowfast/graphproc.hpp"

using namespace slowfast;

namespace {

struct Setup {
  SurfaceSystem sys = canonical_sphere_system(0.1);
  ReebGraph graph;
  SaddleData saddle;
  CoefficientTable table;
  Setup() {
    graph = build_reeb_graph(sys);
    saddle = branching_probabilities(sys, graph);
    TableOptions o;
    o.chebyshev_nodes = 24;
    table = tabulate(sys, graph, o);
  }
};

const Setup& setup() {
  static const Setup s;
  return s;
}

}  // namespace

TEST_SUITE("graphproc") {
  TEST_CASE("frozen vertex exit law equals the normalised gluing weights") {
    const Setup& s = setup();
    const CoefficientTable frozen = frozen_vertex_model(s.graph, s.saddle);
    const std::map<int, double> window = {{1, 0.04}, {2, 0.04}, {3, 0.04}};
    for (double delta : {0.1, 0.3}) {
      const auto law = exit_law_bvp(frozen, s.graph, s.saddle, delta, window);
      double sum = 0.0;
      for (const auto& [k, v] : law) {
        sum += v;
        CHECK(v == doctest::Approx(s.saddle.q.at(k)).epsilon(1e-6));
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("exit law with drift sums to one and favours the downhill edges") {
    const Setup& s = setup();
    const std::map<int, double> window = {{1, 0.02}, {2, 0.02}, {3, 0.02}};
    const auto law = exit_law_bvp(s.table, s.graph, s.saddle, 0.05, window);
    double sum = 0.0;
    for (const auto& [k, v] : law) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(law.at(1) + law.at(3) > s.saddle.q.at(1) + s.saddle.q.at(3));
  }

  TEST_CASE("graph diffusion is reproducible per seed") {
    const Setup& s = setup();
    GraphDiffusionConfig cfg;
    cfg.boundary = BoundaryPolicy::Reflect;
    const GraphCoordinate start{2, 0.3};
    Rng a(5, 1), b(5, 1), c(5, 2);
    const GraphPath pa = simulate_graph_diffusion(s.table, s.graph, s.saddle, 0.2, start, 1.0, cfg, a);
    const GraphPath pb = simulate_graph_diffusion(s.table, s.graph, s.saddle, 0.2, start, 1.0, cfg, b);
    const GraphPath pc = simulate_graph_diffusion(s.table, s.graph, s.saddle, 0.2, start, 1.0, cfg, c);
    CHECK(pa.final().edge == pb.final().edge);
    CHECK(pa.final().g == pb.final().g);
    CHECK(pa.final().g != pc.final().g);
    for (const auto& smp : pa.samples) CHECK(s.graph.contains(smp.edge, smp.g));
  }

  TEST_CASE("stop rule and absorption") {
    const Setup& s = setup();
    GraphDiffusionConfig cfg;
    cfg.stop = [&](int edge, double g) { return edge != 2 && g < s.saddle.g_saddle - 0.05; };
    Rng rng(8);
    const GraphPath p = simulate_graph_diffusion(s.table, s.graph, s.saddle, 0.1, {2, 0.3}, 50.0, cfg, rng);
    CHECK(p.stopped);
    CHECK(p.final().edge != 2);
    CHECK_FALSE(p.branches.empty());
    GraphDiffusionConfig absorb;
    Rng r2(9);
    const GraphPath q = simulate_graph_diffusion(s.table, s.graph, s.saddle, 3.0, {2, 1.45}, 50.0, absorb, r2);
    CHECK(q.absorbed);
  }

  TEST_CASE("limit process branches with the computed probabilities") {
    const Setup& s = setup();
    const int runs = 4000;
    int deep = 0;
    for (int i = 0; i < runs; ++i) {
      Rng rng(31, static_cast<std::uint64_t>(i));
      LimitProcessOptions o;
      o.record_every = 0;
      const GraphPath p = simulate_limit_process(s.table, s.graph, s.saddle, {2, 0.5}, 1.0, rng, o);
      REQUIRE(p.branches.size() == 1);
      deep += p.final().edge == 1;
    }
    const double f = static_cast<double>(deep) / runs, p1 = s.saddle.p.at(1);
    CHECK(std::abs(f - p1) < 4.0 * std::sqrt(p1 * (1 - p1) / runs));
  }
}
