#include <cmath>

#include <doctest.h>

#include "slowfast/averaging.hpp"

using namespace slowfast;

namespace {

struct Setup {
  SurfaceSystem sys;
  ReebGraph graph;
  SaddleData saddle;
  explicit Setup(double beta) : sys(canonical_sphere_system(beta)) {
    graph = build_reeb_graph(sys);
    saddle = branching_probabilities(sys, graph);
  }
};

const Setup& symmetric() {
  static const Setup s(0.0);
  return s;
}

const Setup& asymmetric() {
  static const Setup s(0.1);
  return s;
}

}  // namespace

TEST_SUITE("averaging") {
  TEST_CASE("frozen gluing weights and branching probabilities, symmetric") {
    const SaddleData& d = symmetric().saddle;
    CHECK(d.symmetric);
    CHECK(d.beta.at(1) == doctest::Approx(2.666649).epsilon(1e-5));
    CHECK(d.beta.at(3) == doctest::Approx(2.666649).epsilon(1e-5));
    CHECK(d.beta.at(2) == doctest::Approx(5.333297).epsilon(1e-5));
    CHECK(d.p.at(1) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(d.q.at(1) == doctest::Approx(0.25).epsilon(1e-5));
    CHECK(d.q.at(3) == doctest::Approx(0.25).epsilon(1e-5));
    CHECK(d.q.at(2) == doctest::Approx(0.5).epsilon(1e-5));
  }

  TEST_CASE("frozen gluing weights and branching probabilities, asymmetric") {
    const SaddleData& d = asymmetric().saddle;
    CHECK_FALSE(d.symmetric);
    CHECK(d.beta.at(1) == doctest::Approx(3.469075).epsilon(1e-5));
    CHECK(d.beta.at(3) == doctest::Approx(1.904593).epsilon(1e-5));
    CHECK(d.beta.at(2) == doctest::Approx(5.373668).epsilon(1e-5));
    CHECK(d.p.at(1) == doctest::Approx(0.645569).epsilon(1e-5));
    CHECK(d.p_surface.at(1) == doctest::Approx(0.645639).epsilon(1e-5));
    CHECK(d.q.at(1) == doctest::Approx(0.322785).epsilon(1e-5));
    CHECK(d.q.at(3) == doctest::Approx(0.177215).epsilon(1e-5));
    CHECK(d.q.at(2) == doctest::Approx(0.5).epsilon(1e-5));
    CHECK(d.flux_surface.at(1) / d.flux_surface.at(3) == doctest::Approx(1.82198).epsilon(1e-5));
  }

  TEST_CASE("structural invariants at the saddle") {
    for (const Setup* s : {&symmetric(), &asymmetric()}) {
      const SaddleData& d = s->saddle;
      CHECK(d.additivity_error < 1e-4);
      CHECK(d.drift_additivity_error < 1e-3);
      CHECK(d.route_discrepancy < 1e-3);
      double sp = 0.0, sq = 0.0;
      for (const auto& [k, v] : d.p) sp += v;
      for (const auto& [k, v] : d.q) sq += v;
      CHECK(sp == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(sq == doctest::Approx(1.0).epsilon(1e-12));
      for (const auto& [k, v] : d.flux_line) CHECK(v > 0.0);
    }
  }

  TEST_CASE("line and surface routes agree inside an edge") {
    const Setup& s = asymmetric();
    const StokesIntegrator stokes(s.sys);
    for (int k : {1, 3}) {
      const double g = 0.5 * (s.graph.edge(k).g_lo + s.graph.edge(k).g_hi);
      const double line = drift_coefficient(s.sys, s.graph, k, g);
      const double surf = drift_coefficient_stokes(s.sys, s.graph, k, g, stokes);
      CHECK(line < 0.0);
      CHECK(surf == doctest::Approx(line).epsilon(1e-3));
    }
  }

  TEST_CASE("drift is linear in the perturbation") {
    const Setup& s = asymmetric();
    SurfaceSystem doubled = canonical_sphere_system(0.1, 2.0);
    const double g = 0.5 * (s.graph.edge(1).g_lo + s.graph.edge(1).g_hi);
    CHECK(drift_coefficient(doubled, s.graph, 1, g) ==
          doctest::Approx(2.0 * drift_coefficient(s.sys, s.graph, 1, g)).epsilon(1e-9));
  }

  TEST_CASE("metastability thresholds") {
    const MetastableReport sym = metastable_thresholds(symmetric().sys, symmetric().graph, symmetric().saddle);
    CHECK(sym.tie);
    CHECK(sym.lambda.at(1) == doctest::Approx(0.25).epsilon(1e-4));
    CHECK(sym.lambda.at(3) == doctest::Approx(0.25).epsilon(1e-4));
    const MetastableReport r = metastable_thresholds(asymmetric().sys, asymmetric().graph, asymmetric().saddle);
    CHECK_FALSE(r.tie);
    CHECK(r.deep_edge == 1);
    CHECK(r.shallow_edge == 3);
    CHECK(r.upper_edge == 2);
    CHECK(r.lambda.at(1) == doctest::Approx(0.342390).epsilon(1e-5));
    CHECK(r.lambda.at(3) == doctest::Approx(0.169315).epsilon(1e-5));
    for (const auto& [k, c] : r.relative_change) CHECK(c < 0.01);
  }

  TEST_CASE("decision rule") {
    const MetastableReport r = metastable_thresholds(asymmetric().sys, asymmetric().graph, asymmetric().saddle);
    const double ls = r.lambda.at(3), ld = r.lambda.at(1);
    CHECK(r.decide(3, 0.5 * ls).distribution.at(3) == doctest::Approx(1.0));
    CHECK(r.decide(1, 0.5 * ls).distribution.at(1) == doctest::Approx(1.0));
    CHECK(r.decide(3, 0.9 * ld).distribution.at(1) == doctest::Approx(1.0));
    CHECK(r.decide(2, 0.9 * ld).distribution.at(1) == doctest::Approx(1.0));
    CHECK(r.decide(3, 1.5 * ld).distribution.at(1) == doctest::Approx(1.0));
    CHECK(r.decide(2, 1.5 * ld).distribution.at(1) == doctest::Approx(1.0));
    const auto below = r.decide(2, 0.5 * ls).distribution;
    CHECK(below.at(1) == doctest::Approx(r.p.at(1)));
  }

  TEST_CASE("averaged trajectory reaches the saddle at the frozen time") {
    const Setup& s = asymmetric();
    const GraphCoordinate start = classify_point(s.sys, s.graph, s.sys.x0);
    CHECK(start.edge == 2);
    SlowOdeOptions o;
    o.dt = 1e-4;
    const SlowPath path = solve_slow_ode(s.sys, s.graph, start, 2.0, 1, o);
    CHECK(path.tau0 == doctest::Approx(0.5028).epsilon(1e-3));
    CHECK(path.well == 1);
    for (std::size_t i = 1; i < path.g.size(); ++i)
      if (path.edge[i] == path.edge[i - 1]) CHECK(path.g[i] <= path.g[i - 1] + 1e-12);
  }

  TEST_CASE("tabulated coefficients interpolate the line functionals") {
    const Setup& s = asymmetric();
    TableOptions o;
    o.chebyshev_nodes = 24;
    const CoefficientTable table = tabulate(s.sys, s.graph, o);
    for (int k : {1, 2, 3}) {
      const auto& e = table.at(k);
      const double g = e.g_lo + 0.37 * (std::min(e.g_hi, 1.4) - e.g_lo);
      CHECK(e.drift_at(g) == doctest::Approx(drift_coefficient(s.sys, s.graph, k, g)).epsilon(1e-4));
    }
    const CoefficientTable half = scale_drift(table, 0.5);
    CHECK(half.at(1).drift_at(-0.1) == doctest::Approx(0.5 * table.at(1).drift_at(-0.1)));
  }
}
