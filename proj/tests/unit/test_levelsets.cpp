#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "slowfast/levelsets.hpp"

using namespace slowfast;

namespace {

const ReebGraph& symmetric_graph() {
  static const SurfaceSystem sys = canonical_sphere_system(0.0);
  static const ReebGraph g = build_reeb_graph(sys);
  return g;
}

const ReebGraph& asymmetric_graph() {
  static const SurfaceSystem sys = canonical_sphere_system(0.1);
  static const ReebGraph g = build_reeb_graph(sys);
  return g;
}

int count(const std::vector<CriticalPoint>& cps, CriticalKind k) {
  return static_cast<int>(std::count_if(cps.begin(), cps.end(), [k](const auto& c) { return c.kind == k; }));
}

}  // namespace

TEST_SUITE("levelsets") {
  TEST_CASE("critical points of the symmetric example") {
    const SurfaceSystem sys = canonical_sphere_system(0.0);
    const auto cps = find_critical_points(sys);
    CHECK(count(cps, CriticalKind::Minimum) == 2);
    CHECK(count(cps, CriticalKind::Saddle) == 1);
    CHECK(count(cps, CriticalKind::Maximum) == 1);
    for (const auto& c : cps) {
      CHECK(std::abs(sys.F(c.x) - sys.z) < 1e-12);
      if (c.kind == CriticalKind::Minimum) {
        // x1 = ±sqrt(3)/2, x3 = -1/2
        CHECK(c.g == doctest::Approx(-0.25).epsilon(1e-10));
        CHECK(std::abs(c.x[0]) == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-8));
      }
      if (c.kind == CriticalKind::Saddle) CHECK(c.g == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
      if (c.kind == CriticalKind::Maximum) CHECK(c.g == doctest::Approx(2.0).epsilon(1e-10));
      CHECK((sys.G.gradient(c.x) - c.mu * sys.F.gradient(c.x)).norm() < 1e-10);
    }
  }

  TEST_CASE("Reeb graph shape") {
    for (const ReebGraph* g : {&symmetric_graph(), &asymmetric_graph()}) {
      CHECK(g->edges.size() == 3);
      CHECK(g->saddles().size() == 1);
      CHECK(g->euler_characteristic() == 1);
      CHECK(g->g_P == doctest::Approx(1.5));
      const int s = g->saddles().front();
      CHECK(g->lower_edges(s).size() == 2);
      CHECK(g->upper_edges(s).size() == 1);
      CHECK(g->upper_edges(s).front() == 2);
      for (const auto& e : g->edges) CHECK(e.g_lo < e.g_hi);
    }
  }

  TEST_CASE("asymmetric wells have distinct depths") {
    const ReebGraph& g = asymmetric_graph();
    const double d1 = g.edge(1).g_lo, d3 = g.edge(3).g_lo;
    CHECK(d1 < d3);
    CHECK(g.edge(1).g_hi == doctest::Approx(g.edge(3).g_hi));
  }

  TEST_CASE("traced level curves close and stay on both level sets") {
    const SurfaceSystem sys = canonical_sphere_system(0.1);
    const ReebGraph& g = asymmetric_graph();
    for (int k : {1, 2, 3}) {
      const double level = 0.5 * (g.edge(k).g_lo + std::min(g.edge(k).g_hi, 1.0));
      const LevelCurve c = trace_edge_curve(sys, g, k, level);
      CHECK(c.period > 0.0);
      CHECK(c.closure_error < 1e-8);
      CHECK(c.max_level_error < 1e-10);
      CHECK(c.max_surface_error < 1e-10);
      // the time integral of |fast field| is the arc length; the stored length is the chord sum
      const double len = line_functional(c, [&](const Vec3& x) { return fast_field(sys, x).norm(); });
      CHECK(len == doctest::Approx(c.length).epsilon(1e-5));
    }
  }

  TEST_CASE("height circles have period 2 pi") {
    const SurfaceSystem sys = sphere_height_system();
    for (double h : {-0.8, -0.2, 0.4, 0.9}) {
      const double r = std::sqrt(1.0 - h * h);
      const LevelCurve c = trace_level_curve(sys, h, Vec3(r, 0.0, h));
      CHECK(c.period == doctest::Approx(2.0 * M_PI).epsilon(1e-8));
      CHECK(c.length == doctest::Approx(2.0 * M_PI * r).epsilon(1e-5));
    }
  }

  TEST_CASE("classification follows the graph") {
    const SurfaceSystem sys = canonical_sphere_system(0.1);
    const ReebGraph& g = asymmetric_graph();
    for (int k : {1, 2, 3}) {
      const double level = 0.5 * (g.edge(k).g_lo + std::min(g.edge(k).g_hi, 1.0));
      const Vec3 x = edge_seed(sys, g, k, level);
      CHECK(std::abs(sys.G(x) - level) < 1e-10);
      const GraphCoordinate c = classify_point(sys, g, x);
      CHECK(c.edge == k);
      CHECK(c.g == doctest::Approx(level));
    }
    CHECK(g.rho(1, g.edge(1).g_lo, 3, g.edge(3).g_lo) ==
          doctest::Approx((g.edge(1).g_hi - g.edge(1).g_lo) + (g.edge(3).g_hi - g.edge(3).g_lo)));
  }

  TEST_CASE("gradient descent reaches a minimum") {
    const SurfaceSystem sys = canonical_sphere_system(0.0);
    const Vec3 m = descend_to_minimum(sys.F, sys.z, sys.G, Vec3(0.3, 0.2, -0.9).normalized());
    CHECK(m[0] == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-5));
    CHECK(m[2] == doctest::Approx(-0.5).epsilon(1e-5));
  }
}
