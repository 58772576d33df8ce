#include <cmath>

#include <doctest.h>

#include "slowfast/errors.hpp"
#include "slowfast/stats.hpp"
#include "slowfast/torus.hpp"

using namespace slowfast;

namespace {

struct Setup {
  TorusSystem t = canonical_torus_system();
  std::vector<Well> wells;
  RootedGraph graph;
  Setup() {
    wells = prepare_wells(t);
    graph = torus_rates(t, wells);
  }
};

const Setup& setup() {
  static const Setup s;
  return s;
}

}  // namespace

TEST_SUITE("torus") {
  TEST_CASE("capture indicator") {
    CHECK(capture_indicator(1.0, true) == 1);
    CHECK(capture_indicator(-1.0, false) == 1);
    CHECK(capture_indicator(1.0, false) == 0);
    CHECK(capture_indicator(-1.0, true) == 0);
    CHECK(capture_indicator(0.0, true) == 0);
  }

  TEST_CASE("fast field is tangent, divergence free and has a closed non-exact part") {
    const TorusSystem t = canonical_torus_system();
    for (double phi : {0.1, 1.3, 2.9, 4.4})
      for (double psi : {-2.0, 0.2, 1.7, 3.0}) {
        const Vec3 x = torus_point(t, phi, psi);
        CHECK(std::abs(t.F(x) - t.z) < 1e-10);
        CHECK(std::abs(t.fast(x).dot(t.F.gradient(x))) < 1e-12);
        CHECK(t.curl_d(x).norm() < 1e-5);
        const Mat3 J = jacobian_finite_difference([&](const Vec3& y) { return t.fast(y); }, x);
        CHECK(std::abs(J.trace()) < 1e-6);
      }
  }

  TEST_CASE("angles round trip") {
    const TorusSystem t = canonical_torus_system();
    const Vec3 x = torus_point(t, 0.7, -1.1);
    const Eigen::Vector2d a = torus_angles(t.R, x);
    CHECK(a[0] == doctest::Approx(0.7));
    CHECK(a[1] == doctest::Approx(-1.1));
    CHECK(torus_area_element(t, 0.7, 0.0) == doctest::Approx(0.5 * 1.5).epsilon(1e-8));
  }

  TEST_CASE("surface measure of the whole torus") {
    // round tube of radius 1/2 with |grad F| = 1: 4 pi^2 R r
    CHECK(setup().graph.lambda_M == doctest::Approx(4.0 * M_PI * M_PI * 0.5).epsilon(1e-6));
    CHECK(setup().graph.lambda_M_refined == doctest::Approx(4.0 * M_PI * M_PI * 0.5).epsilon(1e-6));
  }

  TEST_CASE("wells, rates and branch weights") {
    const Setup& s = setup();
    REQUIRE(s.wells.size() == 2);
    REQUIRE(s.graph.edges.size() == 2);
    double measure = 0.0;
    for (const auto& e : s.graph.edges) {
      CHECK(e.s == 1);
      CHECK(e.r > 0.0);
      CHECK(e.r == doctest::Approx(std::abs(e.psi_bar) / (2.0 * s.graph.lambda_E)).epsilon(1e-12));
      measure += e.well_measure;
    }
    CHECK(s.graph.lambda_E == doctest::Approx(s.graph.lambda_M - measure).epsilon(1e-3));
    CHECK(s.graph.edge(1).r > s.graph.edge(2).r);
    CHECK(s.graph.relative_change < 1e-3);
    CHECK(s.graph.holding_rate() == doctest::Approx(s.graph.edge(1).r + s.graph.edge(2).r));
    for (const auto& w : s.wells) {
      CHECK(w.contains(s.t.R, w.extremum));
      CHECK(w.depth(s.t.R, w.extremum) == doctest::Approx(1.0));
      CHECK_FALSE(w.contains(s.t.R, s.t.x0));
    }
  }

  TEST_CASE("limit process holds an exponential time at the root") {
    const Setup& s = setup();
    std::vector<double> hold;
    int first = 0;
    for (int i = 0; i < 2000; ++i) {
      Rng rng(44, static_cast<std::uint64_t>(i));
      const GraphPath p = simulate_torus_limit(s.graph, {0, 0.0}, 100.0, rng, 1e-3, 0.25);
      REQUIRE_FALSE(p.branches.empty());
      hold.push_back(p.branches.front().t);
      first += p.branches.front().to_edge == 1;
    }
    CHECK(ks_exponential(hold, s.graph.holding_rate()).p_value > 0.01);
    const double q = s.graph.edge(1).r / s.graph.total_rate();
    CHECK(within_sigma(first, 2000, q, 4.0));
  }

  TEST_CASE("descent time is positive and grows with depth") {
    const Setup& s = setup();
    for (int k : {1, 2}) {
      const double a = torus_descent_time(s.graph, k, 0.25), b = torus_descent_time(s.graph, k, 0.5);
      CHECK(a > 0.0);
      CHECK(b > a);
    }
  }

  TEST_CASE("torus configuration") {
    const TorusSystem t = torus_from_json(Json::parse(
        R"({"preset": "canonical-torus", "perturbation_scale": 2.0, "parameters": {"epsilon": 1e-4, "delta": 0.05, "x0_angles": [0.3, 0.4]}})"));
    CHECK(t.epsilon == doctest::Approx(1e-4));
    CHECK(t.delta == doctest::Approx(0.05));
    CHECK((t.x0 - torus_point(t, 0.3, 0.4)).norm() < 1e-14);
    const TorusSystem base = canonical_torus_system();
    const Vec3 x = torus_point(base, 0.2, 1.0);
    CHECK((t.perturbation_velocity(x) - 2.0 * base.perturbation_velocity(x)).norm() < 1e-12);
    CHECK_THROWS_AS(torus_from_json(Json::parse(R"({"preset": "klein"})")), Error);
  }
}
