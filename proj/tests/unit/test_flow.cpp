#include <cmath>

#include <doctest.h>

#include "slowfast/errors.hpp"
#include "slowfast/flow.hpp"

using namespace slowfast;

namespace {

Vec3 on_sphere(double polar, double azimuth) {
  return Vec3(std::sin(polar) * std::cos(azimuth), std::sin(polar) * std::sin(azimuth), std::cos(polar));
}

double closure_error(double h) {
  const SurfaceSystem sys = sphere_height_system();
  const Vec3 x = on_sphere(1.1, 0.3);
  IntegratorConfig cfg;
  cfg.h = h;
  cfg.record_every = 0;
  cfg.tolF = 1e-14;
  const Trajectory tr = integrate_unperturbed(sys, x, 2.0 * M_PI, cfg);
  return (tr.final_state - x).norm();
}

}  // namespace

TEST_SUITE("flow") {
  TEST_CASE("height orbits close after one period") {
    CHECK(closure_error(1e-2) < 1e-8);
  }

  TEST_CASE("RK4 closure error is fourth order") {
    const double e1 = closure_error(0.2), e2 = closure_error(0.1);
    const double order = std::log2(e1 / e2);
    CHECK(order > 3.5);
    CHECK(order < 4.6);
  }

  TEST_CASE("reversing the fast field retraces the orbit") {
    const SurfaceSystem sys = canonical_sphere_system(0.1);
    IntegratorConfig cfg;
    cfg.h = 5e-3;
    cfg.record_every = 0;
    const Trajectory fwd = integrate_unperturbed(sys, sys.x0, 3.0, cfg);
    const Trajectory back = integrate_unperturbed(sys, fwd.final_state, 3.0, cfg, true);
    CHECK((back.final_state - sys.x0).norm() < 1e-8);
  }

  TEST_CASE("unperturbed flow conserves F and G") {
    const SurfaceSystem sys = canonical_sphere_system(0.1);
    IntegratorConfig cfg;
    cfg.h = 1e-2;
    const Trajectory tr = integrate_unperturbed(sys, sys.x0, 20.0, cfg);
    const double g0 = sys.G(sys.x0);
    for (const auto& s : tr.samples) {
      CHECK(std::abs(sys.F(s.x) - sys.z) <= 1e-9);
      CHECK(std::abs(s.g - g0) <= 1e-9);
    }
  }

  TEST_CASE("zero noise amplitude reproduces the deterministic Heun path bitwise") {
    SurfaceSystem sys = canonical_sphere_system(0.1);
    sys.epsilon = 1e-2;
    sys.delta = 0.0;
    IntegratorConfig cfg;
    cfg.h = 0.02;
    cfg.seed = 99;
    const Trajectory sde = integrate_sde(sys, sys.x0, 0.5, cfg);
    IntegratorConfig heun = cfg;
    heun.method = Method::HeunStratonovich;
    const Trajectory det = integrate(slow_dynamics(sys), sys.x0, 0.5, cfg.h * sys.epsilon, heun);
    REQUIRE(sde.samples.size() == det.samples.size());
    for (std::size_t i = 0; i < sde.samples.size(); ++i) {
      CHECK(sde.samples[i].x[0] == det.samples[i].x[0]);
      CHECK(sde.samples[i].x[1] == det.samples[i].x[1]);
      CHECK(sde.samples[i].x[2] == det.samples[i].x[2]);
    }
  }

  TEST_CASE("same seed and stream give identical SDE paths") {
    SurfaceSystem sys = canonical_sphere_system(0.1);
    sys.epsilon = 1e-2;
    sys.delta = 0.3;
    IntegratorConfig cfg;
    cfg.h = 0.02;
    cfg.seed = 7;
    cfg.stream = 3;
    const Trajectory a = integrate_sde(sys, sys.x0, 0.2, cfg);
    const Trajectory b = integrate_sde(sys, sys.x0, 0.2, cfg);
    CHECK((a.final_state - b.final_state).norm() == 0.0);
    cfg.stream = 4;
    const Trajectory c = integrate_sde(sys, sys.x0, 0.2, cfg);
    CHECK((a.final_state - c.final_state).norm() > 0.0);
  }

  TEST_CASE("pure tangent noise is spherical Brownian motion") {
    // E[x(t)] = x0 exp(-delta^2 t) for the generator (delta^2 / 2) Laplacian
    const SurfaceSystem sys = canonical_sphere_system();
    Dynamics d;
    d.F = sys.F;
    d.z = sys.z;
    d.fast = [](const Vec3&) { return Vec3::Zero().eval(); };
    d.noise = sys.noise;
    d.delta = 1.0;
    const Vec3 x0(0, 0, 1);
    const int runs = 2000;
    const double t = 0.5, dt = 2e-3;
    double sum = 0.0, sum2 = 0.0;
    for (int r = 0; r < runs; ++r) {
      IntegratorConfig cfg;
      cfg.method = Method::HeunStratonovich;
      cfg.record_every = 0;
      cfg.seed = 17;
      cfg.stream = static_cast<std::uint64_t>(r);
      const double c = integrate(d, x0, t, dt, cfg).final_state.dot(x0);
      sum += c;
      sum2 += c * c;
    }
    const double mean = sum / runs;
    const double se = std::sqrt((sum2 / runs - mean * mean) / runs);
    CHECK(std::abs(mean - std::exp(-t)) < 4.0 * se + 5e-3);
  }

  TEST_CASE("monitor stops integration and records the event") {
    const SurfaceSystem sys = canonical_sphere_system(0.1);
    IntegratorConfig cfg;
    cfg.h = 1e-2;
    const Trajectory tr = integrate(unperturbed_dynamics(sys), sys.x0, 10.0, cfg.h, cfg,
                                    [](double t, const Vec3&, double) {
                                      MonitorAction a;
                                      if (t >= 1.0) {
                                        a.event = TrajectoryEvent{0.0, EventKind::HitBoundary, 0};
                                        a.stop = true;
                                      }
                                      return a;
                                    });
    REQUIRE(tr.first(EventKind::HitBoundary));
    CHECK(tr.first(EventKind::HitBoundary)->t == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(tr.first(EventKind::Stopped));
    CHECK(tr.final_time < 1.0 + 1e-9);
  }

  TEST_CASE("coarse steps and off-surface starts are rejected") {
    const SurfaceSystem sys = canonical_sphere_system();
    IntegratorConfig cfg;
    cfg.h = 0.2;
    cfg.min_period = 2.0 * M_PI;
    CHECK_THROWS_AS(integrate_unperturbed(sys, sys.x0, 1.0, cfg), Error);
    cfg.min_period = 0.0;
    CHECK_THROWS_AS(integrate_unperturbed(sys, Vec3(0, 0, 0.9), 1.0, cfg), Error);
  }

  TEST_CASE("neighborhood samples stay on the surface within the radius") {
    const SurfaceSystem sys = canonical_sphere_system(0.1);
    Rng rng(21);
    for (int i = 0; i < 300; ++i) {
      const Vec3 p = sample_uniform_neighborhood(sys, sys.x0, 0.05, rng);
      CHECK(std::abs(sys.F(p) - sys.z) < 1e-12);
      CHECK(surface_distance(sys.F, sys.z, sys.x0, p) < 0.05);
    }
  }
}
