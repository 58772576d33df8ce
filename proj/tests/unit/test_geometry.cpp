#include <cmath>

#include <doctest.h>

#include "slowfast/geometry.hpp"
#include "slowfast/rng.hpp"

using namespace slowfast;

namespace {

Vec3 random_unit(Rng& rng) {
  Vec3 u(rng.normal(), rng.normal(), rng.normal());
  return u.normalized();
}

SmoothField random_polynomial(Rng& rng, int terms) {
  std::vector<SmoothField::Monomial> m;
  for (int i = 0; i < terms; ++i)
    m.push_back({rng.normal(), {static_cast<int>(rng.uniform() * 3), static_cast<int>(rng.uniform() * 3),
                                static_cast<int>(rng.uniform() * 3)}});
  return SmoothField::polynomial(m);
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("fast field at hand-computed points") {
    const SurfaceSystem sys = canonical_sphere_system();
    CHECK(fast_field(sys, Vec3(0, 0, -1)).norm() == doctest::Approx(0.0));
    const Vec3 f = fast_field(sys, Vec3(0, 1, 0));
    CHECK(f[0] == doctest::Approx(1.0));
    CHECK(f[1] == doctest::Approx(0.0));
    CHECK(f[2] == doctest::Approx(0.0));
    const Vec3 d = damping_field(sys, Vec3(0, 1, 0));
    CHECK(d[0] == doctest::Approx(0.0));
    CHECK(d[1] == doctest::Approx(0.0));
    CHECK(d[2] == doctest::Approx(-1.0));
  }

  TEST_CASE("fast field is orthogonal to both gradients") {
    const SurfaceSystem sys = canonical_sphere_system(0.1);
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
      const Vec3 x = random_unit(rng);
      const Vec3 f = fast_field(sys, x);
      const double s = f.norm() * sys.F.gradient(x).norm() + 1e-300;
      CHECK(std::abs(f.dot(sys.F.gradient(x))) / s < 1e-12);
      CHECK(std::abs(f.dot(sys.G.gradient(x))) / (f.norm() * sys.G.gradient(x).norm() + 1e-300) < 1e-12);
    }
  }

  TEST_CASE("velocity identity holds for arbitrary smooth b") {
    Rng rng(4);
    SurfaceSystem sys = canonical_sphere_system(0.1);
    for (int trial = 0; trial < 5; ++trial) {
      const SmoothField a = random_polynomial(rng, 6), c = random_polynomial(rng, 6);
      sys.perturbation.field = VectorField::explicit_field([a, c](const Vec3& x) {
        return Vec3(a(x) * x[1], c(x), a(x) - c(x) * x[2]);
      });
      for (int i = 0; i < 200; ++i) {
        const Vec3 x = 1.5 * random_unit(rng) * rng.uniform();
        const Vec3 b = sys.perturbation.field(x);
        const Vec3 gF = sys.F.gradient(x), gG = sys.G.gradient(x);
        const double lhs = gG.dot(damping_field(sys, x));
        const double rhs = -gF.cross(b).dot(gF.cross(gG));
        CHECK(std::abs(lhs - rhs) <= 1e-10 * (std::abs(lhs) + std::abs(rhs) + 1e-12));
      }
    }
  }

  TEST_CASE("friction condition for b = grad G") {
    const SurfaceSystem sys = canonical_sphere_system(0.1);
    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
      const Vec3 x = random_unit(rng);
      const Vec3 gF = sys.F.gradient(x);
      const double v = gF.cross(sys.perturbation.field(x)).dot(fast_field(sys, x));
      CHECK(v >= 0.0);
    }
  }

  TEST_CASE("divergence of the fast field vanishes") {
    const SurfaceSystem sys = canonical_sphere_system(0.1);
    Rng rng(6);
    for (int i = 0; i < 1000; ++i) CHECK(std::abs(divergence_check(sys, random_unit(rng))) < 1e-8);
    for (int trial = 0; trial < 5; ++trial) {
      SurfaceSystem r = sys;
      r.F = random_polynomial(rng, 5);
      r.G = random_polynomial(rng, 5);
      for (int i = 0; i < 100; ++i) {
        const Vec3 x = random_unit(rng);
        const double scale = 1.0 + r.F.gradient(x).norm() * r.G.hessian(x).norm() + r.G.gradient(x).norm() * r.F.hessian(x).norm();
        CHECK(std::abs(divergence_check(r, x)) < 1e-8 * scale);
      }
    }
  }

  TEST_CASE("Ito correction of the tangent projection on the sphere") {
    const SurfaceSystem sys = canonical_sphere_system();
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
      const Vec3 x = random_unit(rng);
      CHECK((ito_correction(sys, x) + 2.0 * x).norm() < 1e-6);
      const Vec3 y = 1.7 * x;
      CHECK((ito_correction(sys, y) + 2.0 * y / y.squaredNorm()).norm() < 1e-6);
      CHECK((sys.noise->sigma(x).transpose() * sys.F.gradient(x)).norm() < 1e-12);
    }
    const NoiseMap constant = NoiseMap::from_sigma([](const Vec3&) { return Mat3::Identity().eval(); });
    CHECK(constant.ito_correction(Vec3(0.3, 0.2, 0.1)).norm() < 1e-10);
  }

  TEST_CASE("tangent projection is uniformly elliptic with constant one") {
    const SurfaceSystem sys = canonical_sphere_system();
    Rng rng(8);
    for (int i = 0; i < 100; ++i) CHECK(tangent_ellipticity(*sys.noise, sys.F, random_unit(rng)) == doctest::Approx(1.0));
  }

  TEST_CASE("analytic derivatives agree with finite differences") {
    Rng rng(9);
    const SmoothField p = random_polynomial(rng, 8);
    const SmoothField fd = SmoothField::from_value([p](const Vec3& x) { return p(x); });
    for (int i = 0; i < 1000; ++i) {
      const Vec3 x = random_unit(rng) * (0.5 + rng.uniform());
      CHECK((p.gradient(x) - fd.gradient(x)).norm() < 1e-6 * (1 + p.gradient(x).norm()));
      CHECK((p.hessian(x) - fd.hessian(x)).norm() < 1e-4 * (1 + p.hessian(x).norm()));
    }
  }

  TEST_CASE("asymmetric system breaks the mirror symmetry") {
    const SurfaceSystem sym = canonical_sphere_system(0.0), asym = canonical_sphere_system(0.1);
    const Vec3 x(0.6, 0.0, -0.8), m(-0.6, 0.0, -0.8);
    CHECK(sym.G(x) == doctest::Approx(sym.G(m)));
    CHECK(std::abs(asym.G(x) - asym.G(m)) > 0.1);
  }

  TEST_CASE("angle fields on the torus are curl free away from the axis") {
    const SmoothField az = SmoothField::azimuth(), pol = SmoothField::poloidal(1.0);
    Rng rng(10);
    for (int i = 0; i < 200; ++i) {
      const double phi = 6.28 * rng.uniform(), psi = 6.28 * rng.uniform();
      const Vec3 x((1 + 0.5 * std::cos(psi)) * std::cos(phi), (1 + 0.5 * std::cos(psi)) * std::sin(phi), 0.5 * std::sin(psi));
      const Vec3 c1 = curl_finite_difference([&](const Vec3& y) { return az.gradient(y); }, x, 1e-4);
      const Vec3 c2 = curl_finite_difference([&](const Vec3& y) { return pol.gradient(y); }, x, 1e-4);
      CHECK(c1.norm() < 1e-6);
      CHECK(c2.norm() < 1e-6);
    }
  }

  TEST_CASE("projection lands on the level set") {
    const SurfaceSystem sys = canonical_sphere_system();
    const Vec3 y = project_to_level(sys.F, sys.z, Vec3(0.3, 1.2, -0.4));
    CHECK(std::abs(sys.F(y) - 0.5) < 1e-12);
    Vec3 bad(0, 0, 0);
    CHECK_THROWS(project_to_level(sys.F, sys.z, bad));
  }
}
