#include <cmath>
#include <string>

#include <doctest.h>

#include "slowfast/config.hpp"
#include "slowfast/errors.hpp"
#include "slowfast/expression.hpp"
#include "slowfast/rng.hpp"

using namespace slowfast;

namespace {

std::string config_path(const std::string& rel) { return std::string(SLOWFAST_CONFIG_DIR) + "/" + rel; }

}  // namespace

TEST_SUITE("expression") {
  TEST_CASE("arithmetic and precedence") {
    const Vec3 x(2.0, 3.0, -1.0);
    CHECK(Expression::parse("1 + 2 * 3")(x) == doctest::Approx(7.0));
    CHECK(Expression::parse("(1 + 2) * 3")(x) == doctest::Approx(9.0));
    CHECK(Expression::parse("2 ^ 3 ^ 2")(x) == doctest::Approx(512.0));
    CHECK(Expression::parse("-x1^2")(x) == doctest::Approx(-4.0));
    CHECK(Expression::parse("x1 - x2 - x3")(x) == doctest::Approx(0.0));
    CHECK(Expression::parse("x2 / x1 / 3")(x) == doctest::Approx(0.5));
    CHECK(Expression::parse("1.5e-1 * x3")(x) == doctest::Approx(-0.15));
  }

  TEST_CASE("functions and constants") {
    const Vec3 x(0.5, -0.25, 2.0);
    CHECK(Expression::parse("sin(pi*x1) + cos(0)")(x) == doctest::Approx(2.0));
    CHECK(Expression::parse("exp(log(x3))")(x) == doctest::Approx(2.0));
    CHECK(Expression::parse("atan2(x2, x1)")(x) == doctest::Approx(std::atan2(-0.25, 0.5)));
    CHECK(Expression::parse("max(x1, x3) + min(x1, x2) + abs(x2)")(x) == doctest::Approx(2.0));
    CHECK(Expression::parse("pow(x3, 3) + sqrt(x3*x3)")(x) == doctest::Approx(10.0));
    CHECK(Expression::parse("beta * x1", {{"beta", 0.4}})(x) == doctest::Approx(0.2));
    CHECK(Expression::parse("e")(x) == doctest::Approx(std::exp(1.0)));
  }

  TEST_CASE("malformed input is rejected") {
    for (const char* bad : {"", "1 +", "(x1", "x1)", "foo(x1)", "x4", "2 ** 3", "sin()", "unknown + 1"})
      CHECK_THROWS_AS(Expression::parse(bad), Error);
  }

  TEST_CASE("expression fields differentiate numerically") {
    const SmoothField f = SmoothField::from_expression(Expression::parse("x3 - x1^2 - 0.1*x1 + 1"));
    const SmoothField g = canonical_sphere_system(0.1).G;
    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
      const Vec3 x(rng.normal(), rng.normal(), rng.normal());
      CHECK(f(x) == doctest::Approx(g(x)).epsilon(1e-12));
      CHECK((f.gradient(x) - g.gradient(x)).norm() < 1e-7 * (1 + g.gradient(x).norm()));
      CHECK((f.hessian(x) - g.hessian(x)).norm() < 1e-3);
    }
  }
}

TEST_SUITE("config") {
  TEST_CASE("explicit fields reproduce the canonical preset") {
    const SurfaceSystem a = load_system(config_path("systems/explicit-fields.json"));
    const SurfaceSystem b = load_system(config_path("systems/canonical-asymmetric.json"));
    CHECK(a.z == doctest::Approx(b.z));
    CHECK((a.x0 - b.x0).norm() < 1e-12);
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
      const Vec3 x = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
      CHECK(a.F(x) == doctest::Approx(b.F(x)));
      CHECK(a.G(x) == doctest::Approx(b.G(x)).epsilon(1e-12));
      CHECK((a.perturbation.field(x) - b.perturbation.field(x)).norm() < 1e-6);
      CHECK((a.noise->sigma(x) - b.noise->sigma(x)).norm() < 1e-12);
    }
  }

  TEST_CASE("every shipped system file loads") {
    for (const char* f : {"canonical-symmetric", "canonical-asymmetric", "canonical-asymmetric-weak-drift",
                          "canonical-asymmetric-scaled-noise", "explicit-fields"}) {
      const SurfaceSystem s = load_system(config_path(std::string("systems/") + f + ".json"));
      CHECK(std::abs(s.F(s.x0) - s.z) < 1e-10);
      CHECK_FALSE(s.fingerprint.empty());
    }
  }

  TEST_CASE("scaled noise uses the configured factor") {
    const SurfaceSystem s = load_system(config_path("systems/canonical-asymmetric-scaled-noise.json"));
    const Vec3 x = Vec3(0.6, 0.0, -0.8);
    const SurfaceSystem plain = canonical_sphere_system(0.1);
    CHECK((s.noise->sigma(x) - 1.3 * plain.noise->sigma(x)).norm() < 1e-12);
  }

  TEST_CASE("invalid systems are rejected") {
    CHECK_THROWS_AS(system_from_json(Json::parse(R"({"preset": "cube"})")), Error);
    CHECK_THROWS_AS(system_from_json(Json::parse(R"({"preset": "canonical-sphere", "parameters": {"x0": [0, 0, 0]}})")),
                    Error);
    CHECK_THROWS_AS(system_from_json(Json::parse(R"({"preset": "canonical-sphere", "perturbation": {"form": "triple"}})")),
                    Error);
    CHECK_THROWS_AS(vec3_from_json(Json::parse("[1, 2]")), Error);
  }

  TEST_CASE("vector round trip") {
    const Vec3 v(0.1, -2.0, 3.5);
    CHECK((vec3_from_json(to_json(v)) - v).norm() == 0.0);
  }
}
