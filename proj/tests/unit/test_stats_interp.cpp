#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "slowfast/interp.hpp"
#include "slowfast/rng.hpp"
#include "slowfast/stats.hpp"

using namespace slowfast;

TEST_SUITE("stats") {
  TEST_CASE("binomial helpers") {
    const Proportion p = proportion(30, 100);
    CHECK(p.phat == doctest::Approx(0.3));
    CHECK(p.se == doctest::Approx(std::sqrt(0.21 / 100)));
    CHECK(binomial_z(60, 100, 0.5) == doctest::Approx(2.0));
    CHECK(within_sigma(60, 100, 0.5, 3.0));
    CHECK_FALSE(within_sigma(70, 100, 0.5, 3.0));
  }

  TEST_CASE("chi-square p-values at textbook quantiles") {
    // statistic 3.841459 on one degree of freedom is the 95% quantile
    const ChiSquare a = chi_square_gof({60.0, 40.0}, {50.0, 50.0});
    CHECK(a.statistic == doctest::Approx(4.0));
    CHECK(a.dof == 1);
    CHECK(a.p_value == doctest::Approx(0.0455003).epsilon(1e-5));
    const ChiSquare b = chi_square_gof({10, 10, 10, 10}, {10, 10, 10, 10});
    CHECK(b.p_value == doctest::Approx(1.0));
    const ChiSquare skip = chi_square_gof({5, 0, 5}, {5, 0, 5});
    CHECK(skip.dof == 1);
    // expected 50 in every cell
    const ChiSquare h = chi_square_homogeneity({{60, 40}, {40, 60}});
    CHECK(h.statistic == doctest::Approx(8.0));
    CHECK(h.dof == 1);
    CHECK(h.p_value == doctest::Approx(0.00467773).epsilon(1e-5));
  }

  TEST_CASE("Kolmogorov distribution") {
    CHECK(kolmogorov_pvalue(1.3581 / std::sqrt(1e6), 1000000) == doctest::Approx(0.05).epsilon(2e-3));
    CHECK(kolmogorov_pvalue(0.0, 10) == doctest::Approx(1.0));
    CHECK(kolmogorov_pvalue(1.0, 10) < 1e-6);
  }

  TEST_CASE("KS accepts its own law and rejects a wrong rate") {
    Rng rng(12);
    std::vector<double> x(4000);
    for (auto& v : x) v = rng.exponential(2.0);
    CHECK(ks_exponential(x, 2.0).p_value > 0.01);
    CHECK(ks_exponential(x, 2.5).p_value < 1e-6);
    std::vector<double> u(2000);
    for (auto& v : u) v = rng.uniform();
    const KsResult r = ks_test(u, [](double t) { return std::clamp(t, 0.0, 1.0); });
    CHECK(r.p_value > 0.01);
    CHECK(r.d < 0.05);
  }

  TEST_CASE("mean confidence interval") {
    const MeanCI ci = mean_ci({1.0, 2.0, 3.0, 4.0, 5.0});
    CHECK(ci.n == 5);
    CHECK(ci.mean == doctest::Approx(3.0));
    CHECK(ci.sd == doctest::Approx(std::sqrt(2.5)));
    CHECK(ci.se == doctest::Approx(std::sqrt(0.5)));
    CHECK(ci.lo < 3.0);
    CHECK(ci.hi > 3.0);
    CHECK(ci.hi - 3.0 == doctest::Approx(3.0 - ci.lo));
  }
}

TEST_SUITE("interp") {
  TEST_CASE("Gauss-Legendre is exact to degree 2n-1") {
    for (int n : {1, 2, 4, 6, 10}) {
      const auto [x, w] = gauss_legendre(n);
      REQUIRE(x.size() == static_cast<std::size_t>(n));
      for (int deg = 0; deg <= 2 * n - 1; ++deg) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += w[i] * std::pow(x[i], deg);
        const double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
        CHECK(s == doctest::Approx(exact).scale(1.0).epsilon(1e-13));
      }
    }
  }

  TEST_CASE("PCHIP interpolates, reproduces lines and keeps monotone data monotone") {
    const Pchip line({0.0, 1.0, 2.5, 4.0}, {1.0, 3.0, 6.0, 9.0});
    for (double t : {0.0, 0.3, 1.7, 3.9}) {
      CHECK(line(t) == doctest::Approx(1.0 + 2.0 * t));
      CHECK(line.derivative(t) == doctest::Approx(2.0));
    }
    const std::vector<double> x = {0, 1, 2, 3, 4, 5}, y = {0, 0.1, 0.2, 3.0, 3.05, 3.1};
    const Pchip p(x, y);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(p(x[i]) == doctest::Approx(y[i]));
    double prev = p(0.0);
    for (double t = 0.01; t <= 5.0; t += 0.01) {
      CHECK(p(t) >= prev - 1e-14);
      prev = p(t);
    }
  }

  TEST_CASE("least squares line") {
    const LinearFit f = linear_fit({0, 1, 2, 3}, {1, 3, 5, 7});
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.r2 == doctest::Approx(1.0));
    CHECK(f.slope_stderr == doctest::Approx(0.0).scale(1.0));
  }

  TEST_CASE("log-corrected extrapolation recovers the limit") {
    const auto f = [](double d) { return 0.7 + 2.0 * d * std::log(d) - 3.0 * d; };
    const std::vector<double> d = {1e-2, 1e-3, 1e-4};
    CHECK(log_corrected_limit(d, {f(d[0]), f(d[1]), f(d[2])}) == doctest::Approx(0.7).epsilon(1e-10));
  }
}
