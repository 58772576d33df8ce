#include "slowfast/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "slowfast/errors.hpp"

namespace slowfast {

Proportion proportion(int k, int n) {
  Proportion p;
  p.k = k;
  p.n = n;
  if (n > 0) {
    p.phat = static_cast<double>(k) / n;
    p.se = std::sqrt(p.phat * (1.0 - p.phat) / n);
  }
  return p;
}

double binomial_z(int k, int n, double p) {
  if (n <= 0) throw Error(ErrorKind::Config, "binomial test with no trials");
  const double se = std::sqrt(p * (1.0 - p) / n);
  const double diff = static_cast<double>(k) / n - p;
  if (se == 0.0) return diff == 0.0 ? 0.0 : INFINITY;
  return std::abs(diff) / se;
}

bool within_sigma(int k, int n, double p, double nsigma) { return binomial_z(k, n, p) <= nsigma; }

namespace {

double chi2_sf(double x, int dof) {
  if (dof <= 0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(dof), x));
}

}  // namespace

ChiSquare chi_square_gof(const std::vector<double>& observed, const std::vector<double>& expected, int fitted) {
  if (observed.size() != expected.size()) throw Error(ErrorKind::Config, "chi-square: size mismatch");
  ChiSquare r;
  int cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] <= 0.0) continue;
    const double d = observed[i] - expected[i];
    r.statistic += d * d / expected[i];
    ++cells;
  }
  r.dof = cells - 1 - fitted;
  r.p_value = chi2_sf(r.statistic, r.dof);
  return r;
}

ChiSquare chi_square_homogeneity(const std::vector<std::vector<double>>& counts) {
  const std::size_t rows = counts.size();
  if (rows == 0) return {};
  const std::size_t cols = counts[0].size();
  std::vector<double> rsum(rows, 0.0), csum(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      rsum[i] += counts[i][j];
      csum[j] += counts[i][j];
      total += counts[i][j];
    }
  ChiSquare r;
  int used_cols = 0;
  for (std::size_t j = 0; j < cols; ++j) {
    if (csum[j] <= 0.0) continue;
    ++used_cols;
    for (std::size_t i = 0; i < rows; ++i) {
      const double e = rsum[i] * csum[j] / total;
      if (e > 0.0) r.statistic += (counts[i][j] - e) * (counts[i][j] - e) / e;
    }
  }
  r.dof = static_cast<int>(rows - 1) * (used_cols - 1);
  r.p_value = chi2_sf(r.statistic, r.dof);
  return r;
}

double kolmogorov_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

KsResult ks_test(std::vector<double> x, const std::function<double(double)>& cdf) {
  KsResult r;
  if (x.empty()) return r;
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    r.d = std::max({r.d, f - i / n, (i + 1) / n - f});
  }
  r.p_value = kolmogorov_pvalue(r.d, x.size());
  return r;
}

KsResult ks_exponential(const std::vector<double>& x, double rate) {
  return ks_test(x, [rate](double t) { return t <= 0.0 ? 0.0 : 1.0 - std::exp(-rate * t); });
}

MeanCI mean_ci(const std::vector<double>& x, double level) {
  MeanCI r;
  r.n = static_cast<int>(x.size());
  if (x.empty()) return r;
  double s = 0.0;
  for (double v : x) s += v;
  r.mean = s / r.n;
  if (r.n < 2) {
    r.lo = r.hi = r.mean;
    return r;
  }
  double ss = 0.0;
  for (double v : x) ss += (v - r.mean) * (v - r.mean);
  r.sd = std::sqrt(ss / (r.n - 1));
  r.se = r.sd / std::sqrt(static_cast<double>(r.n));
  const double t = boost::math::quantile(boost::math::students_t_distribution<double>(r.n - 1), 0.5 + level / 2.0);
  r.lo = r.mean - t * r.se;
  r.hi = r.mean + t * r.se;
  return r;
}

}  // namespace slowfast
