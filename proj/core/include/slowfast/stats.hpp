#pragma once

#include <functional>
#include <vector>

namespace slowfast {

struct Proportion {
  int k = 0, n = 0;
  double phat = 0.0;
  double se = 0.0;  // sqrt(phat (1 - phat) / n)
};
Proportion proportion(int k, int n);

// |k/n - p| in units of the binomial standard error sqrt(p (1-p) / n) under p.
double binomial_z(int k, int n, double p);
bool within_sigma(int k, int n, double p, double nsigma = 3.0);

struct ChiSquare {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};
// cells with expected count 0 are skipped
ChiSquare chi_square_gof(const std::vector<double>& observed, const std::vector<double>& expected, int fitted = 0);
ChiSquare chi_square_homogeneity(const std::vector<std::vector<double>>& counts);

struct KsResult {
  double d = 0.0;
  double p_value = 1.0;
};
double kolmogorov_pvalue(double d, std::size_t n);
KsResult ks_test(std::vector<double> x, const std::function<double(double)>& cdf);
KsResult ks_exponential(const std::vector<double>& x, double rate);

struct MeanCI {
  int n = 0;
  double mean = 0.0, sd = 0.0, se = 0.0, lo = 0.0, hi = 0.0;
};
MeanCI mean_ci(const std::vector<double>& x, double level = 0.95);

}  // namespace slowfast
