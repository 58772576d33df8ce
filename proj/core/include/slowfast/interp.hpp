#pragma once

#include <utility>
#include <vector>

namespace slowfast {

// Monotone piecewise cubic Hermite interpolant (Fritsch-Carlson).
class Pchip {
 public:
  Pchip() = default;
  Pchip(std::vector<double> x, std::vector<double> y);

  double operator()(double t) const;
  double derivative(double t) const;
  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }
  bool empty() const { return x_.empty(); }
  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& y() const { return y_; }

 private:
  std::size_t segment(double t) const;
  std::vector<double> x_, y_, d_;
};

// nodes and weights on [-1, 1]
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n);

struct LinearFit {
  double intercept = 0.0, slope = 0.0, r2 = 0.0, slope_stderr = 0.0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

// Fit f(d) = a + b d ln d + c d through three samples; returns a (the d -> 0 limit).
double log_corrected_limit(const std::vector<double>& d, const std::vector<double>& f);

}  // namespace slowfast
