#include "slowfast/interp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "slowfast/errors.hpp"

namespace slowfast {

Pchip::Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw Error(ErrorKind::Config, "interpolation needs at least two nodes");
  for (std::size_t i = 1; i < n; ++i)
    if (!(x_[i] > x_[i - 1])) throw Error(ErrorKind::Config, "interpolation grid must be strictly increasing");
  std::vector<double> h(n - 1), s(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x_[i + 1] - x_[i];
    s[i] = (y_[i + 1] - y_[i]) / h[i];
  }
  d_.assign(n, 0.0);
  if (n == 2) {
    d_[0] = d_[1] = s[0];
    return;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (s[i - 1] * s[i] <= 0.0) continue;
    const double w1 = 2 * h[i] + h[i - 1], w2 = h[i] + 2 * h[i - 1];
    d_[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
  }
  auto end = [](double h0, double h1, double s0, double s1) {
    double d = ((2 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if (d * s0 <= 0) d = 0;
    else if (s0 * s1 <= 0 && std::abs(d) > std::abs(3 * s0)) d = 3 * s0;
    return d;
  };
  d_[0] = end(h[0], h[1], s[0], s[1]);
  d_[n - 1] = end(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
}

std::size_t Pchip::segment(double t) const {
  auto it = std::upper_bound(x_.begin(), x_.end(), t);
  std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
  return std::min(i, x_.size() - 2);
}

double Pchip::operator()(double t) const {
  const std::size_t i = segment(t);
  const double h = x_[i + 1] - x_[i];
  const double u = (t - x_[i]) / h;
  const double u2 = u * u, u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * y_[i] + (u3 - 2 * u2 + u) * h * d_[i] + (-2 * u3 + 3 * u2) * y_[i + 1] +
         (u3 - u2) * h * d_[i + 1];
}

double Pchip::derivative(double t) const {
  const std::size_t i = segment(t);
  const double h = x_[i + 1] - x_[i];
  const double u = (t - x_[i]) / h;
  const double u2 = u * u;
  return ((6 * u2 - 6 * u) * y_[i] + (3 * u2 - 4 * u + 1) * h * d_[i] + (-6 * u2 + 6 * u) * y_[i + 1] +
          (3 * u2 - 2 * u) * h * d_[i + 1]) /
         h;
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (z * p1 - p0) / (z * z - 1);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) {
        x[i] = z;
        w[i] = 2.0 / ((1 - z * z) * dp * dp);
        break;
      }
      x[i] = z;
      w[i] = 2.0 / ((1 - z * z) * dp * dp);
    }
  }
  return {x, w};
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw Error(ErrorKind::Config, "linear fit needs two points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    sse += r * r;
  }
  f.r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
  if (n > 2) f.slope_stderr = std::sqrt(sse / (n - 2) / sxx);
  return f;
}

double log_corrected_limit(const std::vector<double>& d, const std::vector<double>& f) {
  if (d.size() != 3 || f.size() != 3) throw Error(ErrorKind::Config, "three samples required");
  Eigen::Matrix3d M;
  Eigen::Vector3d r;
  for (int i = 0; i < 3; ++i) {
    M(i, 0) = 1.0;
    M(i, 1) = d[i] * std::log(d[i]);
    M(i, 2) = d[i];
    r[i] = f[i];
  }
  return M.fullPivLu().solve(r)[0];
}

}  // namespace slowfast
