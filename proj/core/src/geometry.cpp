#include "slowfast/geometry.hpp"

#include <cmath>
#include <numbers>

#include "slowfast/errors.hpp"

namespace slowfast {

namespace {

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

double wrap_to(double angle, double reference) {
  return reference + std::remainder(angle - reference, 2.0 * std::numbers::pi);
}

Mat3 hessian_from_gradient(const SmoothField::GradientFn& g, const Vec3& x, double h) {
  Mat3 H;
  for (int k = 0; k < 3; ++k) {
    Vec3 e = Vec3::Zero();
    e[k] = h;
    H.col(k) = (g(x + e) - g(x - e)) / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

}  // namespace

SmoothField::SmoothField(ValueFn value, GradientFn gradient, HessianFn hessian)
    : value_(std::move(value)), gradient_(std::move(gradient)), hessian_(std::move(hessian)) {}

SmoothField SmoothField::constant(double c) {
  return SmoothField([c](const Vec3&) { return c; }, [](const Vec3&) { return Vec3::Zero().eval(); },
                     [](const Vec3&) { return Mat3::Zero().eval(); });
}

SmoothField SmoothField::polynomial(std::vector<Monomial> terms) {
  auto t = std::make_shared<const std::vector<Monomial>>(std::move(terms));
  auto value = [t](const Vec3& x) {
    double s = 0.0;
    for (const auto& m : *t)
      s += m.coefficient * ipow(x[0], m.exponents[0]) * ipow(x[1], m.exponents[1]) *
           ipow(x[2], m.exponents[2]);
    return s;
  };
  auto gradient = [t](const Vec3& x) {
    Vec3 g = Vec3::Zero();
    for (const auto& m : *t) {
      for (int k = 0; k < 3; ++k) {
        if (m.exponents[k] == 0) continue;
        double p = m.coefficient * m.exponents[k];
        for (int j = 0; j < 3; ++j) p *= ipow(x[j], m.exponents[j] - (j == k ? 1 : 0));
        g[k] += p;
      }
    }
    return g;
  };
  auto hessian = [t](const Vec3& x) {
    Mat3 H = Mat3::Zero();
    for (const auto& m : *t) {
      for (int k = 0; k < 3; ++k) {
        for (int l = k; l < 3; ++l) {
          std::array<int, 3> e = m.exponents;
          double c = m.coefficient * e[k];
          e[k] -= 1;
          if (c == 0.0) continue;
          c *= e[l];
          e[l] -= 1;
          if (c == 0.0) continue;
          double p = c * ipow(x[0], e[0]) * ipow(x[1], e[1]) * ipow(x[2], e[2]);
          H(k, l) += p;
          if (l != k) H(l, k) += p;
        }
      }
    }
    return H;
  };
  return SmoothField(value, gradient, hessian);
}

SmoothField SmoothField::from_value(ValueFn value, double step) {
  auto gradient = [value, step](const Vec3& x) { return gradient_finite_difference(value, x, step); };
  auto hessian = [value, step](const Vec3& x) {
    Mat3 H;
    const double f0 = value(x);
    for (int k = 0; k < 3; ++k) {
      Vec3 ek = Vec3::Zero();
      ek[k] = step;
      H(k, k) = (value(x + ek) - 2.0 * f0 + value(x - ek)) / (step * step);
      for (int l = k + 1; l < 3; ++l) {
        Vec3 el = Vec3::Zero();
        el[l] = step;
        double v = (value(x + ek + el) - value(x + ek - el) - value(x - ek + el) +
                    value(x - ek - el)) /
                   (4.0 * step * step);
        H(k, l) = v;
        H(l, k) = v;
      }
    }
    return H;
  };
  return SmoothField(std::move(value), gradient, hessian);
}

SmoothField SmoothField::from_value_and_gradient(ValueFn value, GradientFn gradient, double step) {
  auto hessian = [gradient, step](const Vec3& x) { return hessian_from_gradient(gradient, x, step); };
  return SmoothField(std::move(value), std::move(gradient), hessian);
}

SmoothField SmoothField::from_expression(const Expression& e, double step) {
  return from_value([e](const Vec3& x) { return e(x); }, step);
}

SmoothField SmoothField::gaussian_bumps(std::vector<Bump> bumps) {
  auto b = std::make_shared<const std::vector<Bump>>(std::move(bumps));
  auto value = [b](const Vec3& x) {
    double s = 0.0;
    for (const auto& q : *b) s += q.amplitude * std::exp(-(x - q.center).squaredNorm() / (q.width * q.width));
    return s;
  };
  auto gradient = [b](const Vec3& x) {
    Vec3 g = Vec3::Zero();
    for (const auto& q : *b) {
      const double w2 = q.width * q.width;
      const Vec3 d = x - q.center;
      g += q.amplitude * std::exp(-d.squaredNorm() / w2) * (-2.0 / w2) * d;
    }
    return g;
  };
  auto hessian = [b](const Vec3& x) {
    Mat3 H = Mat3::Zero();
    for (const auto& q : *b) {
      const double w2 = q.width * q.width;
      const Vec3 d = x - q.center;
      const double e = q.amplitude * std::exp(-d.squaredNorm() / w2);
      H += e * (4.0 / (w2 * w2) * d * d.transpose() - 2.0 / w2 * Mat3::Identity());
    }
    return H;
  };
  return SmoothField(value, gradient, hessian);
}

SmoothField SmoothField::torus_radial(double R) {
  auto value = [R](const Vec3& x) {
    const double rho = std::hypot(x[0], x[1]);
    return (rho - R) * (rho - R) + x[2] * x[2];
  };
  auto gradient = [R](const Vec3& x) {
    const double rho = std::hypot(x[0], x[1]);
    const double f = 2.0 * (rho - R) / rho;
    return Vec3(f * x[0], f * x[1], 2.0 * x[2]);
  };
  auto hessian = [R](const Vec3& x) {
    const double rho = std::hypot(x[0], x[1]);
    Mat3 H = Mat3::Zero();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const double xx = x[i] * x[j] / (rho * rho);
        H(i, j) = 2.0 * (xx + (rho - R) * ((i == j ? 1.0 : 0.0) - xx) / rho);
      }
    H(2, 2) = 2.0;
    return H;
  };
  return SmoothField(value, gradient, hessian);
}

SmoothField SmoothField::azimuth(double reference) {
  auto value = [reference](const Vec3& x) { return wrap_to(std::atan2(x[1], x[0]), reference); };
  auto gradient = [](const Vec3& x) {
    const double r2 = x[0] * x[0] + x[1] * x[1];
    return Vec3(-x[1] / r2, x[0] / r2, 0.0);
  };
  auto hessian = [](const Vec3& x) {
    const double r2 = x[0] * x[0] + x[1] * x[1];
    const double r4 = r2 * r2;
    Mat3 H = Mat3::Zero();
    H(0, 0) = 2.0 * x[0] * x[1] / r4;
    H(1, 1) = -H(0, 0);
    H(0, 1) = H(1, 0) = (x[1] * x[1] - x[0] * x[0]) / r4;
    return H;
  };
  return SmoothField(value, gradient, hessian);
}

SmoothField SmoothField::poloidal(double R, double reference) {
  auto value = [R, reference](const Vec3& x) {
    return wrap_to(std::atan2(x[2], std::hypot(x[0], x[1]) - R), reference);
  };
  auto gradient = [R](const Vec3& x) {
    const double rho = std::hypot(x[0], x[1]);
    const double u = rho - R, v = x[2];
    const double q = u * u + v * v;
    const Vec3 du(x[0] / rho, x[1] / rho, 0.0);
    const Vec3 dv(0.0, 0.0, 1.0);
    return ((u * dv - v * du) / q).eval();
  };
  return from_value_and_gradient(value, gradient);
}

SmoothField SmoothField::linear_combination(std::vector<std::pair<double, SmoothField>> terms) {
  auto t = std::make_shared<const std::vector<std::pair<double, SmoothField>>>(std::move(terms));
  auto value = [t](const Vec3& x) {
    double s = 0.0;
    for (const auto& [c, f] : *t) s += c * f.value(x);
    return s;
  };
  auto gradient = [t](const Vec3& x) {
    Vec3 g = Vec3::Zero();
    for (const auto& [c, f] : *t) g += c * f.gradient(x);
    return g;
  };
  auto hessian = [t](const Vec3& x) {
    Mat3 H = Mat3::Zero();
    for (const auto& [c, f] : *t) H += c * f.hessian(x);
    return H;
  };
  return SmoothField(value, gradient, hessian);
}

SmoothField operator+(const SmoothField& a, const SmoothField& b) {
  return SmoothField::linear_combination({{1.0, a}, {1.0, b}});
}

SmoothField operator*(double c, const SmoothField& a) {
  return SmoothField::linear_combination({{c, a}});
}

VectorField VectorField::gradient_of(const SmoothField& f) {
  VectorField v;
  v.kind_ = Kind::GradientOfField;
  v.eval_ = [f](const Vec3& x) { return f.gradient(x); };
  v.jacobian_ = [f](const Vec3& x) { return f.hessian(x); };
  v.potential_ = f;
  return v;
}

VectorField VectorField::explicit_field(EvalFn eval, JacobianFn jacobian, double step) {
  VectorField v;
  v.kind_ = Kind::Explicit;
  v.eval_ = std::move(eval);
  if (jacobian) {
    v.jacobian_ = std::move(jacobian);
  } else {
    auto e = v.eval_;
    v.jacobian_ = [e, step](const Vec3& x) { return jacobian_finite_difference(e, x, step); };
  }
  return v;
}

VectorField VectorField::zero() {
  return explicit_field([](const Vec3&) { return Vec3::Zero().eval(); },
                        [](const Vec3&) { return Mat3::Zero().eval(); });
}

VectorField VectorField::scaled(double c) const {
  VectorField v = *this;
  auto e = eval_;
  auto j = jacobian_;
  v.eval_ = [e, c](const Vec3& x) { return (c * e(x)).eval(); };
  v.jacobian_ = [j, c](const Vec3& x) { return (c * j(x)).eval(); };
  if (potential_) v.potential_ = c * *potential_;
  return v;
}

VectorField operator+(const VectorField& a, const VectorField& b) {
  VectorField v;
  const bool both = a.kind_ == VectorField::Kind::GradientOfField &&
                    b.kind_ == VectorField::Kind::GradientOfField;
  v.kind_ = both ? VectorField::Kind::GradientOfField : VectorField::Kind::Explicit;
  auto ae = a.eval_, be = b.eval_;
  auto aj = a.jacobian_, bj = b.jacobian_;
  v.eval_ = [ae, be](const Vec3& x) { return (ae(x) + be(x)).eval(); };
  v.jacobian_ = [aj, bj](const Vec3& x) { return (aj(x) + bj(x)).eval(); };
  if (both) v.potential_ = *a.potential_ + *b.potential_;
  return v;
}

NoiseMap NoiseMap::from_sigma(SigmaFn sigma, DerivativeFn derivative, double step) {
  NoiseMap n;
  n.sigma_ = std::move(sigma);
  if (derivative) {
    n.derivative_ = std::move(derivative);
  } else {
    auto s = n.sigma_;
    n.derivative_ = [s, step](const Vec3& x) {
      std::array<Mat3, 3> d;
      for (int k = 0; k < 3; ++k) {
        Vec3 e = Vec3::Zero();
        e[k] = step;
        d[k] = (s(x + e) - s(x - e)) / (2.0 * step);
      }
      return d;
    };
  }
  return n;
}

NoiseMap NoiseMap::tangent_projection(const SmoothField& F, std::optional<SmoothField> scale) {
  auto sigma = [F, scale](const Vec3& x) {
    const Vec3 n = F.gradient(x).normalized();
    Mat3 P = Mat3::Identity() - n * n.transpose();
    if (scale) P *= scale->value(x);
    return P;
  };
  auto derivative = [F, scale](const Vec3& x) {
    const Vec3 g = F.gradient(x);
    const double m = g.norm();
    const Vec3 n = g / m;
    const Mat3 H = F.hessian(x);
    const Mat3 P = Mat3::Identity() - n * n.transpose();
    const double s = scale ? scale->value(x) : 1.0;
    const Vec3 ds = scale ? scale->gradient(x) : Vec3::Zero();
    std::array<Mat3, 3> d;
    for (int k = 0; k < 3; ++k) {
      const Vec3 hk = H.col(k);
      const Vec3 dn = (hk - n * n.dot(hk)) / m;
      const Mat3 dP = -(dn * n.transpose() + n * dn.transpose());
      d[k] = ds[k] * P + s * dP;
    }
    return d;
  };
  return from_sigma(sigma, derivative);
}

Vec3 NoiseMap::ito_correction(const Vec3& x) const {
  const Mat3 s = sigma_(x);
  const auto d = derivative_(x);
  Vec3 out = Vec3::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) out[i] += d[k](i, j) * s(k, j);
  return out;
}

void validate(const SurfaceSystem& sys, double tol) {
  if (!sys.F.valid() || !sys.G.valid()) throw Error(ErrorKind::Config, "F and G must be defined");
  if (!sys.perturbation.field.valid())
    throw Error(ErrorKind::Config, "perturbation field must be defined");
  const double r = std::abs(sys.F.value(sys.x0) - sys.z);
  if (r > tol)
    throw Error(ErrorKind::Config, "base point not on the level surface: |F(x0)-z| = " + std::to_string(r));
  if (sys.F.gradient(sys.x0).norm() < 1e-12)
    throw Error(ErrorKind::Config, "grad F vanishes at the base point");
  if (sys.epsilon <= 0.0) throw Error(ErrorKind::Config, "epsilon must be positive");
  if (sys.delta < 0.0) throw Error(ErrorKind::Config, "delta must be non-negative");
}

Vec3 fast_field(const SurfaceSystem& sys, const Vec3& x) {
  return sys.F.gradient(x).cross(sys.G.gradient(x));
}

Vec3 damping_field(const SurfaceSystem& sys, const Vec3& x) {
  if (sys.perturbation.form != PerturbationForm::DoubleCross)
    throw Error(ErrorKind::Config, "damping_field needs a double-cross perturbation");
  const Vec3 gF = sys.F.gradient(x);
  return gF.cross(gF.cross(sys.perturbation.field(x)));
}

Vec3 perturbation_potential(const SurfaceSystem& sys, const Vec3& x) {
  if (sys.perturbation.form == PerturbationForm::SingleCross) return sys.perturbation.field(x);
  return sys.F.gradient(x).cross(sys.perturbation.field(x));
}

Vec3 perturbation_velocity(const SurfaceSystem& sys, const Vec3& x) {
  return sys.F.gradient(x).cross(perturbation_potential(sys, x));
}

double perturbation_flux_density(const SurfaceSystem& sys, const Vec3& x) {
  const Vec3 gF = sys.F.gradient(x);
  const Vec3 n = gF.normalized();
  const Mat3 Jb = sys.perturbation.field.jacobian(x);
  if (sys.perturbation.form == PerturbationForm::SingleCross) {
    const Vec3 c(Jb(2, 1) - Jb(1, 2), Jb(0, 2) - Jb(2, 0), Jb(1, 0) - Jb(0, 1));
    return c.dot(n);
  }
  // curl(grad F x b) = grad F div b - b tr H_F + H_F b - J_b grad F
  const Mat3 HF = sys.F.hessian(x);
  const Vec3 b = sys.perturbation.field(x);
  const Vec3 c = gF * Jb.trace() - b * HF.trace() + HF * b - Jb * gF;
  return c.dot(n);
}

Vec3 ito_correction(const SurfaceSystem& sys, const Vec3& x) {
  if (!sys.noise) throw Error(ErrorKind::Config, "system has no noise map");
  return sys.noise->ito_correction(x);
}

double divergence_check(const SurfaceSystem& sys, const Vec3& x, double step) {
  return jacobian_finite_difference([&sys](const Vec3& y) { return fast_field(sys, y); }, x, step)
      .trace();
}

Vec3 curl(const VectorField& v, const Vec3& x) {
  const Mat3 J = v.jacobian(x);
  return {J(2, 1) - J(1, 2), J(0, 2) - J(2, 0), J(1, 0) - J(0, 1)};
}

Vec3 curl_finite_difference(const std::function<Vec3(const Vec3&)>& v, const Vec3& x, double step) {
  const Mat3 J = jacobian_finite_difference(v, x, step);
  return {J(2, 1) - J(1, 2), J(0, 2) - J(2, 0), J(1, 0) - J(0, 1)};
}

Mat3 jacobian_finite_difference(const std::function<Vec3(const Vec3&)>& v, const Vec3& x,
                                double step) {
  Mat3 J;
  for (int k = 0; k < 3; ++k) {
    Vec3 e = Vec3::Zero();
    e[k] = step;
    J.col(k) = (v(x + e) - v(x - e)) / (2.0 * step);
  }
  return J;
}

Vec3 gradient_finite_difference(const std::function<double(const Vec3&)>& f, const Vec3& x,
                                double step) {
  Vec3 g;
  for (int k = 0; k < 3; ++k) {
    Vec3 e = Vec3::Zero();
    e[k] = step;
    g[k] = (f(x + e) - f(x - e)) / (2.0 * step);
  }
  return g;
}

Vec3 tangential_gradient(const SmoothField& F, const SmoothField& G, const Vec3& x) {
  const Vec3 n = F.gradient(x).normalized();
  const Vec3 g = G.gradient(x);
  return g - n * n.dot(g);
}

std::pair<Vec3, Vec3> tangent_basis(const Vec3& normal) {
  const Vec3 n = normal.normalized();
  Vec3 a = std::abs(n[0]) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  Vec3 e1 = (a - n * n.dot(a)).normalized();
  Vec3 e2 = n.cross(e1);
  return {e1, e2};
}

double tangent_ellipticity(const NoiseMap& noise, const SmoothField& F, const Vec3& x) {
  const auto [e1, e2] = tangent_basis(F.gradient(x));
  const Mat3 a = noise.diffusion(x);
  Eigen::Matrix2d m;
  m << e1.dot(a * e1), e1.dot(a * e2), e2.dot(a * e1), e2.dot(a * e2);
  return Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(m).eigenvalues().minCoeff();
}

Vec3 project_to_level(const SmoothField& F, double z, const Vec3& x, double tol, int max_iterations) {
  Vec3 y = x;
  for (int it = 0; it <= max_iterations; ++it) {
    const double r = F.value(y) - z;
    if (std::abs(r) <= tol) return y;
    if (it == max_iterations) break;
    const Vec3 g = F.gradient(y);
    const double g2 = g.squaredNorm();
    if (!(g2 > 1e-300)) break;
    y -= (r / g2) * g;
  }
  throw Error(ErrorKind::ProjectionFailure,
              "projection onto F=z did not converge (|F-z|=" + std::to_string(std::abs(F.value(y) - z)) + ")");
}

SurfaceSystem canonical_sphere_system(double beta, double kappa) {
  SurfaceSystem s;
  s.name = "canonical-sphere";
  s.F = SmoothField::polynomial({{0.5, {2, 0, 0}}, {0.5, {0, 2, 0}}, {0.5, {0, 0, 2}}});
  s.G = SmoothField::polynomial({{1.0, {0, 0, 1}}, {-1.0, {2, 0, 0}}, {-beta, {1, 0, 0}}, {1.0, {0, 0, 0}}});
  s.perturbation.form = PerturbationForm::DoubleCross;
  s.perturbation.field = VectorField::gradient_of(s.G).scaled(kappa);
  s.noise = NoiseMap::tangent_projection(s.F);
  s.z = 0.5;
  s.x0 = Vec3(0.0, std::sqrt(3.0) / 2.0, -0.5);
  s.center = Vec3::Zero();
  s.fingerprint = "canonical-sphere;beta=" + std::to_string(beta) + ";kappa=" + std::to_string(kappa);
  return s;
}

SurfaceSystem sphere_height_system() {
  SurfaceSystem s = canonical_sphere_system(0.0, 1.0);
  s.name = "sphere-height";
  s.G = SmoothField::polynomial({{1.0, {0, 0, 1}}});
  s.perturbation.field = VectorField::gradient_of(s.G);
  s.fingerprint = "sphere-height";
  return s;
}

}  // namespace slowfast
