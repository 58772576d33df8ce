#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "slowfast/expression.hpp"

namespace slowfast {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kFiniteDifferenceStep = 1e-5;

// Scalar field on R^3 with gradient and Hessian.
class SmoothField {
 public:
  using ValueFn = std::function<double(const Vec3&)>;
  using GradientFn = std::function<Vec3(const Vec3&)>;
  using HessianFn = std::function<Mat3(const Vec3&)>;

  struct Monomial {
    double coefficient;
    std::array<int, 3> exponents;
  };

  SmoothField() = default;
  SmoothField(ValueFn value, GradientFn gradient, HessianFn hessian);

  static SmoothField constant(double c);
  static SmoothField polynomial(std::vector<Monomial> terms);
  // derivatives by centered differences
  static SmoothField from_value(ValueFn value, double step = kFiniteDifferenceStep);
  static SmoothField from_value_and_gradient(ValueFn value, GradientFn gradient,
                                             double step = kFiniteDifferenceStep);
  static SmoothField from_expression(const Expression& e, double step = kFiniteDifferenceStep);

  // sum_j a_j exp(-|x-c_j|^2 / w_j^2)
  struct Bump {
    double amplitude;
    Vec3 center;
    double width;
  };
  static SmoothField gaussian_bumps(std::vector<Bump> bumps);
  // (sqrt(x1^2+x2^2) - R)^2 + x3^2
  static SmoothField torus_radial(double R);
  // azimuth atan2(x2,x1), branch centered on `reference`
  static SmoothField azimuth(double reference = 0.0);
  // poloidal angle atan2(x3, rho-R), branch centered on `reference`
  static SmoothField poloidal(double R, double reference = 0.0);

  static SmoothField linear_combination(std::vector<std::pair<double, SmoothField>> terms);

  double value(const Vec3& x) const { return value_(x); }
  Vec3 gradient(const Vec3& x) const { return gradient_(x); }
  Mat3 hessian(const Vec3& x) const { return hessian_(x); }
  double operator()(const Vec3& x) const { return value_(x); }
  bool valid() const { return static_cast<bool>(value_); }

 private:
  ValueFn value_;
  GradientFn gradient_;
  HessianFn hessian_;
};

SmoothField operator+(const SmoothField& a, const SmoothField& b);
SmoothField operator*(double c, const SmoothField& a);

class VectorField {
 public:
  enum class Kind { GradientOfField, Explicit };
  using EvalFn = std::function<Vec3(const Vec3&)>;
  using JacobianFn = std::function<Mat3(const Vec3&)>;

  VectorField() = default;
  static VectorField gradient_of(const SmoothField& f);
  // Jacobian by centered differences when omitted
  static VectorField explicit_field(EvalFn eval, JacobianFn jacobian = {},
                                    double step = kFiniteDifferenceStep);
  static VectorField zero();

  Vec3 operator()(const Vec3& x) const { return eval_(x); }
  Mat3 jacobian(const Vec3& x) const { return jacobian_(x); }
  Kind kind() const { return kind_; }
  bool valid() const { return static_cast<bool>(eval_); }
  VectorField scaled(double c) const;
  const std::optional<SmoothField>& potential() const { return potential_; }

  friend VectorField operator+(const VectorField& a, const VectorField& b);

 private:
  Kind kind_ = Kind::Explicit;
  EvalFn eval_;
  JacobianFn jacobian_;
  std::optional<SmoothField> potential_;
};

class NoiseMap {
 public:
  using SigmaFn = std::function<Mat3(const Vec3&)>;
  // d[k] = d sigma / d x_k
  using DerivativeFn = std::function<std::array<Mat3, 3>(const Vec3&)>;

  NoiseMap() = default;
  static NoiseMap from_sigma(SigmaFn sigma, DerivativeFn derivative = {},
                             double step = kFiniteDifferenceStep);
  // s(x) (I - n n^T) with n = grad F / |grad F|
  static NoiseMap tangent_projection(const SmoothField& F,
                                     std::optional<SmoothField> scale = std::nullopt);

  Mat3 sigma(const Vec3& x) const { return sigma_(x); }
  std::array<Mat3, 3> derivative(const Vec3& x) const { return derivative_(x); }
  Mat3 diffusion(const Vec3& x) const {
    Mat3 s = sigma_(x);
    return s * s.transpose();
  }
  // Sigma_i = sum_jk d_k sigma_ij sigma_kj
  Vec3 ito_correction(const Vec3& x) const;
  bool valid() const { return static_cast<bool>(sigma_); }

 private:
  SigmaFn sigma_;
  DerivativeFn derivative_;
};

enum class PerturbationForm {
  DoubleCross,  // velocity grad F x (grad F x b)
  SingleCross,  // velocity grad F x p
};

struct Perturbation {
  PerturbationForm form = PerturbationForm::DoubleCross;
  VectorField field;
};

struct SurfaceSystem {
  std::string name;
  SmoothField F;
  SmoothField G;
  Perturbation perturbation;
  std::optional<NoiseMap> noise;
  double z = 0.5;
  Vec3 x0 = Vec3::Zero();
  double epsilon = 1e-3;
  double delta = 0.0;
  // a point from which the working surface is star-shaped (meshing)
  Vec3 center = Vec3::Zero();
  // identifies the system for caching
  std::string fingerprint;
};

// throws Error(Config) when F(x0) != z
void validate(const SurfaceSystem& sys, double tol = 1e-10);

Vec3 fast_field(const SurfaceSystem& sys, const Vec3& x);
Vec3 damping_field(const SurfaceSystem& sys, const Vec3& x);
// slow velocity for either perturbation form
Vec3 perturbation_velocity(const SurfaceSystem& sys, const Vec3& x);
// w with perturbation velocity = grad F x w
Vec3 perturbation_potential(const SurfaceSystem& sys, const Vec3& x);
// curl w . n
double perturbation_flux_density(const SurfaceSystem& sys, const Vec3& x);
Vec3 ito_correction(const SurfaceSystem& sys, const Vec3& x);
double divergence_check(const SurfaceSystem& sys, const Vec3& x,
                        double step = kFiniteDifferenceStep);

Vec3 curl(const VectorField& v, const Vec3& x);
Vec3 curl_finite_difference(const std::function<Vec3(const Vec3&)>& v, const Vec3& x,
                            double step = kFiniteDifferenceStep);
Mat3 jacobian_finite_difference(const std::function<Vec3(const Vec3&)>& v, const Vec3& x,
                                double step = kFiniteDifferenceStep);
Vec3 gradient_finite_difference(const std::function<double(const Vec3&)>& f, const Vec3& x,
                                double step = kFiniteDifferenceStep);

// grad G - (grad G . n) n
Vec3 tangential_gradient(const SmoothField& F, const SmoothField& G, const Vec3& x);
// min over unit tangent e of e.(a e)
double tangent_ellipticity(const NoiseMap& noise, const SmoothField& F, const Vec3& x);
// orthonormal tangent basis at x
std::pair<Vec3, Vec3> tangent_basis(const Vec3& normal);

// x <- x - (F-z)/|grad F|^2 grad F until |F-z| <= tol; throws ProjectionFailure
Vec3 project_to_level(const SmoothField& F, double z, const Vec3& x, double tol = 1e-12,
                      int max_iterations = 50);

// F=|x|^2/2, z=1/2, G=x3 - x1^2 - beta x1 + 1, b = kappa grad G
SurfaceSystem canonical_sphere_system(double beta = 0.0, double kappa = 1.0);
// F=|x|^2/2, G=x3
SurfaceSystem sphere_height_system();

}  // namespace slowfast
