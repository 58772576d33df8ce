#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slowfast/config.hpp"
#include "slowfast/flow.hpp"
#include "slowfast/geometry.hpp"
#include "slowfast/graphproc.hpp"
#include "slowfast/interp.hpp"
#include "slowfast/levelsets.hpp"
#include "slowfast/rng.hpp"

namespace slowfast {

// Configured location of one well: angles of its extremum and of its saddle.
struct WellSeed {
  std::string name;
  double phi_extremum = 0.0, psi_extremum = 0.0;
  double phi_saddle = 0.0, psi_saddle = 0.0;
};

// Flow x' = grad F x d on a torus component of {F=z}, with
// d = grad G + alpha_phi grad(phi) + alpha_psi grad(psi) (closed, not exact).
struct TorusSystem {
  std::string name = "torus";
  SmoothField F;
  double R = 1.0;  // radius of the core circle the angles refer to
  double z = 0.25;
  SmoothField G;
  double alpha_phi = 0.0, alpha_psi = 0.0;
  VectorField p;  // perturbation enters as grad F x p
  std::optional<NoiseMap> noise;
  Vec3 x0 = Vec3::Zero();
  double epsilon = 1e-3;
  double delta = 0.1;
  std::vector<WellSeed> wells;
  std::string fingerprint;

  Vec3 d(const Vec3& x) const;
  Vec3 fast(const Vec3& x) const;  // grad F x d
  Vec3 perturbation_velocity(const Vec3& x) const;  // grad F x p
  // curl of d by finite differences
  Vec3 curl_d(const Vec3& x) const;
};

// Default example: round torus, two Gaussian dips of unequal depth, golden-ratio winding.
TorusSystem canonical_torus_system(double perturbation_scale = 1.0);

// {"preset": "canonical-torus", "perturbation_scale": c,
//  "parameters": {"epsilon", "delta", "x0_angles": [phi, psi]}}
TorusSystem torus_from_json(const Json& j);

Eigen::Vector2d torus_angles(double R, const Vec3& x);
// point of {F=z} on the ray from the core circle with the given angles
Vec3 torus_point(const TorusSystem& t, double phi, double psi);
// |x_phi x x_psi| at the angle pair
double torus_area_element(const TorusSystem& t, double phi, double psi);

struct Well {
  std::string name;
  int id = 0;
  Vec3 extremum = Vec3::Zero();  // M_k
  Vec3 saddle = Vec3::Zero();    // A_k
  bool maximum = false;
  SmoothField H;  // single-valued branch of the local potential
  double H_saddle = 0.0;
  double h_extremum = 0.0;  // h at M_k
  Eigen::Vector2d center_angles = Eigen::Vector2d::Zero();
  std::vector<Eigen::Vector2d> boundary;  // separatrix polygon, angles unwrapped around the centre
  Vec3 reference = Vec3::Zero();          // point inside, used to seed level curves

  double h(const Vec3& x) const { return H.value(x) - H_saddle; }
  bool contains(double R, const Vec3& x) const;
  // |h| as a fraction of |h(M_k)|, 0 outside the well
  double depth(double R, const Vec3& x) const;
};

std::vector<Well> prepare_wells(const TorusSystem& t);

// 1 when the perturbation drives orbits into the well
int capture_indicator(double psi_bar, bool maximum);

struct TorusEdge {
  int k = 0;
  std::string name;
  bool maximum = false;
  double h_extremum = 0.0;
  double psi_bar = 0.0;  // 2 ∮ grad H . (grad F x p) dl / |grad F x d| at the separatrix
  int s = 0;
  double r = 0.0;
  double beta_line = 0.0;  // ∮ |grad H^T sigma|^2 dl / |grad F x d| at the separatrix
  double beta = 0.0;       // beta_line / lambda(E)
  double well_measure = 0.0;  // ∬_U dm/|grad F| via the coarea formula
  std::vector<double> h, T, a, a1, a2, b;  // tabulated functionals
  Pchip drift;   // B̄(h) = a/T, 0 at the separatrix
  Pchip period;
  double drift_at(double hv) const;
};

struct RootedGraph {
  double lambda_M = 0.0;            // ∬_M dm/|grad F|
  double lambda_M_refined = 0.0;
  double lambda_E = 0.0;            // lambda(E)
  double relative_change = 0.0;     // of lambda(E) under refinement
  double holding_constant = 1.0;    // holding rate = holding_constant * Σ r
  std::vector<TorusEdge> edges;
  double total_rate() const;
  double holding_rate() const { return holding_constant * total_rate(); }
  const TorusEdge& edge(int k) const;
};

struct TorusRateOptions {
  std::vector<double> separatrix_offsets = {1e-2, 1e-3, 1e-4};  // fractions of |h(M)|
  int table_nodes = 24;
  int angle_mesh = 96;
  double vanishing_tolerance = 1e-8;
  TraceOptions trace;
};

RootedGraph torus_rates(const TorusSystem& t, const std::vector<Well>& wells, const TorusRateOptions& opts = {});

struct InvariantCheckOptions {
  int bins = 12;                 // per angle
  double sample_dt = 1.0;        // fast time between recorded samples
  double h = 0.02;               // fast-time step
  bool rescaled = false;         // flow (grad F/|grad F|) x d, uniform in area
  int subsamples = 6;            // per bin and angle for the expected masses
  std::optional<Vec3> start;
};

struct InvariantCheck {
  double chi2 = 0.0;
  int dof = 0;
  double p_value = 0.0;
  std::size_t samples = 0;
  double max_F_error = 0.0;
  std::vector<double> observed, expected;
};

InvariantCheck invariant_measure_check(const TorusSystem& t, const std::vector<Well>& wells, double t_end,
                                       const InvariantCheckOptions& opts = {});

// Graph process: exponential holding at the root (edge 0), then deterministic h' = B̄_k(h).
GraphPath simulate_torus_limit(const RootedGraph& graph, GraphCoordinate start, double t_end, Rng& rng,
                               double dt = 1e-3, double stop_depth = 1.0);

struct TorusSdeOptions {
  IntegratorConfig integrator;  // method forced to Heun
  double entry_depth = 0.25;    // stop once inside a well at this fraction of its depth
};

struct TorusSdeResult {
  Trajectory trajectory;
  GraphPath path;
  int well = 0;            // well entered (0: none before t_end)
  double entry_time = -1.0;
};

TorusSdeResult simulate_torus_sde(const TorusSystem& t, const std::vector<Well>& wells, const Vec3& start,
                                  double t_end, const TorusSdeOptions& opts);

// time for the limit process to reach `depth` of well k starting at the separatrix
double torus_descent_time(const RootedGraph& graph, int k, double depth, double dt = 1e-4);

}  // namespace slowfast
