#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "slowfast/geometry.hpp"
#include "slowfast/surface_mesh.hpp"

namespace slowfast {

enum class CriticalKind { Minimum, Maximum, Saddle };
const char* to_string(CriticalKind kind);

struct CriticalPoint {
  Vec3 x;
  double g = 0.0;
  CriticalKind kind = CriticalKind::Minimum;
  // under a friction-like perturbation
  std::string stability;
  // smallest |eigenvalue| of the tangential Hessian
  double hessian_gap = 0.0;
  // Lagrange multiplier: grad G = mu grad F
  double mu = 0.0;
};

struct CriticalSearchOptions {
  int seeds = 800;
  double dedup_distance = 1e-6;
  double degenerate_eigenvalue = 1e-6;
};

std::vector<CriticalPoint> find_critical_points(const SurfaceSystem& sys, const CriticalSearchOptions& opts = {});
// Newton on the Lagrange system from one seed; nullopt if it does not converge
std::optional<CriticalPoint> refine_critical_point(const SmoothField& F, double z, const SmoothField& G,
                                                   const Vec3& seed, double degenerate_eigenvalue = 1e-6);
// eigenvalues of the tangential Hessian of the Lagrangian at a critical point
Eigen::Vector2d tangential_hessian_eigenvalues(const SmoothField& F, const SmoothField& G, const Vec3& x, double mu);

// Closed orbit of `velocity` on {F=z} ∩ {H=level}.
struct OrbitProblem {
  SmoothField F;
  double z = 0.0;
  SmoothField H;
  std::function<Vec3(const Vec3&)> velocity;
};

struct TraceOptions {
  double dt_max = 0.01;      // time-step cap, both passes
  double ds_max = 0.02;      // arclength cap in the first pass
  int min_samples = 1024;
  std::size_t max_steps = 4'000'000;
};

struct LevelCurve {
  double g = 0.0;
  int edge = 0;
  std::vector<Vec3> samples;  // uniform in time, one period, first = seed
  double period = 0.0;
  double dt = 0.0;
  double closure_error = 0.0;
  double max_level_error = 0.0;
  double max_surface_error = 0.0;
  double length = 0.0;
  std::map<std::string, double> functionals;
};

// Newton onto {F=z} ∩ {H=level} (minimum-norm steps)
Vec3 correct_to_curve(const SmoothField& F, double z, const SmoothField& H, double level, const Vec3& x,
                      double tol = 1e-13, int max_iterations = 30);

LevelCurve trace_orbit(const OrbitProblem& problem, double level, const Vec3& seed, const TraceOptions& opts = {});
LevelCurve trace_level_curve(const SurfaceSystem& sys, double g, const Vec3& seed, const TraceOptions& opts = {});

// ∫_0^T φ(x_t) dt along the traced orbit
double line_functional(const LevelCurve& curve, const std::function<double(const Vec3&)>& phi);

// Move x along the tangential gradient of H until H = target.
Vec3 flow_to_level(const SmoothField& F, double z, const SmoothField& H, const Vec3& x, double target);

enum class VertexType { Minimum, Maximum, Saddle, Boundary };
const char* to_string(VertexType type);

struct ReebVertex {
  int id = 0;
  VertexType type = VertexType::Minimum;
  double g = 0.0;
  Vec3 x = Vec3::Zero();
  int critical_index = -1;  // into ReebGraph::critical_points, -1 for boundary
};

struct ReebEdge {
  int id = 0;
  double g_lo = 0.0, g_hi = 0.0;
  int lower = -1, upper = -1;  // vertex ids; g increases from lower to upper
  Vec3 reference = Vec3::Zero();
  double reference_g = 0.0;
  std::vector<int> minima_below;  // vertex ids of minima reachable downward
};

struct ReebGraph {
  std::vector<ReebVertex> vertices;
  std::vector<ReebEdge> edges;
  std::vector<CriticalPoint> critical_points;
  double g_P = 0.0;
  double separatrix_margin = 1e-6;

  const ReebEdge& edge(int id) const;
  const ReebVertex& vertex(int id) const;
  std::vector<int> edges_at(int vertex) const;
  std::vector<int> lower_edges(int vertex) const;
  std::vector<int> upper_edges(int vertex) const;
  std::vector<int> saddles() const;
  bool contains(int edge, double g) const;
  // graph metric
  double rho(int k1, double g1, int k2, double g2) const;
  int euler_characteristic() const { return static_cast<int>(vertices.size()) - static_cast<int>(edges.size()); }
};

struct ReebOptions {
  int mesh_subdivisions = 5;
  double separatrix_margin = 1e-6;
  double persistence_fraction = 1e-3;
  CriticalSearchOptions critical;
};

ReebGraph build_reeb_graph(const SurfaceSystem& sys, const ReebOptions& opts = {});

// A point on edge k at level g (flowed from the edge's reference point).
Vec3 edge_seed(const SurfaceSystem& sys, const ReebGraph& graph, int k, double g);
LevelCurve trace_edge_curve(const SurfaceSystem& sys, const ReebGraph& graph, int k, double g,
                            const TraceOptions& opts = {});

struct GraphCoordinate {
  int edge = 0;
  double g = 0.0;
};
GraphCoordinate classify_point(const SurfaceSystem& sys, const ReebGraph& graph, const Vec3& x);
// local minimum reached by tangential gradient descent
Vec3 descend_to_minimum(const SmoothField& F, double z, const SmoothField& G, const Vec3& x);

}  // namespace slowfast
