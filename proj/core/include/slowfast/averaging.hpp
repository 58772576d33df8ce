#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "slowfast/interp.hpp"
#include "slowfast/levelsets.hpp"

namespace slowfast {

// Line functionals of one level curve, all as ∫_0^T (.) dt.
struct LineFunctionals {
  double g = 0.0;
  double T = 0.0;
  double A = 0.0;   // grad G . perturbation velocity (deterministic drift numerator)
  double A1 = 0.0;  // grad G . Sigma
  double A2 = 0.0;  // tr(a Hess G)
  double B = 0.0;   // |(grad G)^T sigma|^2
};

LineFunctionals curve_functionals(const SurfaceSystem& sys, const LevelCurve& curve);
LineFunctionals edge_functionals(const SurfaceSystem& sys, const ReebGraph& graph, int k, double g,
                                 const TraceOptions& opts = {});

// A/T on edge k (line route)
double drift_coefficient(const SurfaceSystem& sys, const ReebGraph& graph, int k, double g);

struct NoiseCoefficients {
  double A = 0.0, A1 = 0.0, A2 = 0.0, B = 0.0;
};
NoiseCoefficients noise_coefficients(const SurfaceSystem& sys, const ReebGraph& graph, int k, double g);

// Surface route: -∬_{D_k(g)} curl(w).n dm over the sublevel component below
// the curve, Richardson-extrapolated over two mesh levels.
class StokesIntegrator {
 public:
  StokesIntegrator(const SurfaceSystem& sys, int subdivisions = 5);
  // ∬_{component of {G<g} containing anchor} curl(w).n dm
  double flux(double g, const Vec3& anchor) const;
  double flux_at_level(const SurfaceMesh& mesh, double g, const Vec3& anchor) const;
  // deterministic drift numerator of edge k at g (equals A of the line route)
  double drift_numerator(const ReebGraph& graph, int k, double g) const;

 private:
  const SurfaceSystem* sys_;
  std::shared_ptr<SurfaceMesh> coarse_, fine_;
};

double drift_coefficient_stokes(const SurfaceSystem& sys, const ReebGraph& graph, int k, double g,
                                const StokesIntegrator& stokes);

struct SaddleOptions {
  std::vector<double> offsets = {1e-2, 1e-3, 1e-4};
  double stokes_offset = 1e-4;
  int stokes_subdivisions = 5;
  double stability_tolerance = 1e-2;  // relative, between the two smallest offsets
};

struct SaddleData {
  int saddle = -1;
  double g_saddle = 0.0;
  std::vector<int> lower_edges;
  int upper_edge = -1;
  std::map<int, double> beta;          // gluing weights
  std::map<int, double> drift_limit;   // lim A_k at the saddle
  std::map<int, double> flux_line;     // -lim A_k for lower edges
  std::map<int, double> flux_surface;  // surface route
  std::map<int, double> p;             // branching probabilities, line route
  std::map<int, double> p_surface;
  std::map<int, double> q;             // beta_k / sum beta over lower edges and the upper edge
  double additivity_error = 0.0;       // |beta_up - sum beta_low| / beta_up
  double drift_additivity_error = 0.0;
  double route_discrepancy = 0.0;      // max |p - p_surface| / p
  bool symmetric = false;
};

// beta part only
SaddleData gluing_weights(const SurfaceSystem& sys, const ReebGraph& graph, const SaddleOptions& opts = {});
// beta, drift limits and p by both routes
SaddleData branching_probabilities(const SurfaceSystem& sys, const ReebGraph& graph, const SaddleOptions& opts = {});

// Tabulated coefficients on every edge.
struct EdgeTable {
  int edge = 0;
  double g_lo = 0.0, g_hi = 0.0;
  VertexType lower_type = VertexType::Minimum, upper_type = VertexType::Saddle;
  std::vector<LineFunctionals> rows;
  Pchip drift;           // A/T
  Pchip noise_drift;     // (A1+A2)/T
  Pchip diffusion;       // B/T
  Pchip period;          // T (finite rows only)
  double tip_slope = 0.0;  // d(A/T)/dg at a minimum tip

  double drift_at(double g) const;
  double noise_drift_at(double g) const;
  double diffusion_at(double g) const;
};

struct CoefficientTable {
  std::map<int, EdgeTable> edges;
  bool has_noise = false;
  const EdgeTable& at(int k) const;
};

struct TableOptions {
  int chebyshev_nodes = 40;
  std::vector<double> saddle_offsets = {1e-6, 1e-5, 1e-4, 1e-3, 3e-3};
  std::vector<double> tip_offsets = {1e-4, 1e-3, 3e-3};
  TraceOptions trace;
  std::string cache_dir;  // empty: no cache
  unsigned threads = 0;
};

CoefficientTable tabulate(const SurfaceSystem& sys, const ReebGraph& graph, const TableOptions& opts = {});
// scale every drift numerator A by c (b -> c b)
CoefficientTable scale_drift(const CoefficientTable& table, double c);

struct SlowPath {
  std::vector<double> t, g;
  std::vector<int> edge;
  double tau0 = -1.0;  // time the saddle is reached, -1 if never
  int well = 0;
};

struct SlowOdeOptions {
  double dt = 1e-3;
  double vertex_offset = 1e-9;
  std::size_t record_every = 1;
};

// ġ = A/T along edges; at a join saddle continue into `well_choice`.
SlowPath solve_slow_ode(const CoefficientTable& table, const ReebGraph& graph, GraphCoordinate start, double t_end,
                        int well_choice, const SlowOdeOptions& opts = {});
SlowPath solve_slow_ode(const SurfaceSystem& sys, const ReebGraph& graph, GraphCoordinate start, double t_end,
                        int well_choice, const SlowOdeOptions& opts = {});

struct MetastableOutcome {
  std::map<int, double> distribution;  // over well edges
  std::string rule;
};

struct MetastableReport {
  std::map<int, double> lambda;              // per well edge
  std::map<int, double> lambda_refined;      // same with doubled panels
  std::map<int, double> relative_change;
  int shallow_edge = 0, deep_edge = 0, upper_edge = 0;
  std::map<int, double> p;
  bool tie = false;
  // cases printed with well 1 as the smaller threshold
  std::vector<std::string> printed_cases;
  MetastableOutcome decide(int start_edge, double lambda) const;
};

struct ThresholdOptions {
  int panels = 12;
  int gauss_points = 6;
  double tip_fit_fraction = 2e-4;
  double saddle_cut_fraction = 1e-6;
};

double lambda_integral(const SurfaceSystem& sys, const ReebGraph& graph, int k, const ThresholdOptions& opts);
MetastableReport metastable_thresholds(const SurfaceSystem& sys, const ReebGraph& graph, const SaddleData& saddle,
                                       const ThresholdOptions& opts = {});

std::uint64_t fnv1a(const std::string& s);

}  // namespace slowfast
