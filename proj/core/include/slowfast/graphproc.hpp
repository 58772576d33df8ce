#pragma once

#include <functional>
#include <map>
#include <vector>

#include "slowfast/averaging.hpp"
#include "slowfast/levelsets.hpp"
#include "slowfast/rng.hpp"

namespace slowfast {

struct GraphSample {
  double t = 0.0;
  int edge = 0;
  double g = 0.0;
};

struct BranchEvent {
  double t = 0.0;
  int vertex = 0;
  int from_edge = 0;
  int to_edge = 0;
};

struct GraphPath {
  std::vector<GraphSample> samples;
  std::vector<BranchEvent> branches;
  bool absorbed = false;  // reached P
  bool stopped = false;   // stop rule fired
  std::size_t steps = 0;
  const GraphSample& final() const { return samples.back(); }
};

struct LimitProcessOptions {
  double dt = 1e-3;
  std::size_t record_every = 1;
};

// Deterministic flow along edges, Bernoulli(p) branch at the join saddle.
GraphPath simulate_limit_process(const CoefficientTable& table, const ReebGraph& graph, const SaddleData& saddle,
                                 GraphCoordinate start, double t_end, Rng& rng, const LimitProcessOptions& opts = {});

enum class BoundaryPolicy { Absorb, Reflect };

struct GraphDiffusionConfig {
  double dt_max = 1e-3;
  double dt_scale = 1e-3;  // dt <= dt_scale * range^2 / (delta^2 B/T)
  double vertex_h = 1e-2;
  double vertex_resolution = 0.02;  // dt <= vertex_resolution * (|g - g_s| + h)^2 / (delta^2 B/T)
  BoundaryPolicy boundary = BoundaryPolicy::Absorb;
  std::size_t record_every = 0;  // 0: endpoints and vertex passages only
  std::function<bool(int edge, double g)> stop;
};

GraphPath simulate_graph_diffusion(const CoefficientTable& table, const ReebGraph& graph, const SaddleData& saddle,
                                   double delta, GraphCoordinate start, double t_end, const GraphDiffusionConfig& cfg,
                                   Rng& rng);

// Edges at the join saddle with zero drift and B frozen at its saddle limit (T = 1).
CoefficientTable frozen_vertex_model(const ReebGraph& graph, const SaddleData& saddle);

// Exit law of the graph diffusion from the star {|g - g_s| < window_k on edge k} around the join
// saddle, from the generator with the gluing condition. start_edge = 0 starts at the vertex.
std::map<int, double> exit_law_bvp(const CoefficientTable& table, const ReebGraph& graph, const SaddleData& saddle,
                                   double delta, const std::map<int, double>& window, int start_edge = 0,
                                   double start_distance = 0.0);

struct TransitionOptions {
  double t_max = 1e5;
  double depth_fraction = 0.5;  // target: other well below g_min + fraction * depth
  GraphDiffusionConfig diffusion;
  unsigned threads = 0;
};

struct TransitionRow {
  double delta = 0.0;
  int runs = 0;
  int censored = 0;
  double mean = 0.0, stderr_ = 0.0, ci_lo = 0.0, ci_hi = 0.0;
  double scaled_log_mean = 0.0;  // delta^2 ln(mean)
  std::vector<double> times;
};

std::vector<TransitionRow> transition_time_stats(const CoefficientTable& table, const ReebGraph& graph,
                                                 const SaddleData& saddle, const std::vector<double>& deltas,
                                                 int start_well, int n_runs, std::uint64_t seed,
                                                 const TransitionOptions& opts = {});

}  // namespace slowfast
