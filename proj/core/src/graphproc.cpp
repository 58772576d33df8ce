#include "slowfast/graphproc.hpp"

#include <algorithm>
#include <cmath>

#include "slowfast/errors.hpp"
#include "slowfast/interp.hpp"
#include "slowfast/parallel.hpp"
#include "slowfast/stats.hpp"

namespace slowfast {

GraphPath simulate_limit_process(const CoefficientTable& table, const ReebGraph& graph, const SaddleData& saddle,
                                 GraphCoordinate start, double t_end, Rng& rng, const LimitProcessOptions& opts) {
  const int first = saddle.lower_edges.at(0), second = saddle.lower_edges.at(1);
  // drawn up front so the run consumes exactly one uniform whatever the path does
  const int well = rng.bernoulli(saddle.p.at(first)) ? first : second;
  SlowOdeOptions so;
  so.dt = opts.dt;
  so.record_every = opts.record_every;
  const SlowPath sp = solve_slow_ode(table, graph, start, t_end, well, so);
  GraphPath path;
  for (std::size_t i = 0; i < sp.t.size(); ++i) path.samples.push_back({sp.t[i], sp.edge[i], sp.g[i]});
  if (sp.tau0 >= 0.0) path.branches.push_back({sp.tau0, saddle.saddle, saddle.upper_edge, well});
  const auto& last = path.samples.back();
  const auto& e = graph.edge(last.edge);
  path.absorbed = graph.vertex(e.upper).type == VertexType::Boundary && last.g >= e.g_hi;
  path.steps = sp.t.size();
  return path;
}

GraphPath simulate_graph_diffusion(const CoefficientTable& table, const ReebGraph& graph, const SaddleData& saddle,
                                   double delta, GraphCoordinate start, double t_end, const GraphDiffusionConfig& cfg,
                                   Rng& rng) {
  if (!(delta > 0.0)) throw Error(ErrorKind::Config, "graph diffusion needs delta > 0");
  const double d2 = delta * delta;
  const double h = cfg.vertex_h;
  const double gs = saddle.g_saddle;
  std::vector<int> incident = saddle.lower_edges;
  incident.push_back(saddle.upper_edge);
  std::vector<double> q;
  for (int k : incident) q.push_back(saddle.q.at(k));

  GraphPath path;
  int k = start.edge;
  double g = start.g, t = 0.0;
  path.samples.push_back({t, k, g});

  auto at_saddle = [&](int edge, bool lower_end) {
    const auto& e = graph.edge(edge);
    return (lower_end ? e.lower : e.upper) == saddle.saddle;
  };
  auto redirect = [&](int from) {
    double u = rng.uniform();
    std::size_t i = 0;
    while (i + 1 < q.size() && u >= q[i]) u -= q[i++];
    const int to = incident[i];
    path.branches.push_back({t, saddle.saddle, from, to});
    path.samples.push_back({t, to, gs});
    k = to;
    g = (to == saddle.upper_edge) ? gs + h : gs - h;
  };

  // a start inside the vertex neighbourhood is a vertex passage
  if (std::abs(g - gs) < h && (at_saddle(k, true) || at_saddle(k, false))) redirect(k);

  std::size_t count = 0;
  while (t < t_end) {
    if (cfg.stop && cfg.stop(k, g)) {
      path.stopped = true;
      break;
    }
    const EdgeTable& et = table.at(k);
    const auto& e = graph.edge(k);
    const double range = e.g_hi - e.g_lo;
    const double a = et.drift_at(g) + 0.5 * d2 * et.noise_drift_at(g);
    const double b = d2 * et.diffusion_at(g);
    double dt = std::min(cfg.dt_max, t_end - t);
    if (b > 0.0) {
      dt = std::min(dt, cfg.dt_scale * range * range / b);
      // resolve the vertex neighbourhood: steps shrink with the distance to the saddle
      if (e.lower == saddle.saddle || e.upper == saddle.saddle) {
        const double dist = std::abs(g - gs) + h;
        dt = std::min(dt, cfg.vertex_resolution * dist * dist / b);
      }
    }
    const VertexType lo_type = graph.vertex(e.lower).type, hi_type = graph.vertex(e.upper).type;
    if (lo_type == VertexType::Minimum && a != 0.0)
      dt = std::min(dt, std::max(1e-2 * cfg.dt_max, 0.2 * (g - e.g_lo) / std::abs(a)));
    double gn = g + a * dt + std::sqrt(b * dt) * rng.normal();
    if (std::abs(gn - g) > range)
      throw Error(ErrorKind::StepTooLarge, "step of " + std::to_string(gn - g) + " crosses edge " + std::to_string(k));
    t += dt;
    ++path.steps;
    // lower end
    if (gn < e.g_lo + (lo_type == VertexType::Saddle ? h : 0.0)) {
      if (lo_type == VertexType::Saddle) {
        redirect(k);
        continue;
      }
      gn = std::min(2.0 * e.g_lo - gn, e.g_hi);  // reflection at the inaccessible tip
    }
    if (gn > e.g_hi - (hi_type == VertexType::Saddle ? h : 0.0)) {
      if (hi_type == VertexType::Saddle) {
        redirect(k);
        continue;
      }
      if (hi_type == VertexType::Boundary && cfg.boundary == BoundaryPolicy::Absorb) {
        g = e.g_hi;
        path.absorbed = true;
        break;
      }
      gn = std::max(2.0 * e.g_hi - gn, e.g_lo);
    }
    g = gn;
    if (cfg.record_every > 0 && ++count % cfg.record_every == 0) path.samples.push_back({t, k, g});
  }
  path.samples.push_back({t, k, g});
  return path;
}

CoefficientTable frozen_vertex_model(const ReebGraph& graph, const SaddleData& saddle) {
  CoefficientTable table;
  table.has_noise = true;
  std::vector<int> incident = saddle.lower_edges;
  incident.push_back(saddle.upper_edge);
  for (int k : incident) {
    const auto& e = graph.edge(k);
    EdgeTable t;
    t.edge = k;
    t.g_lo = e.g_lo;
    t.g_hi = e.g_hi;
    t.lower_type = graph.vertex(e.lower).type;
    t.upper_type = graph.vertex(e.upper).type;
    const std::vector<double> g = {e.g_lo, e.g_hi};
    const double beta = saddle.beta.at(k);
    t.drift = Pchip(g, {0.0, 0.0});
    t.noise_drift = Pchip(g, {0.0, 0.0});
    t.diffusion = Pchip(g, {beta, beta});
    t.period = Pchip(g, {1.0, 1.0});
    table.edges[k] = t;
  }
  return table;
}

namespace {

double log_add(double a, double b) {
  if (a == -INFINITY) return b;
  if (b == -INFINITY) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// log of the scale function Phi(s) = int_0^s phi, phi(0) = 1, on one edge in the distance
// coordinate s = |g - g_s|; returns log Phi at each requested distance (ascending).
std::vector<double> log_scale(const EdgeTable& et, double gs, bool upper, double delta,
                              const std::vector<double>& at) {
  std::vector<double> xs, rs;
  for (const auto& r : et.rows) {
    if (r.B <= 0.0) continue;
    xs.push_back(r.g);
    rs.push_back((r.A + 0.5 * delta * delta * (r.A1 + r.A2)) / r.B);
  }
  // tables without raw rows (frozen model) carry only the interpolants
  if (et.rows.empty())
    for (double g : et.diffusion.x()) {
      const double b = et.diffusion_at(g);
      if (b <= 0.0) continue;
      xs.push_back(g);
      rs.push_back((et.drift_at(g) + 0.5 * delta * delta * et.noise_drift_at(g)) / b);
    }
  const Pchip ratio(xs, rs);
  auto rat = [&](double g) { return ratio(std::clamp(g, ratio.x_min(), ratio.x_max())); };
  const double sign = upper ? -1.0 : 1.0;  // log phi' = sign * 2 r / delta^2
  const int n = 4000;
  const double smax = at.back();
  std::vector<double> out;
  double logphi = 0.0, logPhi = -INFINITY, s = 0.0;
  double r_prev = rat(upper ? gs : gs);
  std::size_t next = 0;
  for (int i = 1; i <= n && next < at.size(); ++i) {
    const double s1 = smax * i / n;
    const double g1 = upper ? gs + s1 : gs - s1;
    const double r1 = rat(g1);
    const double logphi1 = logphi + sign * 2.0 / (delta * delta) * 0.5 * (r_prev + r1) * (s1 - s);
    // trapezoid of exp(logphi) over [s, s1]
    const double seg = std::log(0.5 * (s1 - s)) + log_add(logphi, logphi1);
    const double logPhi1 = log_add(logPhi, seg);
    while (next < at.size() && at[next] <= s1 + 1e-15) {
      const double w = (at[next] - s) / (s1 - s);
      out.push_back(log_add(logPhi, std::log(std::max(w, 1e-300)) + seg));
      ++next;
    }
    s = s1;
    logphi = logphi1;
    logPhi = logPhi1;
    r_prev = r1;
  }
  return out;
}

}  // namespace

std::map<int, double> exit_law_bvp(const CoefficientTable& table, const ReebGraph& graph, const SaddleData& saddle,
                                   double delta, const std::map<int, double>& window, int start_edge,
                                   double start_distance) {
  (void)graph;
  std::vector<int> incident = saddle.lower_edges;
  incident.push_back(saddle.upper_edge);
  std::map<int, double> logw;  // log(beta_i / Phi_i(w_i))
  double logstart_ratio = 0.0;
  for (int k : incident) {
    const bool upper = k == saddle.upper_edge;
    std::vector<double> at = {window.at(k)};
    if (k == start_edge && start_distance > 0.0) at = {start_distance, window.at(k)};
    const auto lp = log_scale(table.at(k), saddle.g_saddle, upper, delta, at);
    logw[k] = std::log(saddle.beta.at(k)) - lp.back();
    if (at.size() == 2) logstart_ratio = lp.front() - lp.back();
  }
  double lsum = -INFINITY;
  for (int k : incident) lsum = log_add(lsum, logw[k]);
  std::map<int, double> u0;
  for (int k : incident) u0[k] = std::exp(logw[k] - lsum);
  if (start_edge == 0 || start_distance <= 0.0) return u0;
  // from distance s0 on start_edge: u_j(s0) = u0_j + (delta_ij - u0_j) Phi(s0)/Phi(w)
  const double ratio = std::exp(logstart_ratio);
  std::map<int, double> out;
  for (int k : incident) out[k] = u0[k] + ((k == start_edge ? 1.0 : 0.0) - u0[k]) * ratio;
  return out;
}

std::vector<TransitionRow> transition_time_stats(const CoefficientTable& table, const ReebGraph& graph,
                                                 const SaddleData& saddle, const std::vector<double>& deltas,
                                                 int start_well, int n_runs, std::uint64_t seed,
                                                 const TransitionOptions& opts) {
  const auto& lows = saddle.lower_edges;
  if (std::find(lows.begin(), lows.end(), start_well) == lows.end())
    throw Error(ErrorKind::EdgeRange, "start edge " + std::to_string(start_well) + " is not a well below the saddle");
  const int other = lows[0] == start_well ? lows[1] : lows[0];
  const auto& eo = graph.edge(other);
  const double target = eo.g_lo + opts.depth_fraction * (eo.g_hi - eo.g_lo);
  const auto& es = graph.edge(start_well);
  const GraphCoordinate start{start_well, es.g_lo + 1e-3 * (es.g_hi - es.g_lo)};

  std::vector<TransitionRow> rows;
  for (std::size_t di = 0; di < deltas.size(); ++di) {
    TransitionRow row;
    row.delta = deltas[di];
    row.runs = n_runs;
    std::vector<double> times(n_runs);
    std::vector<char> censored(n_runs, 0);
    GraphDiffusionConfig cfg = opts.diffusion;
    cfg.record_every = 0;
    cfg.stop = [other, target](int e, double g) { return e == other && g <= target; };
    parallel_for(
        n_runs,
        [&](std::size_t i) {
          Rng rng(seed, 1000003ULL * (di + 1) + i);
          const auto p = simulate_graph_diffusion(table, graph, saddle, row.delta, start, opts.t_max, cfg, rng);
          times[i] = p.final().t;
          censored[i] = !p.stopped;
        },
        opts.threads);
    std::vector<double> done;
    for (int i = 0; i < n_runs; ++i) {
      if (censored[i])
        ++row.censored;
      else
        done.push_back(times[i]);
    }
    const MeanCI ci = mean_ci(times);  // censored runs enter at the cap: a lower bound
    row.mean = ci.mean;
    row.stderr_ = ci.se;
    row.ci_lo = ci.lo;
    row.ci_hi = ci.hi;
    row.scaled_log_mean = row.delta * row.delta * std::log(row.mean);
    row.times = times;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace slowfast
