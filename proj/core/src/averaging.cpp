#include "slowfast/averaging.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "slowfast/errors.hpp"
#include "slowfast/parallel.hpp"

namespace slowfast {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

struct Integrands {
  double A, A1, A2, B;
};

Integrands integrands(const SurfaceSystem& sys, const Vec3& x) {
  const Vec3 gG = sys.G.gradient(x);
  Integrands r{gG.dot(perturbation_velocity(sys, x)), 0.0, 0.0, 0.0};
  if (sys.noise) {
    const Mat3 s = sys.noise->sigma(x);
    r.A1 = gG.dot(sys.noise->ito_correction(x));
    r.A2 = ((s * s.transpose()).cwiseProduct(sys.G.hessian(x))).sum();
    r.B = (s.transpose() * gG).squaredNorm();
  }
  return r;
}

}  // namespace

LineFunctionals curve_functionals(const SurfaceSystem& sys, const LevelCurve& curve) {
  LineFunctionals f;
  f.g = curve.g;
  f.T = curve.period;
  for (const auto& x : curve.samples) {
    const Integrands i = integrands(sys, x);
    f.A += i.A;
    f.A1 += i.A1;
    f.A2 += i.A2;
    f.B += i.B;
  }
  f.A *= curve.dt;
  f.A1 *= curve.dt;
  f.A2 *= curve.dt;
  f.B *= curve.dt;
  return f;
}

LineFunctionals edge_functionals(const SurfaceSystem& sys, const ReebGraph& graph, int k, double g,
                                 const TraceOptions& opts) {
  const auto& e = graph.edge(k);
  if (!(g > e.g_lo && g <= e.g_hi))
    throw Error(ErrorKind::EdgeRange, "g=" + std::to_string(g) + " not interior to edge " + std::to_string(k));
  return curve_functionals(sys, trace_edge_curve(sys, graph, k, g, opts));
}

double drift_coefficient(const SurfaceSystem& sys, const ReebGraph& graph, int k, double g) {
  const auto f = edge_functionals(sys, graph, k, g);
  return f.A / f.T;
}

NoiseCoefficients noise_coefficients(const SurfaceSystem& sys, const ReebGraph& graph, int k, double g) {
  if (!sys.noise) throw Error(ErrorKind::Config, "system has no noise map");
  const auto f = edge_functionals(sys, graph, k, g);
  return {f.A, f.A1, f.A2, f.B};
}

StokesIntegrator::StokesIntegrator(const SurfaceSystem& sys, int subdivisions) : sys_(&sys) {
  const double r = (sys.x0 - sys.center).norm();
  coarse_ = std::make_shared<SurfaceMesh>(star_shaped_mesh(sys.F, sys.z, sys.center, r, subdivisions));
  fine_ = std::make_shared<SurfaceMesh>(star_shaped_mesh(sys.F, sys.z, sys.center, r, subdivisions + 1));
}

double StokesIntegrator::flux_at_level(const SurfaceMesh& mesh, double g, const Vec3& anchor) const {
  const SurfaceSystem& s = *sys_;
  return integrate_sublevel_component(
             mesh, s.F, s.z, [&s](const Vec3& x) { return s.G.value(x); }, g, anchor,
             [&s](const Vec3& x) { return perturbation_flux_density(s, x); })
      .value;
}

double StokesIntegrator::flux(double g, const Vec3& anchor) const {
  const double c = flux_at_level(*coarse_, g, anchor);
  const double f = flux_at_level(*fine_, g, anchor);
  return (4.0 * f - c) / 3.0;
}

double StokesIntegrator::drift_numerator(const ReebGraph& graph, int k, double g) const {
  const auto& e = graph.edge(k);
  return -flux(g, graph.vertex(e.lower).x);
}

double drift_coefficient_stokes(const SurfaceSystem& sys, const ReebGraph& graph, int k, double g,
                                const StokesIntegrator& stokes) {
  const auto f = edge_functionals(sys, graph, k, g);
  return stokes.drift_numerator(graph, k, g) / f.T;
}

namespace {

int join_saddle(const ReebGraph& graph) {
  for (int v : graph.saddles())
    if (graph.lower_edges(v).size() == 2 && graph.upper_edges(v).size() == 1) return v;
  throw Error(ErrorKind::Config, "graph has no saddle joining two lower edges");
}

double limit_of(const std::vector<double>& d, const std::vector<double>& f, double tol, const std::string& what) {
  const double lim = log_corrected_limit(d, f);
  const double last = f.back();
  if (!std::isfinite(lim) || std::abs(lim - last) > tol * std::max(std::abs(lim), 1e-12))
    throw Error(ErrorKind::ExtrapolationDivergence,
                what + ": limit " + std::to_string(lim) + " vs last sample " + std::to_string(last));
  return lim;
}

SaddleData saddle_limits(const SurfaceSystem& sys, const ReebGraph& graph, const SaddleOptions& opts) {
  SaddleData sd;
  sd.saddle = join_saddle(graph);
  sd.g_saddle = graph.vertex(sd.saddle).g;
  sd.lower_edges = graph.lower_edges(sd.saddle);
  sd.upper_edge = graph.upper_edges(sd.saddle)[0];
  std::vector<int> all = sd.lower_edges;
  all.push_back(sd.upper_edge);
  for (int k : all) {
    const double sign = (k == sd.upper_edge) ? 1.0 : -1.0;
    std::vector<double> A, B;
    for (double d : opts.offsets) {
      const auto f = edge_functionals(sys, graph, k, sd.g_saddle + sign * d);
      A.push_back(f.A);
      B.push_back(f.B);
    }
    sd.drift_limit[k] = limit_of(opts.offsets, A, opts.stability_tolerance, "drift limit on edge " + std::to_string(k));
    if (sys.noise) sd.beta[k] = limit_of(opts.offsets, B, opts.stability_tolerance, "beta on edge " + std::to_string(k));
  }
  if (sys.noise) {
    double low = 0.0, total = 0.0;
    for (int k : sd.lower_edges) low += sd.beta[k];
    sd.additivity_error = std::abs(sd.beta[sd.upper_edge] - low) / sd.beta[sd.upper_edge];
    total = low + sd.beta[sd.upper_edge];
    for (int k : all) sd.q[k] = sd.beta[k] / total;
  }
  double low = 0.0;
  for (int k : sd.lower_edges) low += sd.drift_limit[k];
  sd.drift_additivity_error = std::abs(sd.drift_limit[sd.upper_edge] - low) / std::abs(sd.drift_limit[sd.upper_edge]);
  return sd;
}

}  // namespace

SaddleData gluing_weights(const SurfaceSystem& sys, const ReebGraph& graph, const SaddleOptions& opts) {
  if (!sys.noise) throw Error(ErrorKind::Config, "gluing weights need a noise map");
  return saddle_limits(sys, graph, opts);
}

SaddleData branching_probabilities(const SurfaceSystem& sys, const ReebGraph& graph, const SaddleOptions& opts) {
  SaddleData sd = saddle_limits(sys, graph, opts);
  double sum = 0.0;
  for (int k : sd.lower_edges) {
    sd.flux_line[k] = -sd.drift_limit[k];
    if (!(sd.flux_line[k] > 0.0))
      throw Error(ErrorKind::SignViolation, "flux into edge " + std::to_string(k) + " is " +
                                                std::to_string(sd.flux_line[k]) + "; perturbation is not friction-like");
    sum += sd.flux_line[k];
  }
  for (int k : sd.lower_edges) sd.p[k] = sd.flux_line[k] / sum;

  const StokesIntegrator stokes(sys, opts.stokes_subdivisions);
  double ssum = 0.0;
  for (int k : sd.lower_edges) {
    sd.flux_surface[k] = stokes.flux(sd.g_saddle - opts.stokes_offset, graph.vertex(graph.edge(k).lower).x);
    if (!(sd.flux_surface[k] > 0.0))
      throw Error(ErrorKind::SignViolation, "surface flux over the well of edge " + std::to_string(k) + " is not positive");
    ssum += sd.flux_surface[k];
  }
  for (int k : sd.lower_edges) {
    sd.p_surface[k] = sd.flux_surface[k] / ssum;
    sd.route_discrepancy = std::max(sd.route_discrepancy, std::abs(sd.p[k] - sd.p_surface[k]) / sd.p[k]);
  }
  const double f0 = sd.flux_line[sd.lower_edges[0]], f1 = sd.flux_line[sd.lower_edges[1]];
  sd.symmetric = std::abs(f0 - f1) < 1e-6 * (f0 + f1);
  return sd;
}

// ---------------------------------------------------------------------------

double EdgeTable::drift_at(double g) const { return drift(std::clamp(g, g_lo, g_hi)); }
double EdgeTable::noise_drift_at(double g) const { return noise_drift(std::clamp(g, g_lo, g_hi)); }
double EdgeTable::diffusion_at(double g) const { return std::max(0.0, diffusion(std::clamp(g, g_lo, g_hi))); }

const EdgeTable& CoefficientTable::at(int k) const {
  auto it = edges.find(k);
  if (it == edges.end()) throw Error(ErrorKind::EdgeRange, "no coefficient table for edge " + std::to_string(k));
  return it->second;
}

namespace {

bool is_extremum(VertexType t) { return t == VertexType::Minimum || t == VertexType::Maximum; }

LineFunctionals tip_row(const SurfaceSystem& sys, const CriticalPoint& cp) {
  const Eigen::Vector2d ev = tangential_hessian_eigenvalues(sys.F, sys.G, cp.x, cp.mu);
  const double omega = sys.F.gradient(cp.x).norm() * std::sqrt(std::abs(ev[0] * ev[1]));
  LineFunctionals f;
  f.g = cp.g;
  f.T = 2.0 * M_PI / omega;
  const Integrands i = integrands(sys, cp.x);
  f.A = f.T * i.A;
  f.A1 = f.T * i.A1;
  f.A2 = f.T * i.A2;
  f.B = f.T * i.B;
  return f;
}

nlohmann::json rows_to_json(const std::vector<LineFunctionals>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) j.push_back({r.g, r.T, r.A, r.A1, r.A2, r.B});
  return j;
}

std::vector<LineFunctionals> rows_from_json(const nlohmann::json& j) {
  std::vector<LineFunctionals> rows;
  for (const auto& r : j)
    rows.push_back({r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>(),
                    r[4].get<double>(), r[5].get<double>()});
  return rows;
}

EdgeTable build_edge_table(const SurfaceSystem& sys, const ReebGraph& graph, int k, const TableOptions& opts) {
  const auto& e = graph.edge(k);
  EdgeTable t;
  t.edge = k;
  t.g_lo = e.g_lo;
  t.g_hi = e.g_hi;
  t.lower_type = graph.vertex(e.lower).type;
  t.upper_type = graph.vertex(e.upper).type;
  const double range = e.g_hi - e.g_lo;
  std::set<double> nodes;
  const int n = opts.chebyshev_nodes;
  for (int j = 1; j < n; ++j) nodes.insert(e.g_lo + range * 0.5 * (1.0 - std::cos(M_PI * j / n)));
  auto add_end = [&](VertexType type, double g_end, double dir) {
    if (type == VertexType::Saddle)
      for (double f : opts.saddle_offsets) nodes.insert(g_end + dir * f * range);
    else if (is_extremum(type))
      for (double f : opts.tip_offsets) nodes.insert(g_end + dir * f * range);
    else
      nodes.insert(g_end);
  };
  add_end(t.lower_type, e.g_lo, 1.0);
  add_end(t.upper_type, e.g_hi, -1.0);
  std::vector<double> grid(nodes.begin(), nodes.end());

  std::string key;
  {
    std::ostringstream os;
    os.precision(17);
    os << sys.fingerprint << "|edge=" << k << "|lo=" << e.g_lo << "|hi=" << e.g_hi << "|trace=" << opts.trace.dt_max
       << "," << opts.trace.ds_max << "," << opts.trace.min_samples << "|grid=";
    for (double g : grid) os << g << ",";
    key = os.str();
  }
  std::vector<LineFunctionals> rows;
  std::filesystem::path cache_file;
  if (!opts.cache_dir.empty()) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(key)));
    cache_file = std::filesystem::path(opts.cache_dir) / (std::string(hex) + ".json");
    std::ifstream in(cache_file);
    if (in) {
      try {
        auto j = nlohmann::json::parse(in);
        if (j.at("key").get<std::string>() == key) rows = rows_from_json(j.at("rows"));
      } catch (const std::exception&) {
        rows.clear();
      }
    }
  }
  if (rows.empty()) {
    rows.resize(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) { rows[i] = edge_functionals(sys, graph, k, grid[i], opts.trace); },
                 opts.threads);
    if (!cache_file.empty()) {
      std::filesystem::create_directories(cache_file.parent_path());
      std::ofstream out(cache_file);
      out << nlohmann::json{{"key", key}, {"rows", rows_to_json(rows)}}.dump();
    }
  }
  t.rows = rows;

  std::vector<double> g, drift, noise, diff, gT, T;
  auto push = [&](double gv, double d, double nd, double df) {
    g.push_back(gv);
    drift.push_back(d);
    noise.push_back(nd);
    diff.push_back(df);
  };
  auto end_row = [&](VertexType type, double g_end, const Vec3& x) {
    if (is_extremum(type)) {
      const CriticalPoint* cp = nullptr;
      for (const auto& c : graph.critical_points)
        if ((c.x - x).norm() < 1e-9) cp = &c;
      const auto r = tip_row(sys, *cp);
      push(g_end, r.A / r.T, (r.A1 + r.A2) / r.T, r.B / r.T);
      gT.push_back(g_end);
      T.push_back(r.T);
    } else if (type == VertexType::Saddle) {
      push(g_end, 0.0, 0.0, 0.0);
    }
  };
  end_row(t.lower_type, e.g_lo, graph.vertex(e.lower).x);
  for (const auto& r : rows) {
    push(r.g, r.A / r.T, (r.A1 + r.A2) / r.T, r.B / r.T);
    gT.push_back(r.g);
    T.push_back(r.T);
  }
  end_row(t.upper_type, e.g_hi, graph.vertex(e.upper).x);
  t.drift = Pchip(g, drift);
  t.noise_drift = Pchip(g, noise);
  t.diffusion = Pchip(g, diff);
  t.period = Pchip(gT, T);
  if (is_extremum(t.lower_type)) t.tip_slope = (drift[1] - drift[0]) / (g[1] - g[0]);
  return t;
}

}  // namespace

CoefficientTable tabulate(const SurfaceSystem& sys, const ReebGraph& graph, const TableOptions& opts) {
  CoefficientTable table;
  table.has_noise = sys.noise.has_value();
  for (const auto& e : graph.edges) table.edges[e.id] = build_edge_table(sys, graph, e.id, opts);
  return table;
}

CoefficientTable scale_drift(const CoefficientTable& table, double c) {
  CoefficientTable out = table;
  for (auto& [k, t] : out.edges) {
    std::vector<double> y = t.drift.y();
    for (auto& v : y) v *= c;
    t.drift = Pchip(t.drift.x(), y);
    for (auto& r : t.rows) r.A *= c;
    t.tip_slope *= c;
  }
  return out;
}

// ---------------------------------------------------------------------------

SlowPath solve_slow_ode(const CoefficientTable& table, const ReebGraph& graph, GraphCoordinate start, double t_end,
                        int well_choice, const SlowOdeOptions& opts) {
  SlowPath path;
  int k = start.edge;
  double g = start.g, t = 0.0;
  std::size_t count = 0;
  auto record = [&](bool force) {
    if (force || opts.record_every == 0 || count % std::max<std::size_t>(1, opts.record_every) == 0) {
      path.t.push_back(t);
      path.g.push_back(g);
      path.edge.push_back(k);
    }
  };
  record(true);
  const EdgeTable* et = &table.at(k);
  auto f = [&](double x) { return et->drift_at(x); };
  while (t < t_end - 1e-15) {
    const double dt = std::min(opts.dt, t_end - t);
    const double k1 = f(g), k2 = f(g + 0.5 * dt * k1), k3 = f(g + 0.5 * dt * k2), k4 = f(g + dt * k3);
    double gn = g + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    const auto& e = graph.edge(k);
    const VertexType lower = graph.vertex(e.lower).type;
    const VertexType upper = graph.vertex(e.upper).type;
    if (std::abs(k1) < 1e-14 && g - e.g_lo > opts.vertex_offset && e.g_hi - g > opts.vertex_offset &&
        lower != VertexType::Minimum)
      throw Error(ErrorKind::Stall, "slow drift vanished at g=" + std::to_string(g) + " on edge " + std::to_string(k));
    if (lower == VertexType::Saddle && gn <= e.g_lo + opts.vertex_offset) {
      const double frac = (g - (e.g_lo + opts.vertex_offset)) / (g - gn);
      t += frac * dt;
      g = e.g_lo;
      record(true);
      path.tau0 = path.tau0 < 0 ? t : path.tau0;
      const auto lows = graph.lower_edges(e.lower);
      if (std::find(lows.begin(), lows.end(), well_choice) == lows.end())
        throw Error(ErrorKind::EdgeRange, "edge " + std::to_string(well_choice) + " is not below the saddle");
      k = well_choice;
      path.well = well_choice;
      et = &table.at(k);
      g = graph.edge(k).g_hi - opts.vertex_offset;
      ++count;
      record(true);
      continue;
    }
    if (upper == VertexType::Boundary && gn >= e.g_hi) {
      t += dt;
      g = e.g_hi;
      record(true);
      break;
    }
    if (is_extremum(lower)) gn = std::max(gn, e.g_lo);
    t += dt;
    g = gn;
    ++count;
    record(t >= t_end - 1e-15);
  }
  return path;
}

SlowPath solve_slow_ode(const SurfaceSystem& sys, const ReebGraph& graph, GraphCoordinate start, double t_end,
                        int well_choice, const SlowOdeOptions& opts) {
  return solve_slow_ode(tabulate(sys, graph), graph, start, t_end, well_choice, opts);
}

// ---------------------------------------------------------------------------

double lambda_integral(const SurfaceSystem& sys, const ReebGraph& graph, int k, const ThresholdOptions& opts) {
  const auto& e = graph.edge(k);
  const double range = e.g_hi - e.g_lo;
  auto ratio = [&](double g) {
    const auto f = edge_functionals(sys, graph, k, g);
    return f.A / f.B;
  };
  // tip panel: linear fit
  const double f_tip = opts.tip_fit_fraction;
  const double r1 = ratio(e.g_lo + f_tip * range), r2 = ratio(e.g_lo + 2 * f_tip * range);
  const double p = std::log(std::abs(r2 / r1)) / std::log(2.0);
  if (!std::isfinite(p) || p < -0.9)
    throw Error(ErrorKind::DivergentIntegral,
                "A/B near the minimum behaves like (g-g_min)^" + std::to_string(p) + " on edge " + std::to_string(k));
  const double slope = (r2 - r1) / (f_tip * range);
  const double r0 = r1 - slope * f_tip * range;
  double integral = f_tip * range * (r0 + r1) / 2.0;

  const double f_sad = opts.saddle_cut_fraction;
  const int m = std::max(1, opts.panels / 2);
  std::vector<double> breaks;
  for (int i = 0; i <= m; ++i) breaks.push_back(f_tip * std::pow(0.5 / f_tip, static_cast<double>(i) / m));
  for (int i = m - 1; i >= 0; --i) breaks.push_back(1.0 - f_sad * std::pow(0.5 / f_sad, static_cast<double>(i) / m));
  const auto [xg, wg] = gauss_legendre(opts.gauss_points);
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = e.g_lo + breaks[i] * range, b = e.g_lo + breaks[i + 1] * range;
    for (std::size_t j = 0; j < xg.size(); ++j) integral += 0.5 * (b - a) * wg[j] * ratio(0.5 * (a + b) + 0.5 * (b - a) * xg[j]);
  }
  integral += f_sad * range * ratio(e.g_hi - f_sad * range);
  return -integral;
}

MetastableOutcome MetastableReport::decide(int start_edge, double lambda) const {
  MetastableOutcome o;
  const double ls = this->lambda.at(shallow_edge), ld = this->lambda.at(deep_edge);
  if (lambda > ld) {
    o.distribution = {{deep_edge, 1.0}, {shallow_edge, 0.0}};
    o.rule = "lambda above the deep threshold: deep minimum";
  } else if (start_edge == deep_edge) {
    o.distribution = {{deep_edge, 1.0}, {shallow_edge, 0.0}};
    o.rule = "start in the deep well: deep minimum";
  } else if (start_edge == shallow_edge) {
    if (lambda < ls) {
      o.distribution = {{deep_edge, 0.0}, {shallow_edge, 1.0}};
      o.rule = "start in the shallow well below its threshold: shallow minimum";
    } else {
      o.distribution = {{deep_edge, 1.0}, {shallow_edge, 0.0}};
      o.rule = "start in the shallow well above its threshold: deep minimum";
    }
  } else {
    if (lambda < ls) {
      o.distribution = {{deep_edge, p.at(deep_edge)}, {shallow_edge, p.at(shallow_edge)}};
      o.rule = "start above the saddle below the shallow threshold: branching mixture";
    } else {
      o.distribution = {{deep_edge, 1.0}, {shallow_edge, 0.0}};
      o.rule = "start above the saddle above the shallow threshold: deep minimum";
    }
  }
  return o;
}

MetastableReport metastable_thresholds(const SurfaceSystem& sys, const ReebGraph& graph, const SaddleData& saddle,
                                       const ThresholdOptions& opts) {
  if (!sys.noise) throw Error(ErrorKind::Config, "thresholds need a noise map");
  MetastableReport r;
  ThresholdOptions fine = opts;
  fine.panels *= 2;
  for (int k : saddle.lower_edges) {
    r.lambda[k] = lambda_integral(sys, graph, k, opts);
    r.lambda_refined[k] = lambda_integral(sys, graph, k, fine);
    r.relative_change[k] = std::abs(r.lambda_refined[k] - r.lambda[k]) / std::abs(r.lambda_refined[k]);
  }
  const int a = saddle.lower_edges[0], b = saddle.lower_edges[1];
  r.shallow_edge = r.lambda[a] <= r.lambda[b] ? a : b;
  r.deep_edge = r.shallow_edge == a ? b : a;
  r.upper_edge = saddle.upper_edge;
  r.tie = std::abs(r.lambda[a] - r.lambda[b]) < 1e-3 * std::max(r.lambda[a], r.lambda[b]);
  r.p = saddle.p;
  const std::string s = std::to_string(r.shallow_edge), d = std::to_string(r.deep_edge),
                    u = std::to_string(r.upper_edge);
  r.printed_cases = {"edge " + s + " and lambda < lambda_" + s + ": minimum of edge " + s,
                     "edge " + u + " and lambda > 0, or any start and lambda > lambda_" + d + ": minimum of edge " + d,
                     "edge " + d + " and lambda < lambda_" + s + ": mixture (p_" + s + ", p_" + d + ")"};
  return r;
}

}  // namespace slowfast
