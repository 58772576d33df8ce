#include "slowfast/torus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "slowfast/errors.hpp"
#include "slowfast/stats.hpp"

namespace slowfast {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap(double a) { return std::remainder(a, 2.0 * kPi); }

Vec3 grad_phi(const Vec3& x) {
  const double r2 = x[0] * x[0] + x[1] * x[1];
  return Vec3(-x[1] / r2, x[0] / r2, 0.0);
}

Vec3 grad_psi(double R, const Vec3& x) {
  const double rho = std::hypot(x[0], x[1]);
  const double u = rho - R;
  const double q = u * u + x[2] * x[2];
  const Vec3 grad_rho(x[0] / rho, x[1] / rho, 0.0);
  return (u * Vec3(0.0, 0.0, 1.0) - x[2] * grad_rho) / q;
}

}  // namespace

Vec3 TorusSystem::d(const Vec3& x) const {
  return G.gradient(x) + alpha_phi * grad_phi(x) + alpha_psi * grad_psi(R, x);
}

Vec3 TorusSystem::fast(const Vec3& x) const { return F.gradient(x).cross(d(x)); }

Vec3 TorusSystem::perturbation_velocity(const Vec3& x) const { return F.gradient(x).cross(p(x)); }

Vec3 TorusSystem::curl_d(const Vec3& x) const {
  return curl(VectorField::explicit_field([this](const Vec3& y) { return d(y); }), x);
}

TorusSystem canonical_torus_system(double perturbation_scale) {
  TorusSystem t;
  t.name = "canonical-torus";
  t.R = 1.0;
  t.z = 0.25;
  t.F = SmoothField::torus_radial(t.R);
  const double r = std::sqrt(t.z);
  auto at = [&](double phi, double psi) {
    return Vec3((t.R + r * std::cos(psi)) * std::cos(phi), (t.R + r * std::cos(psi)) * std::sin(phi), r * std::sin(psi));
  };
  // two dips of unequal depth on the top of the tube
  t.G = SmoothField::gaussian_bumps({{-1.5, at(0.0, kPi / 2), 0.45}, {-1.0, at(kPi, kPi / 2), 0.45}});
  const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
  t.alpha_phi = 0.2;
  t.alpha_psi = 0.2 * golden;
  const SmoothField F = t.F, G = t.G;
  const double c = perturbation_scale;
  // grad F x p = -c |grad F|^2 (tangential grad G): friction towards the dips
  t.p = VectorField::explicit_field([F, G, c](const Vec3& x) { return (c * F.gradient(x).cross(G.gradient(x))).eval(); });
  t.noise = NoiseMap::tangent_projection(t.F);
  t.x0 = at(kPi / 2, -kPi / 2);
  t.epsilon = 1e-3;
  t.delta = 0.1;
  t.wells = {WellSeed{"deep", 0.0, kPi / 2, 0.0, 0.0}, WellSeed{"shallow", kPi, kPi / 2, 0.0, 0.0}};
  t.fingerprint = "canonical-torus|scale=" + std::to_string(perturbation_scale);
  return t;
}

TorusSystem torus_from_json(const Json& j) {
  const std::string preset = j.value("preset", "canonical-torus");
  if (preset != "canonical-torus") throw Error(ErrorKind::Config, "unknown torus preset '" + preset + "'");
  TorusSystem t = canonical_torus_system(j.value("perturbation_scale", 1.0));
  if (j.contains("name")) t.name = j["name"].get<std::string>();
  if (j.contains("parameters")) {
    const auto& p = j["parameters"];
    t.epsilon = p.value("epsilon", t.epsilon);
    t.delta = p.value("delta", t.delta);
    if (p.contains("x0_angles")) t.x0 = torus_point(t, p["x0_angles"][0].get<double>(), p["x0_angles"][1].get<double>());
  }
  t.fingerprint = j.dump();
  return t;
}

Eigen::Vector2d torus_angles(double R, const Vec3& x) {
  const double rho = std::hypot(x[0], x[1]);
  return {std::atan2(x[1], x[0]), std::atan2(x[2], rho - R)};
}

Vec3 torus_point(const TorusSystem& t, double phi, double psi) {
  const Vec3 c(t.R * std::cos(phi), t.R * std::sin(phi), 0.0);
  const Vec3 u(std::cos(psi) * std::cos(phi), std::cos(psi) * std::sin(phi), std::sin(psi));
  double s = std::sqrt(std::max(t.z, 1e-6));
  for (int it = 0; it < 60; ++it) {
    const Vec3 x = c + s * u;
    const double f = t.F.value(x) - t.z;
    const double df = t.F.gradient(x).dot(u);
    if (df == 0.0) break;
    const double ds = f / df;
    s -= ds;
    if (std::abs(ds) < 1e-15) break;
  }
  const Vec3 x = c + s * u;
  if (std::abs(t.F.value(x) - t.z) > 1e-10)
    throw Error(ErrorKind::ProjectionFailure, "no surface point on the ray at the given angles");
  return x;
}

double torus_area_element(const TorusSystem& t, double phi, double psi) {
  const double e = 1e-5;
  const Vec3 xp = (torus_point(t, phi + e, psi) - torus_point(t, phi - e, psi)) / (2 * e);
  const Vec3 xq = (torus_point(t, phi, psi + e) - torus_point(t, phi, psi - e)) / (2 * e);
  return xp.cross(xq).norm();
}

bool Well::contains(double R, const Vec3& x) const {
  const double hv = h(x);
  if (maximum ? hv <= 0.0 : hv >= 0.0) return false;
  const Eigen::Vector2d a = torus_angles(R, x);
  const double px = wrap(a[0] - center_angles[0]), py = wrap(a[1] - center_angles[1]);
  bool inside = false;
  const std::size_t n = boundary.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& bi = boundary[i];
    const auto& bj = boundary[j];
    if ((bi[1] > py) != (bj[1] > py) && px < (bj[0] - bi[0]) * (py - bi[1]) / (bj[1] - bi[1]) + bi[0]) inside = !inside;
  }
  return inside;
}

double Well::depth(double R, const Vec3& x) const {
  if (!contains(R, x)) return 0.0;
  return std::abs(h(x)) / std::abs(h_extremum);
}

namespace {

OrbitProblem orbit_problem(const TorusSystem& t, const Well& w) {
  return {t.F, t.z, w.H, [&t](const Vec3& x) { return t.fast(x); }};
}

LevelCurve well_curve(const TorusSystem& t, const Well& w, double hv, const TraceOptions& opts) {
  const double level = w.H_saddle + hv;
  const Vec3 seed = flow_to_level(t.F, t.z, w.H, w.reference, level);
  return trace_orbit(orbit_problem(t, w), level, seed, opts);
}

}  // namespace

std::vector<Well> prepare_wells(const TorusSystem& t) {
  std::vector<Well> wells;
  int id = 1;
  for (const auto& seed : t.wells) {
    Well w;
    w.name = seed.name;
    w.id = id++;
    w.H = SmoothField::linear_combination({{1.0, t.G},
                                           {t.alpha_phi, SmoothField::azimuth(seed.phi_extremum)},
                                           {t.alpha_psi, SmoothField::poloidal(t.R, seed.psi_extremum)}});
    const auto m = refine_critical_point(t.F, t.z, w.H, torus_point(t, seed.phi_extremum, seed.psi_extremum));
    if (!m || m->kind == CriticalKind::Saddle)
      throw Error(ErrorKind::DegenerateCriticalPoint, "no extremum of the local potential near well " + seed.name);
    w.extremum = m->x;
    w.maximum = m->kind == CriticalKind::Maximum;
    w.center_angles = torus_angles(t.R, w.extremum);

    // the saddle: configured angles, or searched along rays around the extremum
    std::optional<CriticalPoint> s;
    if (seed.phi_saddle != 0.0 || seed.psi_saddle != 0.0)
      s = refine_critical_point(t.F, t.z, w.H, torus_point(t, seed.phi_saddle, seed.psi_saddle));
    if (!s || s->kind != CriticalKind::Saddle) {
      s.reset();
      for (int ring = 1; ring <= 12 && !s; ++ring)
        for (int j = 0; j < 24 && !s; ++j) {
          const double ang = 2 * kPi * j / 24, rad = 0.08 * ring;
          auto c = refine_critical_point(t.F, t.z, w.H,
                                         torus_point(t, w.center_angles[0] + rad * std::cos(ang),
                                                     w.center_angles[1] + rad * std::sin(ang)));
          if (c && c->kind == CriticalKind::Saddle) s = c;
        }
    }
    if (!s) throw Error(ErrorKind::DegenerateCriticalPoint, "no saddle found bounding well " + seed.name);
    w.saddle = s->x;
    w.H_saddle = w.H.value(w.saddle);
    w.h_extremum = w.H.value(w.extremum) - w.H_saddle;
    if (w.maximum != (w.h_extremum > 0.0))
      throw Error(ErrorKind::DegenerateCriticalPoint, "well " + seed.name + ": extremum and saddle levels inconsistent");

    // interior reference point at half depth, reached from a point between M and A
    const Eigen::Vector2d sa = torus_angles(t.R, w.saddle);
    const Vec3 between = torus_point(t, w.center_angles[0] + 0.3 * wrap(sa[0] - w.center_angles[0]),
                                     w.center_angles[1] + 0.3 * wrap(sa[1] - w.center_angles[1]));
    w.reference = flow_to_level(t.F, t.z, w.H, between, w.H_saddle + 0.5 * w.h_extremum);

    TraceOptions to;
    to.min_samples = 2048;
    const LevelCurve sep = well_curve(t, w, 1e-7 * w.h_extremum, to);
    const std::size_t stride = std::max<std::size_t>(1, sep.samples.size() / 4000);
    for (std::size_t i = 0; i < sep.samples.size(); i += stride) {
      const Eigen::Vector2d a = torus_angles(t.R, sep.samples[i]);
      w.boundary.push_back({wrap(a[0] - w.center_angles[0]), wrap(a[1] - w.center_angles[1])});
    }
    wells.push_back(std::move(w));
  }
  return wells;
}

int capture_indicator(double psi_bar, bool maximum) {
  return ((psi_bar > 0.0 && maximum) || (psi_bar < 0.0 && !maximum)) ? 1 : 0;
}

double TorusEdge::drift_at(double hv) const {
  const double lo = std::min(h_extremum, 0.0), hi = std::max(h_extremum, 0.0);
  return drift(std::clamp(hv, lo, hi));
}

double RootedGraph::total_rate() const {
  double s = 0.0;
  for (const auto& e : edges) s += e.r;
  return s;
}

const TorusEdge& RootedGraph::edge(int k) const {
  for (const auto& e : edges)
    if (e.k == k) return e;
  throw Error(ErrorKind::EdgeRange, "no torus edge " + std::to_string(k));
}

namespace {

struct WellFunctionals {
  double T, a, a1, a2, b;
};

WellFunctionals well_functionals(const TorusSystem& t, const Well& w, const LevelCurve& c) {
  WellFunctionals f{c.period, 0, 0, 0, 0};
  for (const auto& x : c.samples) {
    const Vec3 gH = w.H.gradient(x);
    f.a += gH.dot(t.perturbation_velocity(x));
    if (t.noise) {
      const Mat3 s = t.noise->sigma(x);
      f.a1 += gH.dot(t.noise->ito_correction(x));
      f.a2 += ((s * s.transpose()).cwiseProduct(w.H.hessian(x))).sum();
      f.b += (s.transpose() * gH).squaredNorm();
    }
  }
  f.a *= c.dt;
  f.a1 *= c.dt;
  f.a2 *= c.dt;
  f.b *= c.dt;
  return f;
}

double surface_measure(const TorusSystem& t, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double phi = -kPi + 2 * kPi * (i + 0.5) / n, psi = -kPi + 2 * kPi * (j + 0.5) / n;
      s += torus_area_element(t, phi, psi) / t.F.gradient(torus_point(t, phi, psi)).norm();
    }
  return s * (2 * kPi / n) * (2 * kPi / n);
}

// ∫ T(h) dh over the well, geometric panels towards the separatrix (T ~ log there)
double well_measure(const TorusSystem& t, const Well& w, int panels, const TraceOptions& to) {
  const auto [xg, wg] = gauss_legendre(5);
  const double H = std::abs(w.h_extremum);
  const double sign = w.h_extremum > 0 ? 1.0 : -1.0;
  const double f0 = 1e-7;
  std::vector<double> br = {0.0, f0};
  for (int i = 1; i <= panels; ++i) br.push_back(f0 * std::pow(1.0 / f0, static_cast<double>(i) / panels));
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    const double a = br[i] * H, b = br[i + 1] * H;
    for (std::size_t j = 0; j < xg.size(); ++j) {
      const double dist = 0.5 * (a + b) + 0.5 * (b - a) * xg[j];  // distance from the separatrix level
      double T;
      if (dist > 0.999999 * H) {
        T = well_curve(t, w, sign * 0.999999 * H, to).period;
      } else {
        T = well_curve(t, w, sign * dist, to).period;
      }
      s += 0.5 * (b - a) * wg[j] * T;
    }
  }
  return s;
}

}  // namespace

RootedGraph torus_rates(const TorusSystem& t, const std::vector<Well>& wells, const TorusRateOptions& opts) {
  RootedGraph g;
  g.lambda_M = surface_measure(t, opts.angle_mesh);
  g.lambda_M_refined = surface_measure(t, 2 * opts.angle_mesh);
  double wells_coarse = 0.0, wells_fine = 0.0;
  for (const auto& w : wells) {
    TorusEdge e;
    e.k = w.id;
    e.name = w.name;
    e.maximum = w.maximum;
    e.h_extremum = w.h_extremum;
    const double H = std::abs(w.h_extremum), sign = w.h_extremum > 0 ? 1.0 : -1.0;

    std::vector<double> d, av, bv;
    for (double f : opts.separatrix_offsets) {
      const auto fn = well_functionals(t, w, well_curve(t, w, sign * f * H, opts.trace));
      d.push_back(f * H);
      av.push_back(fn.a);
      bv.push_back(fn.b);
    }
    e.psi_bar = 2.0 * log_corrected_limit(d, av);
    if (std::abs(e.psi_bar) < opts.vanishing_tolerance)
      throw Error(ErrorKind::VanishingPsi, "well " + w.name + ": separatrix flux " + std::to_string(e.psi_bar));
    e.beta_line = t.noise ? log_corrected_limit(d, bv) : 0.0;
    e.s = capture_indicator(e.psi_bar, e.maximum);

    // table from the extremum (fraction 1) to the separatrix (fraction 0)
    std::vector<double> fr;
    const int n = opts.table_nodes;
    for (int j = 1; j < n; ++j) fr.push_back(0.5 * (1.0 - std::cos(kPi * j / n)));
    for (double f : {1e-5, 1e-4, 1e-3, 0.999, 0.99}) fr.push_back(f);
    std::sort(fr.begin(), fr.end());
    std::vector<double> hs, drift, hT, T;
    // separatrix end: drift vanishes with the diverging period
    for (double f : fr) {
      const double hv = sign * f * H;
      const auto fn = well_functionals(t, w, well_curve(t, w, hv, opts.trace));
      e.h.push_back(hv);
      e.T.push_back(fn.T);
      e.a.push_back(fn.a);
      e.a1.push_back(fn.a1);
      e.a2.push_back(fn.a2);
      e.b.push_back(fn.b);
    }
    // extremum tip from the linearisation
    const Vec3 nF = t.F.gradient(w.extremum);
    const double mu = w.H.gradient(w.extremum).dot(nF) / nF.squaredNorm();
    const Eigen::Vector2d ev = tangential_hessian_eigenvalues(t.F, w.H, w.extremum, mu);
    const double T_tip = 2 * kPi / (nF.norm() * std::sqrt(std::abs(ev[0] * ev[1])));

    std::vector<std::pair<double, double>> dpts = {{0.0, 0.0}, {w.h_extremum, 0.0}};
    for (std::size_t i = 0; i < e.h.size(); ++i) dpts.push_back({e.h[i], e.a[i] / e.T[i]});
    std::vector<std::pair<double, double>> tpts = {{w.h_extremum, T_tip}};
    for (std::size_t i = 0; i < e.h.size(); ++i) tpts.push_back({e.h[i], e.T[i]});
    std::sort(dpts.begin(), dpts.end());
    std::sort(tpts.begin(), tpts.end());
    for (auto& [x, y] : dpts) hs.push_back(x), drift.push_back(y);
    for (auto& [x, y] : tpts) hT.push_back(x), T.push_back(y);
    e.drift = Pchip(hs, drift);
    e.period = Pchip(hT, T);

    e.well_measure = well_measure(t, w, 10, opts.trace);
    wells_coarse += e.well_measure;
    wells_fine += well_measure(t, w, 20, opts.trace);
    g.edges.push_back(std::move(e));
  }
  g.lambda_E = g.lambda_M_refined - wells_fine;
  const double coarse = g.lambda_M - wells_coarse;
  g.relative_change = std::abs(g.lambda_E - coarse) / g.lambda_E;
  for (auto& e : g.edges) {
    e.r = e.s * std::abs(e.psi_bar) / (2.0 * g.lambda_E);
    e.beta = e.beta_line / g.lambda_E;
  }
  return g;
}

InvariantCheck invariant_measure_check(const TorusSystem& t, const std::vector<Well>& wells, double t_end,
                                       const InvariantCheckOptions& opts) {
  InvariantCheck res;
  const int nb = opts.bins;
  Vec3 x = project_to_level(t.F, t.z, opts.start.value_or(t.x0));
  for (const auto& w : wells)
    if (w.contains(t.R, x)) throw Error(ErrorKind::TrappedInWell, "start point lies in well " + w.name);

  Dynamics dyn;
  dyn.F = t.F;
  dyn.z = t.z;
  if (opts.rescaled)
    dyn.fast = [&t](const Vec3& y) {
      const Vec3 n = t.F.gradient(y);
      return (n / n.norm()).cross(t.d(y)).eval();
    };
  else
    dyn.fast = [&t](const Vec3& y) { return t.fast(y); };
  dyn.slow = [](const Vec3&) { return Vec3::Zero().eval(); };
  dyn.epsilon = 1.0;

  std::vector<double> counts(nb * nb, 0.0);
  auto bin_of = [&](const Vec3& y) {
    const Eigen::Vector2d a = torus_angles(t.R, y);
    const int i = std::clamp(static_cast<int>((a[0] + kPi) / (2 * kPi) * nb), 0, nb - 1);
    const int j = std::clamp(static_cast<int>((a[1] + kPi) / (2 * kPi) * nb), 0, nb - 1);
    return i * nb + j;
  };
  const int per_sample = std::max(1, static_cast<int>(std::lround(opts.sample_dt / opts.h)));
  const std::size_t total = static_cast<std::size_t>(t_end / opts.sample_dt);
  for (std::size_t s = 0; s < total; ++s) {
    for (int k = 0; k < per_sample; ++k) x = step(dyn, x, opts.h, Method::Rk4Projected, nullptr, 1e-12, 50);
    counts[bin_of(x)] += 1.0;
    res.max_F_error = std::max(res.max_F_error, std::abs(t.F.value(x) - t.z));
  }
  for (const auto& w : wells)
    if (w.contains(t.R, x)) throw Error(ErrorKind::TrappedInWell, "trajectory ended inside well " + w.name);
  res.samples = total;

  std::vector<double> mass(nb * nb, 0.0);
  const int m = opts.subsamples;
  double msum = 0.0;
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j)
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          const double phi = -kPi + 2 * kPi * (i + (a + 0.5) / m) / nb;
          const double psi = -kPi + 2 * kPi * (j + (b + 0.5) / m) / nb;
          const Vec3 y = torus_point(t, phi, psi);
          bool in_well = false;
          for (const auto& w : wells) in_well = in_well || w.contains(t.R, y);
          if (in_well) continue;
          double wgt = torus_area_element(t, phi, psi);
          if (!opts.rescaled) wgt /= t.F.gradient(y).norm();
          mass[i * nb + j] += wgt;
          msum += wgt;
        }
  std::vector<double> expected(nb * nb);
  for (int c = 0; c < nb * nb; ++c) expected[c] = mass[c] / msum * static_cast<double>(total);
  const ChiSquare cs = chi_square_gof(counts, expected);
  res.chi2 = cs.statistic;
  res.dof = cs.dof;
  res.p_value = cs.p_value;
  res.observed = counts;
  res.expected = expected;
  return res;
}

GraphPath simulate_torus_limit(const RootedGraph& graph, GraphCoordinate start, double t_end, Rng& rng, double dt,
                               double stop_depth) {
  GraphPath path;
  double t = 0.0;
  int k = start.edge;
  double h = start.g;
  path.samples.push_back({t, k, h});
  const double rate = graph.holding_rate();
  while (t < t_end) {
    if (k == 0) {
      if (rate <= 0.0) {
        t = t_end;
        break;
      }
      const double tau = rng.exponential(rate);
      if (t + tau >= t_end) {
        t = t_end;
        break;
      }
      t += tau;
      double u = rng.uniform() * graph.total_rate();
      std::size_t i = 0;
      while (i + 1 < graph.edges.size() && u >= graph.edges[i].r) u -= graph.edges[i++].r;
      while (graph.edges[i].r <= 0.0) ++i;  // rounding can land on an s = 0 edge
      const auto& e = graph.edges[i];
      path.branches.push_back({t, 0, 0, e.k});
      k = e.k;
      h = 1e-9 * e.h_extremum;
      path.samples.push_back({t, k, h});
      continue;
    }
    const auto& e = graph.edge(k);
    const double H = std::abs(e.h_extremum);
    if (std::abs(h) >= stop_depth * H) {
      path.stopped = true;
      break;
    }
    const double step_dt = std::min(dt, t_end - t);
    auto f = [&](double y) { return e.drift_at(y); };
    const double k1 = f(h), k2 = f(h + 0.5 * step_dt * k1), k3 = f(h + 0.5 * step_dt * k2), k4 = f(h + step_dt * k3);
    double hn = h + step_dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    t += step_dt;
    ++path.steps;
    if (hn * e.h_extremum <= 0.0) {  // back at the separatrix: the root
      path.branches.push_back({t, 0, k, 0});
      k = 0;
      h = 0.0;
      path.samples.push_back({t, k, h});
      continue;
    }
    if (std::abs(hn) > H) hn = e.h_extremum;
    h = hn;
  }
  path.samples.push_back({t, k, h});
  return path;
}

double torus_descent_time(const RootedGraph& graph, int k, double depth, double dt) {
  const auto& e = graph.edge(k);
  if (e.s == 0) return INFINITY;
  double h = 1e-9 * e.h_extremum, t = 0.0;
  const double target = depth * std::abs(e.h_extremum);
  while (std::abs(h) < target) {
    auto f = [&](double y) { return e.drift_at(y); };
    const double k1 = f(h), k2 = f(h + 0.5 * dt * k1), k3 = f(h + 0.5 * dt * k2), k4 = f(h + dt * k3);
    const double hn = h + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    if (std::abs(hn) >= target) return t + dt * (target - std::abs(h)) / (std::abs(hn) - std::abs(h));
    h = hn;
    t += dt;
    if (t > 1e6) throw Error(ErrorKind::Stall, "descent into well " + e.name + " stalls");
  }
  return t;
}

TorusSdeResult simulate_torus_sde(const TorusSystem& t, const std::vector<Well>& wells, const Vec3& start,
                                  double t_end, const TorusSdeOptions& opts) {
  Dynamics dyn;
  dyn.F = t.F;
  dyn.z = t.z;
  dyn.fast = [&t](const Vec3& y) { return t.fast(y); };
  dyn.slow = [&t](const Vec3& y) { return t.perturbation_velocity(y); };
  dyn.noise = t.noise;
  dyn.epsilon = t.epsilon;
  dyn.delta = t.delta;
  dyn.observable = [](const Vec3&) { return 0.0; };

  TorusSdeResult res;
  int where = 0;
  res.path.samples.push_back({0.0, 0, 0.0});
  auto monitor = [&](double time, const Vec3& x, double) {
    MonitorAction act;
    int now = 0;
    double hv = 0.0;
    for (const auto& w : wells)
      if (w.contains(t.R, x)) {
        now = w.id;
        hv = w.h(x);
        if (std::abs(hv) >= opts.entry_depth * std::abs(w.h_extremum)) {
          res.well = w.id;
          res.entry_time = time;
          act.event = TrajectoryEvent{time, EventKind::EnteredWell, w.id};
          act.stop = true;
        }
      }
    if (now != where) {
      res.path.branches.push_back({time, 0, where, now});
      res.path.samples.push_back({time, now, hv});
      where = now;
    }
    return act;
  };
  IntegratorConfig cfg = opts.integrator;
  cfg.method = Method::HeunStratonovich;
  res.trajectory = integrate(dyn, start, t_end, cfg.h * t.epsilon, cfg, monitor);
  res.path.stopped = res.well != 0;
  res.path.samples.push_back({res.trajectory.final_time, where, 0.0});
  return res;
}

}  // namespace slowfast
