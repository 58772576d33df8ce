#include "slowfast/levelsets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>

#include "slowfast/errors.hpp"

namespace slowfast {

const char* to_string(CriticalKind kind) {
  switch (kind) {
    case CriticalKind::Minimum: return "min";
    case CriticalKind::Maximum: return "max";
    case CriticalKind::Saddle: return "saddle";
  }
  return "?";
}

const char* to_string(VertexType type) {
  switch (type) {
    case VertexType::Minimum: return "minimum";
    case VertexType::Maximum: return "maximum";
    case VertexType::Saddle: return "saddle";
    case VertexType::Boundary: return "boundary-P";
  }
  return "?";
}

Eigen::Vector2d tangential_hessian_eigenvalues(const SmoothField& F, const SmoothField& G, const Vec3& x, double mu) {
  const auto [e1, e2] = tangent_basis(F.gradient(x));
  const Mat3 L = G.hessian(x) - mu * F.hessian(x);
  Eigen::Matrix2d m;
  m << e1.dot(L * e1), e1.dot(L * e2), e2.dot(L * e1), e2.dot(L * e2);
  m = 0.5 * (m + m.transpose()).eval();
  return Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(m).eigenvalues();
}

std::optional<CriticalPoint> refine_critical_point(const SmoothField& F, double z, const SmoothField& G,
                                                   const Vec3& seed, double degenerate_eigenvalue) {
  Vec3 x;
  try {
    x = project_to_level(F, z, seed, 1e-13);
  } catch (const Error&) {
    return std::nullopt;
  }
  double mu = G.gradient(x).dot(F.gradient(x)) / F.gradient(x).squaredNorm();
  bool converged = false;
  for (int it = 0; it < 80; ++it) {
    const Vec3 gF = F.gradient(x), gG = G.gradient(x);
    Eigen::Vector4d r;
    r.head<3>() = gG - mu * gF;
    r[3] = F.value(x) - z;
    if (r.head<3>().norm() < 1e-12 * std::max(1.0, gG.norm()) && std::abs(r[3]) < 1e-13) {
      converged = true;
      break;
    }
    Eigen::Matrix4d J = Eigen::Matrix4d::Zero();
    J.topLeftCorner<3, 3>() = G.hessian(x) - mu * F.hessian(x);
    J.block<3, 1>(0, 3) = -gF;
    J.block<1, 3>(3, 0) = gF.transpose();
    Eigen::Vector4d d = J.fullPivLu().solve(-r);
    if (!d.allFinite()) return std::nullopt;
    double scale = 1.0;
    if (d.head<3>().norm() > 0.2) scale = 0.2 / d.head<3>().norm();
    x += scale * d.head<3>();
    mu += scale * d[3];
  }
  if (!converged) return std::nullopt;
  CriticalPoint cp;
  cp.x = x;
  cp.g = G.value(x);
  cp.mu = mu;
  const Eigen::Vector2d ev = tangential_hessian_eigenvalues(F, G, x, mu);
  cp.hessian_gap = ev.cwiseAbs().minCoeff();
  if (cp.hessian_gap < degenerate_eigenvalue)
    throw Error(ErrorKind::DegenerateCriticalPoint,
                "tangential Hessian eigenvalue " + std::to_string(cp.hessian_gap) + " at g=" + std::to_string(cp.g));
  if (ev[0] > 0) {
    cp.kind = CriticalKind::Minimum;
    cp.stability = "asymptotically-stable";
  } else if (ev[1] < 0) {
    cp.kind = CriticalKind::Maximum;
    cp.stability = "unstable";
  } else {
    cp.kind = CriticalKind::Saddle;
    cp.stability = "saddle";
  }
  return cp;
}

namespace {

Vec3 ray_to_surface(const SmoothField& F, double z, const Vec3& center, const Vec3& dir, double t0, bool* ok) {
  double t = t0;
  *ok = false;
  for (int it = 0; it < 100; ++it) {
    const Vec3 x = center + t * dir;
    const double r = F.value(x) - z;
    if (std::abs(r) < 1e-13) {
      *ok = t > 0;
      return x;
    }
    const double dr = F.gradient(x).dot(dir);
    if (std::abs(dr) < 1e-14) return x;
    double s = r / dr;
    if (std::abs(s) > 0.5 * t) s = std::copysign(0.5 * t, s);
    t -= s;
  }
  return center + t * dir;
}

}  // namespace

std::vector<CriticalPoint> find_critical_points(const SurfaceSystem& sys, const CriticalSearchOptions& opts) {
  std::vector<CriticalPoint> out;
  const double t0 = std::max(1e-3, (sys.x0 - sys.center).norm());
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < opts.seeds; ++i) {
    const double y = 1.0 - 2.0 * (i + 0.5) / opts.seeds;
    const double r = std::sqrt(1.0 - y * y);
    const Vec3 dir(r * std::cos(golden * i), y, r * std::sin(golden * i));
    bool ok = false;
    const Vec3 seed = ray_to_surface(sys.F, sys.z, sys.center, dir, t0, &ok);
    if (!ok) continue;
    auto cp = refine_critical_point(sys.F, sys.z, sys.G, seed, opts.degenerate_eigenvalue);
    if (!cp) continue;
    bool dup = false;
    for (const auto& c : out)
      if ((c.x - cp->x).norm() < opts.dedup_distance) dup = true;
    if (!dup) out.push_back(*cp);
  }
  std::sort(out.begin(), out.end(), [](const CriticalPoint& a, const CriticalPoint& b) { return a.g < b.g; });
  return out;
}

Vec3 correct_to_curve(const SmoothField& F, double z, const SmoothField& H, double level, const Vec3& x, double tol,
                      int max_iterations) {
  Vec3 y = x;
  for (int it = 0; it <= max_iterations; ++it) {
    const Eigen::Vector2d r(F.value(y) - z, H.value(y) - level);
    if (std::abs(r[0]) < tol && std::abs(r[1]) < tol) return y;
    if (it == max_iterations) break;
    Eigen::Matrix<double, 2, 3> J;
    J.row(0) = F.gradient(y).transpose();
    J.row(1) = H.gradient(y).transpose();
    const Eigen::Matrix2d JJ = J * J.transpose();
    if (std::abs(JJ.determinant()) < 1e-24 * JJ.squaredNorm()) break;
    const Vec3 d = -J.transpose() * JJ.ldlt().solve(r);
    if (!d.allFinite() || d.norm() > 0.5) break;
    y += d;
  }
  throw Error(ErrorKind::CurveEscape, "corrector did not converge onto the level curve (level " + std::to_string(level) + ")");
}

namespace {

Vec3 rk4(const std::function<Vec3(const Vec3&)>& v, const Vec3& x, double dt) {
  const Vec3 k1 = v(x);
  const Vec3 k2 = v(x + 0.5 * dt * k1);
  const Vec3 k3 = v(x + 0.5 * dt * k2);
  const Vec3 k4 = v(x + dt * k3);
  return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double hermite_root(double s0, double s1, double m0, double m1) {
  auto p = [&](double u) {
    const double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * s0 + (u3 - 2 * u2 + u) * m0 + (-2 * u3 + 3 * u2) * s1 + (u3 - u2) * m1;
  };
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (p(mid) < 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

LevelCurve trace_orbit(const OrbitProblem& pb, double level, const Vec3& seed, const TraceOptions& opts) {
  const Vec3 xs = correct_to_curve(pb.F, pb.z, pb.H, level, seed);
  const Vec3 vs = pb.velocity(xs);
  if (vs.norm() < 1e-12) throw Error(ErrorKind::CurveEscape, "seed is a stationary point of the flow");
  const Vec3 vhat = vs.normalized();
  auto advance = [&](const Vec3& x, double dt) {
    return correct_to_curve(pb.F, pb.z, pb.H, level, rk4(pb.velocity, x, dt));
  };

  // first pass: period by section crossing
  Vec3 x = xs;
  double t = 0.0, sigma_prev = 0.0, maxdist = 0.0, period = -1.0;
  for (std::size_t i = 0; i < opts.max_steps; ++i) {
    const Vec3 v = pb.velocity(x);
    const double dt = std::min(opts.dt_max, opts.ds_max / std::max(v.norm(), 1e-300));
    const Vec3 xn = advance(x, dt);
    const double sigma = (xn - xs).dot(vhat);
    const double dist = (xn - xs).norm();
    maxdist = std::max(maxdist, dist);
    if (sigma_prev < 0.0 && sigma >= 0.0 && dist < 0.5 * maxdist) {
      const double s = hermite_root(sigma_prev, sigma, dt * v.dot(vhat), dt * pb.velocity(xn).dot(vhat));
      period = t + s * dt;
      break;
    }
    sigma_prev = sigma;
    t += dt;
    x = xn;
  }
  if (period <= 0.0) throw Error(ErrorKind::CurveEscape, "orbit did not close within the step budget");

  LevelCurve c;
  c.g = level;
  c.period = period;
  const auto n = static_cast<std::size_t>(
      std::max<double>(opts.min_samples, std::ceil(period / opts.dt_max)));
  c.dt = period / static_cast<double>(n);
  c.samples.reserve(n);
  x = xs;
  c.samples.push_back(x);
  for (std::size_t i = 1; i <= n; ++i) {
    const Vec3 xn = advance(x, c.dt);
    c.length += (xn - x).norm();
    x = xn;
    if (i < n) c.samples.push_back(x);
  }
  c.closure_error = (x - xs).norm();
  for (const auto& p : c.samples) {
    c.max_level_error = std::max(c.max_level_error, std::abs(pb.H.value(p) - level));
    c.max_surface_error = std::max(c.max_surface_error, std::abs(pb.F.value(p) - pb.z));
  }
  c.functionals["T"] = period;
  return c;
}

LevelCurve trace_level_curve(const SurfaceSystem& sys, double g, const Vec3& seed, const TraceOptions& opts) {
  OrbitProblem pb{sys.F, sys.z, sys.G, [&sys](const Vec3& x) { return fast_field(sys, x); }};
  return trace_orbit(pb, g, seed, opts);
}

double line_functional(const LevelCurve& curve, const std::function<double(const Vec3&)>& phi) {
  double s = 0.0;
  for (const auto& x : curve.samples) s += phi(x);
  return s * curve.dt;
}

Vec3 flow_to_level(const SmoothField& F, double z, const SmoothField& H, const Vec3& x, double target) {
  auto field = [&](const Vec3& y) {
    const Vec3 gt = tangential_gradient(F, H, y);
    return (gt / gt.squaredNorm()).eval();
  };
  Vec3 y = project_to_level(F, z, x, 1e-13);
  double h = H.value(y);
  for (int it = 0; it < 200000 && std::abs(target - h) > 1e-10; ++it) {
    const Vec3 gt = tangential_gradient(F, H, y);
    const double m = gt.norm();
    if (m < 1e-14) throw Error(ErrorKind::CurveEscape, "gradient flow reached a critical point");
    double dh = target - h;
    const double cap = 0.02 * m;
    if (std::abs(dh) > cap) dh = std::copysign(cap, dh);
    y = project_to_level(F, z, rk4(field, y, dh), 1e-13);
    h = H.value(y);
  }
  return correct_to_curve(F, z, H, target, y);
}

const ReebEdge& ReebGraph::edge(int id) const {
  for (const auto& e : edges)
    if (e.id == id) return e;
  throw Error(ErrorKind::EdgeRange, "no edge with id " + std::to_string(id));
}

const ReebVertex& ReebGraph::vertex(int id) const {
  for (const auto& v : vertices)
    if (v.id == id) return v;
  throw Error(ErrorKind::EdgeRange, "no vertex with id " + std::to_string(id));
}

std::vector<int> ReebGraph::edges_at(int v) const {
  std::vector<int> out;
  for (const auto& e : edges)
    if (e.lower == v || e.upper == v) out.push_back(e.id);
  return out;
}

std::vector<int> ReebGraph::lower_edges(int v) const {
  std::vector<int> out;
  for (const auto& e : edges)
    if (e.upper == v) out.push_back(e.id);
  return out;
}

std::vector<int> ReebGraph::upper_edges(int v) const {
  std::vector<int> out;
  for (const auto& e : edges)
    if (e.lower == v) out.push_back(e.id);
  return out;
}

std::vector<int> ReebGraph::saddles() const {
  std::vector<int> out;
  for (const auto& v : vertices)
    if (v.type == VertexType::Saddle) out.push_back(v.id);
  return out;
}

bool ReebGraph::contains(int k, double g) const {
  const auto& e = edge(k);
  return g >= e.g_lo && g <= e.g_hi;
}

double ReebGraph::rho(int k1, double g1, int k2, double g2) const {
  if (k1 == k2) return std::abs(g1 - g2);
  // shortest path over vertices (the graph is a tree, any path is unique)
  std::map<int, double> dist;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  const auto& e1 = edge(k1);
  for (int v : {e1.lower, e1.upper}) {
    const double d = std::abs(g1 - vertex(v).g);
    if (!dist.count(v) || d < dist[v]) {
      dist[v] = d;
      pq.push({d, v});
    }
  }
  while (!pq.empty()) {
    auto [d, v] = pq.top();
    pq.pop();
    if (d > dist[v]) continue;
    for (int k : edges_at(v)) {
      const auto& e = edge(k);
      const int w = e.lower == v ? e.upper : e.lower;
      const double nd = d + (e.g_hi - e.g_lo);
      if (!dist.count(w) || nd < dist[w]) {
        dist[w] = nd;
        pq.push({nd, w});
      }
    }
  }
  const auto& e2 = edge(k2);
  double best = std::numeric_limits<double>::infinity();
  for (int v : {e2.lower, e2.upper})
    if (dist.count(v)) best = std::min(best, dist[v] + std::abs(g2 - vertex(v).g));
  return best;
}

ReebGraph build_reeb_graph(const SurfaceSystem& sys, const ReebOptions& opts) {
  ReebGraph graph;
  graph.separatrix_margin = opts.separatrix_margin;
  graph.critical_points = find_critical_points(sys, opts.critical);
  const auto& cps = graph.critical_points;
  int n_min = 0, n_max = 0, n_saddle = 0;
  for (const auto& c : cps) {
    n_min += c.kind == CriticalKind::Minimum;
    n_max += c.kind == CriticalKind::Maximum;
    n_saddle += c.kind == CriticalKind::Saddle;
  }
  if (n_min - n_saddle + n_max != 2)
    throw Error(ErrorKind::DegenerateCriticalPoint, "Morse count #min-#saddle+#max = " +
                                                        std::to_string(n_min - n_saddle + n_max) + " (expected 2)");
  for (std::size_t i = 0; i < cps.size(); ++i)
    for (std::size_t j = i + 1; j < cps.size(); ++j)
      if (cps[i].kind == CriticalKind::Saddle && cps[j].kind == CriticalKind::Saddle &&
          std::abs(cps[i].g - cps[j].g) < 1e-9)
        throw Error(ErrorKind::NonGenericLevels, "two saddles share the level " + std::to_string(cps[i].g));

  const SurfaceMesh mesh =
      star_shaped_mesh(sys.F, sys.z, sys.center, (sys.x0 - sys.center).norm(), opts.mesh_subdivisions);
  std::vector<double> values(mesh.vertices.size());
  double vmin = 1e300, vmax = -1e300;
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = sys.G.value(mesh.vertices[i]);
    vmin = std::min(vmin, values[i]);
    vmax = std::max(vmax, values[i]);
  }
  const ContourTree ct = contour_tree(mesh, values, opts.persistence_fraction * (vmax - vmin));

  // match contour-tree nodes with smooth critical points
  std::vector<int> match(ct.nodes.size(), -1);
  std::vector<char> used(cps.size(), 0);
  for (std::size_t i = 0; i < ct.nodes.size(); ++i) {
    const auto& nd = ct.nodes[i];
    CriticalKind kind;
    const std::size_t deg = nd.up.size() + nd.down.size();
    if (deg == 1) kind = nd.up.empty() ? CriticalKind::Maximum : CriticalKind::Minimum;
    else if (deg == 3) kind = CriticalKind::Saddle;
    else throw Error(ErrorKind::DegenerateCriticalPoint, "contour tree node of degree " + std::to_string(deg));
    double best = 1e300;
    for (std::size_t c = 0; c < cps.size(); ++c) {
      if (used[c] || cps[c].kind != kind) continue;
      const double d = (cps[c].x - mesh.vertices[nd.vertex]).norm();
      if (d < best) {
        best = d;
        match[i] = static_cast<int>(c);
      }
    }
    if (match[i] < 0)
      throw Error(ErrorKind::DegenerateCriticalPoint, "mesh critical structure does not match the smooth critical points");
    used[match[i]] = 1;
  }
  if (ct.nodes.size() != cps.size())
    throw Error(ErrorKind::DegenerateCriticalPoint, "mesh found " + std::to_string(ct.nodes.size()) +
                                                        " critical nodes, smooth search " + std::to_string(cps.size()));

  graph.g_P = sys.G.value(sys.x0) + 1.0;
  // vertex for each critical point at or below g_P
  std::vector<int> vid(cps.size(), -1);
  for (std::size_t c = 0; c < cps.size(); ++c) {
    if (cps[c].g >= graph.g_P) continue;
    ReebVertex v;
    v.type = cps[c].kind == CriticalKind::Minimum  ? VertexType::Minimum
             : cps[c].kind == CriticalKind::Maximum ? VertexType::Maximum
                                                    : VertexType::Saddle;
    v.g = cps[c].g;
    v.x = cps[c].x;
    v.critical_index = static_cast<int>(c);
    vid[c] = static_cast<int>(graph.vertices.size());
    v.id = vid[c];
    graph.vertices.push_back(v);
  }
  struct Raw {
    int lower, upper;
    double g_lo, g_hi;
    const ContourTree::Arc* arc;
  };
  std::vector<Raw> raw;
  for (const auto& arc : ct.arcs) {
    const int lo = match[arc.lower], hi = match[arc.upper];
    if (cps[lo].g >= graph.g_P) continue;
    Raw r{vid[lo], -1, cps[lo].g, std::min(cps[hi].g, graph.g_P), &arc};
    if (cps[hi].g > graph.g_P) {
      ReebVertex p;
      p.type = VertexType::Boundary;
      p.g = graph.g_P;
      p.id = static_cast<int>(graph.vertices.size());
      graph.vertices.push_back(p);
      r.upper = p.id;
    } else {
      r.upper = vid[hi];
    }
    if (!(r.g_lo < r.g_hi)) throw Error(ErrorKind::NonGenericLevels, "edge with empty level range");
    raw.push_back(r);
  }

  // edge numbering: 1 and 3 for the wells below a single join saddle, 2 above
  std::vector<int> ids(raw.size(), 0);
  int saddle_count = 0, join = -1;
  for (const auto& v : graph.vertices)
    if (v.type == VertexType::Saddle) {
      ++saddle_count;
      join = v.id;
    }
  std::vector<std::size_t> below_join, above_join;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i].upper == join) below_join.push_back(i);
    if (raw[i].lower == join) above_join.push_back(i);
  }
  int next = 1;
  if (saddle_count == 1 && below_join.size() == 2 && above_join.size() == 1) {
    auto x1 = [&](std::size_t i) { return graph.vertices[raw[i].lower].x[0]; };
    const bool first_right = x1(below_join[0]) >= x1(below_join[1]);
    ids[below_join[first_right ? 0 : 1]] = 1;
    ids[below_join[first_right ? 1 : 0]] = 3;
    ids[above_join[0]] = 2;
    next = 4;
  }
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < raw.size(); ++i)
    if (ids[i] == 0) rest.push_back(i);
  std::sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) {
    if (raw[a].g_lo != raw[b].g_lo) return raw[a].g_lo < raw[b].g_lo;
    return graph.vertices[raw[a].lower].x[0] > graph.vertices[raw[b].lower].x[0];
  });
  for (std::size_t i : rest) ids[i] = next++;

  for (std::size_t i = 0; i < raw.size(); ++i) {
    ReebEdge e;
    e.id = ids[i];
    e.lower = raw[i].lower;
    e.upper = raw[i].upper;
    e.g_lo = raw[i].g_lo;
    e.g_hi = raw[i].g_hi;
    const double mid = 0.5 * (e.g_lo + e.g_hi);
    int best = -1;
    double bd = 1e300;
    for (int mv : raw[i].arc->interior) {
      const double d = std::abs(values[mv] - mid);
      if (values[mv] > e.g_lo && values[mv] < e.g_hi && d < bd) {
        bd = d;
        best = mv;
      }
    }
    if (best < 0)
      throw Error(ErrorKind::DegenerateCriticalPoint,
                  "edge " + std::to_string(e.id) + " has no interior mesh vertex; refine the mesh");
    e.reference = mesh.vertices[best];
    e.reference_g = values[best];
    graph.edges.push_back(e);
  }
  std::sort(graph.edges.begin(), graph.edges.end(), [](const ReebEdge& a, const ReebEdge& b) { return a.id < b.id; });
  if (graph.vertices.size() != graph.edges.size() + 1)
    throw Error(ErrorKind::DegenerateCriticalPoint, "graph over S(z) is not a tree (V-E != 1)");

  // minima reachable downward from each edge
  std::function<std::vector<int>(int)> minima = [&](int v) {
    if (graph.vertices[v].type == VertexType::Minimum) return std::vector<int>{v};
    std::vector<int> out;
    for (int k : graph.lower_edges(v)) {
      auto m = minima(graph.edge(k).lower);
      out.insert(out.end(), m.begin(), m.end());
    }
    return out;
  };
  for (auto& e : graph.edges) e.minima_below = minima(e.lower);
  return graph;
}

Vec3 edge_seed(const SurfaceSystem& sys, const ReebGraph& graph, int k, double g) {
  const auto& e = graph.edge(k);
  if (!(g > e.g_lo && g <= e.g_hi))
    throw Error(ErrorKind::EdgeRange, "g=" + std::to_string(g) + " outside edge " + std::to_string(k));
  return flow_to_level(sys.F, sys.z, sys.G, e.reference, g);
}

LevelCurve trace_edge_curve(const SurfaceSystem& sys, const ReebGraph& graph, int k, double g,
                            const TraceOptions& opts) {
  LevelCurve c = trace_level_curve(sys, g, edge_seed(sys, graph, k, g), opts);
  c.edge = k;
  return c;
}

Vec3 descend_to_minimum(const SmoothField& F, double z, const SmoothField& G, const Vec3& x) {
  Vec3 y = project_to_level(F, z, x, 1e-13);
  double alpha = 0.5;
  double gy = G.value(y);
  for (int it = 0; it < 20000; ++it) {
    const Vec3 gt = tangential_gradient(F, G, y);
    if (gt.norm() < 1e-9) break;
    for (;;) {
      const Vec3 cand = project_to_level(F, z, (y - alpha * gt).eval(), 1e-13);
      const double gc = G.value(cand);
      if (gc < gy - 0.25 * alpha * gt.squaredNorm() || alpha < 1e-12) {
        y = cand;
        gy = gc;
        alpha = std::min(1.0, alpha * 1.5);
        break;
      }
      alpha *= 0.5;
    }
  }
  return y;
}

GraphCoordinate classify_point(const SurfaceSystem& sys, const ReebGraph& graph, const Vec3& x) {
  const double g = sys.G.value(x);
  for (const auto& v : graph.vertices)
    if (v.type == VertexType::Saddle && std::abs(g - v.g) < graph.separatrix_margin)
      throw Error(ErrorKind::AmbiguousSeparatrix, "point within the separatrix margin (g=" + std::to_string(g) + ")");
  std::vector<int> cands;
  for (const auto& e : graph.edges)
    if (g >= e.g_lo - 1e-12 && g <= e.g_hi + 1e-12) cands.push_back(e.id);
  if (cands.empty()) throw Error(ErrorKind::EdgeRange, "g=" + std::to_string(g) + " is outside S(z)");
  if (cands.size() == 1) return {cands[0], g};
  const Vec3 m = descend_to_minimum(sys.F, sys.z, sys.G, x);
  int nearest = -1;
  double best = 1e300;
  for (const auto& v : graph.vertices)
    if (v.type == VertexType::Minimum && (v.x - m).norm() < best) {
      best = (v.x - m).norm();
      nearest = v.id;
    }
  std::vector<int> hits;
  for (int k : cands) {
    const auto& mb = graph.edge(k).minima_below;
    if (std::find(mb.begin(), mb.end(), nearest) != mb.end()) hits.push_back(k);
  }
  if (hits.size() != 1) throw Error(ErrorKind::AmbiguousSeparatrix, "could not attribute the point to one edge");
  return {hits[0], g};
}

}  // namespace slowfast
