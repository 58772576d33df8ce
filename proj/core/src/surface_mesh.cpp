#include "slowfast/surface_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "slowfast/errors.hpp"

namespace slowfast {

void SurfaceMesh::build_neighbors() {
  std::vector<std::set<int>> n(vertices.size());
  for (const auto& t : triangles)
    for (int i = 0; i < 3; ++i) {
      n[t[i]].insert(t[(i + 1) % 3]);
      n[t[i]].insert(t[(i + 2) % 3]);
    }
  neighbors.assign(vertices.size(), {});
  for (std::size_t i = 0; i < n.size(); ++i) neighbors[i].assign(n[i].begin(), n[i].end());
}

double SurfaceMesh::area() const {
  double a = 0.0;
  for (const auto& t : triangles)
    a += 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
  return a;
}

SurfaceMesh star_shaped_mesh(const SmoothField& F, double z, const Vec3& center, double radius_guess,
                             int subdivisions) {
  const double p = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, p, 0}, {1, p, 0}, {-1, -p, 0}, {1, -p, 0}, {0, -1, p}, {0, 1, p},
                         {0, -1, -p}, {0, 1, -p}, {p, 0, -1}, {p, 0, 1}, {-p, 0, -1}, {-p, 0, 1}};
  for (auto& x : v) x.normalize();
  std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                       {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                       {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                       {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> g;
    g.reserve(f.size() * 4);
    for (const auto& t : f) {
      const int a = midpoint(t[0], t[1]), b = midpoint(t[1], t[2]), c = midpoint(t[2], t[0]);
      g.push_back({t[0], a, c});
      g.push_back({t[1], b, a});
      g.push_back({t[2], c, b});
      g.push_back({a, b, c});
    }
    f = std::move(g);
  }
  SurfaceMesh m;
  m.vertices.reserve(v.size());
  for (const auto& d : v) {
    double t = radius_guess;
    bool ok = false;
    for (int it = 0; it < 100; ++it) {
      const Vec3 x = center + t * d;
      const double r = F.value(x) - z;
      if (std::abs(r) < 1e-13) {
        ok = true;
        break;
      }
      const double dr = F.gradient(x).dot(d);
      if (std::abs(dr) < 1e-14) break;
      double step = r / dr;
      if (std::abs(step) > 0.5 * t) step = std::copysign(0.5 * t, step);
      t -= step;
    }
    if (!ok || t <= 0.0) throw Error(ErrorKind::Config, "level surface is not star-shaped about the mesh center");
    m.vertices.push_back(center + t * d);
  }
  m.triangles = std::move(f);
  m.build_neighbors();
  return m;
}

SurfaceMesh torus_mesh(double R, double r, int n_phi, int n_psi) {
  SurfaceMesh m;
  for (int i = 0; i < n_phi; ++i)
    for (int j = 0; j < n_psi; ++j) {
      const double phi = 2.0 * M_PI * i / n_phi, psi = 2.0 * M_PI * j / n_psi;
      m.vertices.emplace_back((R + r * std::cos(psi)) * std::cos(phi), (R + r * std::cos(psi)) * std::sin(phi),
                              r * std::sin(psi));
    }
  auto id = [&](int i, int j) { return ((i + n_phi) % n_phi) * n_psi + (j + n_psi) % n_psi; };
  for (int i = 0; i < n_phi; ++i)
    for (int j = 0; j < n_psi; ++j) {
      m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  m.build_neighbors();
  return m;
}

namespace {

struct UnionFind {
  std::vector<int> p;
  explicit UnionFind(std::size_t n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) {
    while (p[x] != x) x = p[x] = p[p[x]];
    return x;
  }
  void unite(int a, int b) { p[find(a)] = find(b); }
};

// degree-2 rule on a (flat) triangle, points projected onto the surface
double triangle_quadrature(const Vec3& a, const Vec3& b, const Vec3& c, const SmoothField& F, double z,
                           const std::function<double(const Vec3&)>& f, double* area) {
  const double A = 0.5 * (b - a).cross(c - a).norm();
  *area += A;
  if (A == 0.0) return 0.0;
  const Vec3 p[3] = {(a + b) / 2.0, (b + c) / 2.0, (c + a) / 2.0};
  double s = 0.0;
  for (const auto& q : p) s += f(project_to_level(F, z, q, 1e-13));
  return A * s / 3.0;
}

double polygon_quadrature(const std::vector<Vec3>& poly, const SmoothField& F, double z,
                          const std::function<double(const Vec3&)>& f, double* area) {
  double s = 0.0;
  for (std::size_t i = 1; i + 1 < poly.size(); ++i) s += triangle_quadrature(poly[0], poly[i], poly[i + 1], F, z, f, area);
  return s;
}

}  // namespace

RegionIntegral integrate_sublevel_component(const SurfaceMesh& mesh, const SmoothField& F, double z,
                                            const std::function<double(const Vec3&)>& h, double level,
                                            const Vec3& anchor, const std::function<double(const Vec3&)>& f) {
  const std::size_t n = mesh.vertices.size();
  std::vector<double> hv(n);
  std::vector<char> below(n);
  for (std::size_t i = 0; i < n; ++i) {
    hv[i] = h(mesh.vertices[i]) - level;
    below[i] = hv[i] < 0.0;
  }
  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i)
    if (below[i])
      for (int j : mesh.neighbors[i])
        if (below[j]) uf.unite(static_cast<int>(i), j);
  int best = -1;
  double best_d = 1e300;
  for (std::size_t i = 0; i < n; ++i)
    if (below[i]) {
      const double d = (mesh.vertices[i] - anchor).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
  RegionIntegral out;
  if (best < 0) return out;
  const int comp = uf.find(best);
  for (const auto& t : mesh.triangles) {
    int nb = 0;
    bool mine = false;
    for (int k = 0; k < 3; ++k)
      if (below[t[k]]) {
        ++nb;
        if (uf.find(t[k]) == comp) mine = true;
      }
    if (!mine) continue;
    ++out.triangles;
    std::vector<Vec3> poly;
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      if (below[a]) poly.push_back(mesh.vertices[a]);
      if (below[a] != below[b]) {
        const double s = hv[a] / (hv[a] - hv[b]);
        poly.push_back(mesh.vertices[a] + s * (mesh.vertices[b] - mesh.vertices[a]));
      }
    }
    out.value += polygon_quadrature(poly, F, z, f, &out.area);
  }
  return out;
}

RegionIntegral integrate_surface(const SurfaceMesh& mesh, const SmoothField& F, double z,
                                 const std::function<double(const Vec3&)>& f) {
  RegionIntegral out;
  for (const auto& t : mesh.triangles) {
    out.value += triangle_quadrature(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]], F, z, f, &out.area);
    ++out.triangles;
  }
  return out;
}

namespace {

struct Tree {
  std::vector<std::vector<int>> up, down;
  explicit Tree(std::size_t n) : up(n), down(n) {}
  void link(int lo, int hi) {
    up[lo].push_back(hi);
    down[hi].push_back(lo);
  }
  static void erase(std::vector<int>& v, int x) { v.erase(std::find(v.begin(), v.end(), x)); }
  // remove a vertex with one up and one down neighbour (or a leaf)
  void remove(int v) {
    if (up[v].size() == 1 && down[v].size() == 1) {
      const int a = down[v][0], b = up[v][0];
      erase(up[a], v);
      erase(down[b], v);
      link(a, b);
    } else {
      for (int a : down[v]) erase(up[a], v);
      for (int b : up[v]) erase(down[b], v);
    }
    up[v].clear();
    down[v].clear();
  }
};

}  // namespace

ContourTree contour_tree(const SurfaceMesh& mesh, const std::vector<double>& values, double persistence) {
  const std::size_t n = mesh.vertices.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](int a, int b) { return values[a] < values[b] || (values[a] == values[b] && a < b); };
  std::sort(order.begin(), order.end(), less);

  auto sweep = [&](bool ascending) {
    Tree t(n);
    UnionFind uf(n);
    std::vector<int> head(n, -1);
    std::vector<char> seen(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
      const int v = ascending ? order[k] : order[n - 1 - k];
      seen[v] = 1;
      head[v] = v;
      std::set<int> comps;
      for (int u : mesh.neighbors[v])
        if (seen[u]) comps.insert(uf.find(u));
      for (int c : comps) {
        if (ascending) t.link(head[c], v);
        else t.link(v, head[c]);
        uf.unite(c, v);
      }
      head[uf.find(v)] = v;
    }
    return t;
  };
  Tree jt = sweep(true);
  Tree st = sweep(false);

  // merge (Carr, Snoeyink, Axen)
  std::vector<std::pair<int, int>> edges;
  std::vector<char> removed(n, 0);
  std::vector<int> queue;
  auto is_leaf = [&](int v) {
    return (st.up[v].empty() && jt.down[v].size() == 1 && st.down[v].size() == 1) ||
           (jt.down[v].empty() && st.up[v].size() == 1 && jt.up[v].size() == 1);
  };
  for (std::size_t v = 0; v < n; ++v)
    if (is_leaf(static_cast<int>(v))) queue.push_back(static_cast<int>(v));
  std::size_t remaining = n;
  while (remaining > 1 && !queue.empty()) {
    const int v = queue.back();
    queue.pop_back();
    if (removed[v] || !is_leaf(v)) continue;
    int w;
    if (st.up[v].empty() && st.down[v].size() == 1) {
      w = st.down[v][0];
      edges.emplace_back(w, v);
    } else {
      w = jt.up[v][0];
      edges.emplace_back(v, w);
    }
    jt.remove(v);
    st.remove(v);
    removed[v] = 1;
    --remaining;
    if (is_leaf(w)) queue.push_back(w);
  }

  // adjacency of the augmented tree
  std::vector<std::vector<int>> adj(n);
  for (auto [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<char> alive(n, 1);
  auto degree = [&](int v) {
    int d = 0;
    for (int u : adj[v]) d += alive[u];
    return d;
  };
  // persistence simplification: prune short leaf branches
  bool changed = true;
  while (changed) {
    changed = false;
    // collapse regular chains implicitly: a leaf branch ends where degree >= 3
    for (std::size_t s = 0; s < n; ++s) {
      if (!alive[s] || degree(static_cast<int>(s)) != 1) continue;
      std::vector<int> chain = {static_cast<int>(s)};
      int prev = -1, cur = static_cast<int>(s);
      for (;;) {
        int next = -1;
        for (int u : adj[cur])
          if (alive[u] && u != prev) next = u;
        if (next < 0) break;
        prev = cur;
        cur = next;
        if (degree(cur) != 2) break;
        chain.push_back(cur);
      }
      if (degree(cur) < 3) continue;
      if (std::abs(values[s] - values[cur]) < persistence) {
        for (int v : chain) alive[v] = 0;
        changed = true;
      }
    }
  }

  ContourTree ct;
  std::vector<int> node_of(n, -1);
  for (std::size_t v = 0; v < n; ++v) {
    if (!alive[v] || degree(static_cast<int>(v)) == 2) continue;
    node_of[v] = static_cast<int>(ct.nodes.size());
    ct.nodes.push_back({static_cast<int>(v), values[v], {}, {}});
  }
  std::set<std::pair<int, int>> done;
  for (std::size_t s = 0; s < n; ++s) {
    if (node_of[s] < 0) continue;
    for (int first : adj[s]) {
      if (!alive[first]) continue;
      std::vector<int> interior;
      int prev = static_cast<int>(s), cur = first;
      while (node_of[cur] < 0) {
        interior.push_back(cur);
        int next = -1;
        for (int u : adj[cur])
          if (alive[u] && u != prev) next = u;
        prev = cur;
        cur = next;
      }
      const int a = node_of[s], b = node_of[cur];
      if (a > b || !done.insert({a, b}).second) continue;
      const bool a_low = less(static_cast<int>(s), cur);
      ContourTree::Arc arc{a_low ? a : b, a_low ? b : a, std::move(interior)};
      ct.nodes[arc.lower].up.push_back(arc.upper);
      ct.nodes[arc.upper].down.push_back(arc.lower);
      ct.arcs.push_back(std::move(arc));
    }
  }
  return ct;
}

}  // namespace slowfast
