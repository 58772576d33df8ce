#pragma once

#include <array>
#include <functional>
#include <vector>

#include "slowfast/geometry.hpp"

namespace slowfast {

struct SurfaceMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::vector<int>> neighbors;

  void build_neighbors();
  double area() const;
};

// Icosphere with `subdivisions` levels, each vertex moved along its ray from
// `center` onto F = z. Requires the level surface to be star-shaped about center.
SurfaceMesh star_shaped_mesh(const SmoothField& F, double z, const Vec3& center, double radius_guess,
                             int subdivisions);

// Periodic (azimuth, poloidal) grid on the torus of radii R, r.
SurfaceMesh torus_mesh(double R, double r, int n_phi, int n_psi);

struct RegionIntegral {
  double value = 0.0;
  double area = 0.0;
  int triangles = 0;
};

// Integral of f over the connected component of {h < level} (mesh-linear
// clipping) that contains the mesh vertex nearest to `anchor`. Quadrature
// points are projected onto F = z.
RegionIntegral integrate_sublevel_component(const SurfaceMesh& mesh, const SmoothField& F, double z,
                                            const std::function<double(const Vec3&)>& h, double level,
                                            const Vec3& anchor, const std::function<double(const Vec3&)>& f);

// Integral of f over the whole mesh surface.
RegionIntegral integrate_surface(const SurfaceMesh& mesh, const SmoothField& F, double z,
                                 const std::function<double(const Vec3&)>& f);

// Contour tree of a vertex function on a mesh of a closed genus-0 surface.
struct ContourTree {
  struct Node {
    int vertex;  // mesh vertex
    double value;
    std::vector<int> up, down;  // neighbouring nodes
  };
  struct Arc {
    int lower, upper;               // node ids
    std::vector<int> interior;      // mesh vertices contracted into the arc
  };
  std::vector<Node> nodes;
  std::vector<Arc> arcs;
};

// Critical nodes only (degree != 2); leaf branches with persistence below
// `persistence` are cancelled.
ContourTree contour_tree(const SurfaceMesh& mesh, const std::vector<double>& values, double persistence);

}  // namespace slowfast
