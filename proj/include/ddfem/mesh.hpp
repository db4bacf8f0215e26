#pragma once

#include "ddfem/geometry.hpp"

#include <array>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace ddfem {

// Boundary markers used by the box generators.
namespace marker {
inline constexpr int left = 1;
inline constexpr int right = 2;
inline constexpr int bottom = 3;
inline constexpr int top = 4;
}  // namespace marker

struct BoundaryFacet {
  std::array<int, 2> v{-1, -1};  // second entry unused for intervals
  int cell = -1;
  int marker = 0;
};

// Interval (dim 1) or triangle (dim 2) mesh. Interval cells use the first two
// vertex slots; interval vertices carry y = 0.
struct Mesh {
  int dim = 2;
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> cells;
  std::vector<BoundaryFacet> boundary;
  double h = 0.0;  // maximum cell circumdiameter (cell length in 1D)

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_cells() const { return static_cast<int>(cells.size()); }
  int vertices_per_cell() const { return dim == 1 ? 2 : 3; }

  double cell_measure(int c) const;
  double cell_diameter(int c) const;  // circumdiameter
  double total_measure() const;
  Vec2 centroid(int c) const;
};

/// nx-by-ny rectangles, each split in two along an alternating diagonal.
Mesh uniform_box(const Vec2& lo, const Vec2& hi, int nx, int ny);
Mesh uniform_box(const Box& box, int n);

/// Equispaced nodes a + i h. Throws if h does not divide b - a.
Mesh interval_mesh(double a, double b, double h);

/// Splits every triangle into four similar ones; markers are inherited.
Mesh refine_uniform(const Mesh& mesh);

struct GradedMeshSpec {
  Vec2 lo{0.0, 0.0};
  Vec2 hi{2.2, 0.41};
  ShapeSpec hole;
  double h_min = 0.005;
  double h_max = 0.02;
  double grow_start = 0.0875;
  double grow_end = 0.35;
};

class MeshGenerationError : public std::runtime_error {
 public:
  explicit MeshGenerationError(const std::string& what) : std::runtime_error(what) {}
};

/// Target cell size at distance d from the hole boundary.
double graded_target_size(const GradedMeshSpec& spec, double d);

/// Graded triangulation of the box by newest-vertex bisection of a uniform
/// base mesh. Throws MeshGenerationError if the size-field post-condition
/// fails.
Mesh graded_mesh(const GradedMeshSpec& spec);

/// Rebuilds boundary facets and labels them by the side of [lo, hi] they lie on.
void label_box_boundary(Mesh& mesh, const Vec2& lo, const Vec2& hi);

/// Recomputes mesh.h from the cells.
void update_mesh_size(Mesh& mesh);

using PointData = std::vector<std::pair<std::string, std::vector<double>>>;

/// Legacy ASCII VTK unstructured grid with per-vertex scalar fields.
void write_vtk(const std::string& path, const Mesh& mesh, const PointData& fields = {});

}  // namespace ddfem
