#include "ddfem/mesh.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>

using namespace ddfem;

namespace {

double total_area(const Mesh& m) {
  double s = 0.0;
  for (int c = 0; c < m.num_cells(); ++c) s += m.cell_measure(c);
  return s;
}

// Counts cells per undirected edge; conforming iff every edge has one or two
// cells, and exactly the one-cell edges are boundary facets.
void expect_conforming(const Mesh& m) {
  std::map<std::pair<int, int>, int> count;
  for (const auto& t : m.cells)
    for (int k = 0; k < 3; ++k) {
      int a = t[k], b = t[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      ++count[{a, b}];
    }
  int boundary_edges = 0;
  for (const auto& [e, n] : count) {
    ASSERT_LE(n, 2);
    if (n == 1) ++boundary_edges;
  }
  EXPECT_EQ(boundary_edges, static_cast<int>(m.boundary.size()));
  for (const auto& f : m.boundary) {
    auto key = std::minmax(f.v[0], f.v[1]);
    EXPECT_EQ((count[std::pair<int, int>(key.first, key.second)]), 1);
    const auto& t = m.cells[f.cell];
    EXPECT_TRUE(std::count(t.begin(), t.end(), f.v[0]) == 1 && std::count(t.begin(), t.end(), f.v[1]) == 1);
  }
  // No vertex lies in the interior of another cell's edge (hanging node).
  for (const auto& [e, n] : count) {
    if (n != 1) continue;
    const Vec2 a = m.vertices[e.first], b = m.vertices[e.second];
    const Vec2 mid = 0.5 * (a + b);
    const bool on_box = std::abs(mid.x() - 0.0) < 1e-12 || std::abs(mid.y() - 0.0) < 1e-12 ||
                        std::abs(mid.x() - 2.2) < 1e-12 || std::abs(mid.y() - 0.41) < 1e-12;
    EXPECT_TRUE(on_box) << "interior edge with a single cell at " << mid.transpose();
  }
}

double min_angle_deg(const Mesh& m) {
  double best = 180.0;
  for (const auto& t : m.cells)
    for (int k = 0; k < 3; ++k) {
      const Vec2 a = m.vertices[t[k]], b = m.vertices[t[(k + 1) % 3]], c = m.vertices[t[(k + 2) % 3]];
      const double cosang = (b - a).dot(c - a) / ((b - a).norm() * (c - a).norm());
      best = std::min(best, std::acos(std::clamp(cosang, -1.0, 1.0)) * 180.0 / std::numbers::pi);
    }
  return best;
}

GradedMeshSpec coarse_cylinder() {
  GradedMeshSpec s;
  s.hole = ShapeSpec{CircleSpec{Vec2(0.2, 0.2), 0.05}};
  s.h_min = 0.01;
  s.h_max = 0.04;
  s.grow_start = 0.175;
  s.grow_end = 0.7;
  return s;
}

}  // namespace

TEST(Mesh, UniformBoxCounts) {
  const Mesh m = uniform_box(Vec2(0, 0), Vec2(1, 1), 2, 2);
  EXPECT_EQ(m.num_vertices(), 9);
  EXPECT_EQ(m.num_cells(), 8);
  EXPECT_NEAR(total_area(m), 1.0, 1e-12);
  for (int c = 0; c < m.num_cells(); ++c) EXPECT_GT(m.cell_measure(c), 0.0);
  const Mesh r = refine_uniform(m);
  EXPECT_EQ(r.num_cells(), 32);
  for (int c = 0; c < r.num_cells(); ++c) EXPECT_NEAR(r.cell_measure(c), m.cell_measure(c / 4) / 4.0, 1e-15);
  EXPECT_NEAR(total_area(r), 1.0, 1e-12);
  EXPECT_NEAR(r.h, m.h / 2.0, 1e-12);
}

TEST(Mesh, UniformBoxMarkersPartitionBoundary) {
  const Mesh m = uniform_box(Vec2(-1, -2), Vec2(3, 1), 5, 4);
  std::map<int, int> per_marker;
  double len = 0.0;
  for (const auto& f : m.boundary) {
    ++per_marker[f.marker];
    len += (m.vertices[f.v[0]] - m.vertices[f.v[1]]).norm();
  }
  EXPECT_EQ(per_marker[marker::left], 4);
  EXPECT_EQ(per_marker[marker::right], 4);
  EXPECT_EQ(per_marker[marker::bottom], 5);
  EXPECT_EQ(per_marker[marker::top], 5);
  EXPECT_NEAR(len, 14.0, 1e-12);
  EXPECT_NEAR(total_area(m), 12.0, 1e-12);
}

TEST(Mesh, IntervalMeshNodes) {
  const Mesh m = interval_mesh(-0.675, 0.675, 0.01);
  EXPECT_EQ(m.dim, 1);
  EXPECT_EQ(m.num_vertices(), 136);
  EXPECT_EQ(m.num_cells(), 135);
  EXPECT_NEAR(m.vertices[16].x(), -0.515, 1e-12);
  EXPECT_NEAR(m.vertices[119].x(), 0.515, 1e-12);
  EXPECT_NEAR(total_area(m), 1.35, 1e-12);
  EXPECT_THROW(interval_mesh(0.0, 1.0, 0.3), std::invalid_argument);
}

TEST(Mesh, GradedTargetSize) {
  GradedMeshSpec s;
  EXPECT_EQ(graded_target_size(s, 0.0), s.h_min);
  EXPECT_EQ(graded_target_size(s, s.grow_start), s.h_min);
  EXPECT_EQ(graded_target_size(s, 1.0), s.h_max);
  EXPECT_NEAR(graded_target_size(s, 0.5 * (s.grow_start + s.grow_end)), 0.5 * (s.h_min + s.h_max), 1e-15);
}

TEST(Mesh, GradedMeshConformingAndSized) {
  const GradedMeshSpec s = coarse_cylinder();
  const Mesh m = graded_mesh(s);
  expect_conforming(m);
  EXPECT_NEAR(total_area(m), 2.2 * 0.41, 1e-10 * 2.2 * 0.41);
  EXPECT_GE(min_angle_deg(m), 20.0);
  const Circle hole(Vec2(0.2, 0.2), 0.05);
  std::vector<double> near, far;
  for (int c = 0; c < m.num_cells(); ++c) {
    const double d = std::abs(hole.distance(m.centroid(c)));
    if (d <= s.grow_start) near.push_back(m.cell_diameter(c));
    if (d >= s.grow_end) far.push_back(m.cell_diameter(c));
  }
  auto median = [](std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
  };
  EXPECT_LE(median(near), 1.3 * s.h_min);
  EXPECT_GE(median(far), 0.7 * s.h_max);
  std::map<int, int> per_marker;
  for (const auto& f : m.boundary) ++per_marker[f.marker];
  EXPECT_EQ(per_marker.size(), 4u);
  int total = 0;
  for (const auto& [k, n] : per_marker) total += n;
  EXPECT_EQ(total, static_cast<int>(m.boundary.size()));
}

TEST(Mesh, GradedMeshUniformLimits) {
  GradedMeshSpec s = coarse_cylinder();
  s.h_min = s.h_max = 0.04;
  const Mesh a = graded_mesh(s);
  GradedMeshSpec t = coarse_cylinder();
  t.h_min = 0.04;
  t.grow_start = std::numeric_limits<double>::infinity();
  t.grow_end = std::numeric_limits<double>::infinity();
  EXPECT_THROW(graded_mesh(t), std::invalid_argument);  // grow_start < grow_end required
  t.grow_end = t.grow_start;
  for (const Mesh* m : {&a}) {
    double lo = 1e300, hi = 0.0;
    for (int c = 0; c < m->num_cells(); ++c) {
      lo = std::min(lo, m->cell_diameter(c));
      hi = std::max(hi, m->cell_diameter(c));
    }
    EXPECT_NEAR(lo, hi, 1e-12);
  }
}

TEST(Mesh, GradedMeshRejectsBadSpec) {
  GradedMeshSpec s = coarse_cylinder();
  s.h_min = 0.05;
  s.h_max = 0.01;
  EXPECT_THROW(graded_mesh(s), std::invalid_argument);
}

TEST(Mesh, VtkOutput) {
  const Mesh m = uniform_box(Vec2(0, 0), Vec2(1, 1), 2, 2);
  const auto path = std::filesystem::temp_directory_path() / "ddfem_mesh_test.vtk";
  write_vtk(path.string(), m, {{"x", std::vector<double>(m.num_vertices(), 1.0)}});
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first, "# vtk DataFile Version 3.0");
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_NE(ss.str().find("POINTS 9 double"), std::string::npos);
  EXPECT_NE(ss.str().find("CELLS 8 32"), std::string::npos);
  std::filesystem::remove(path);
}
