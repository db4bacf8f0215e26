#include "ddfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <unordered_map>

namespace ddfem {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

double triangle_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

double circumdiameter(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double la = (b - c).norm();
  const double lb = (c - a).norm();
  const double lc = (a - b).norm();
  const double area = std::abs(triangle_area(a, b, c));
  return la * lb * lc / (2.0 * area);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

}  // namespace

// ---------------------------------------------------------------- Mesh

double Mesh::cell_measure(int c) const {
  const auto& t = cells[c];
  if (dim == 1) return std::abs(vertices[t[1]].x() - vertices[t[0]].x());
  return triangle_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
}

double Mesh::cell_diameter(int c) const {
  const auto& t = cells[c];
  if (dim == 1) return std::abs(vertices[t[1]].x() - vertices[t[0]].x());
  return circumdiameter(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
}

double Mesh::total_measure() const {
  double s = 0.0;
  for (int c = 0; c < num_cells(); ++c) s += cell_measure(c);
  return s;
}

Vec2 Mesh::centroid(int c) const {
  const auto& t = cells[c];
  if (dim == 1) return 0.5 * (vertices[t[0]] + vertices[t[1]]);
  return (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0;
}

void update_mesh_size(Mesh& mesh) {
  double h = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) h = std::max(h, mesh.cell_diameter(c));
  mesh.h = h;
}

void label_box_boundary(Mesh& mesh, const Vec2& lo, const Vec2& hi) {
  mesh.boundary.clear();
  const double tol = 1e-9 * (hi - lo).norm();
  auto side = [&](const Vec2& p) {
    if (std::abs(p.x() - lo.x()) <= tol) return marker::left;
    if (std::abs(p.x() - hi.x()) <= tol) return marker::right;
    if (std::abs(p.y() - lo.y()) <= tol) return marker::bottom;
    if (std::abs(p.y() - hi.y()) <= tol) return marker::top;
    return 0;
  };
  if (mesh.dim == 1) {
    int first = 0;
    int last = 0;
    for (int i = 0; i < mesh.num_vertices(); ++i) {
      if (mesh.vertices[i].x() < mesh.vertices[first].x()) first = i;
      if (mesh.vertices[i].x() > mesh.vertices[last].x()) last = i;
    }
    for (int c = 0; c < mesh.num_cells(); ++c) {
      for (int k = 0; k < 2; ++k) {
        const int v = mesh.cells[c][k];
        if (v == first) mesh.boundary.push_back({{v, -1}, c, marker::left});
        if (v == last) mesh.boundary.push_back({{v, -1}, c, marker::right});
      }
    }
    return;
  }
  std::unordered_map<std::uint64_t, std::pair<int, int>> count;
  count.reserve(mesh.cells.size() * 3);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& t = mesh.cells[c];
    for (int k = 0; k < 3; ++k) {
      auto& e = count[edge_key(t[k], t[(k + 1) % 3])];
      ++e.first;
      e.second = c;
    }
  }
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& t = mesh.cells[c];
    for (int k = 0; k < 3; ++k) {
      const int a = t[k];
      const int b = t[(k + 1) % 3];
      if (count[edge_key(a, b)].first != 1) continue;
      const Vec2 mid = 0.5 * (mesh.vertices[a] + mesh.vertices[b]);
      mesh.boundary.push_back({{a, b}, c, side(mid)});
    }
  }
}

// ---------------------------------------------------------------- generators

Mesh uniform_box(const Vec2& lo, const Vec2& hi, int nx, int ny) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("uniform_box needs n >= 1");
  Mesh mesh;
  mesh.dim = 2;
  mesh.vertices.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      mesh.vertices.emplace_back(lo.x() + (hi.x() - lo.x()) * i / nx, lo.y() + (hi.y() - lo.y()) * j / ny);
    }
  }
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  mesh.cells.reserve(static_cast<std::size_t>(2) * nx * ny);
  // Each triangle is stored with its right-angle vertex first, so the
  // opposite edge is the diagonal (used as the bisection edge).
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int p00 = id(i, j), p10 = id(i + 1, j), p01 = id(i, j + 1), p11 = id(i + 1, j + 1);
      if ((i + j) % 2 == 0) {
        mesh.cells.push_back({p10, p11, p00});
        mesh.cells.push_back({p01, p00, p11});
      } else {
        mesh.cells.push_back({p00, p10, p01});
        mesh.cells.push_back({p11, p01, p10});
      }
    }
  }
  label_box_boundary(mesh, lo, hi);
  update_mesh_size(mesh);
  return mesh;
}

Mesh uniform_box(const Box& box, int n) { return uniform_box(box.lo(), box.hi(), n, n); }

Mesh interval_mesh(double a, double b, double h) {
  if (!(b > a) || !(h > 0.0)) throw std::invalid_argument("interval_mesh needs b > a and h > 0");
  const double nd = (b - a) / h;
  const int n = static_cast<int>(std::lround(nd));
  if (n < 1 || std::abs(nd - n) > 1e-8 * std::max(1.0, nd))
    throw std::invalid_argument("interval_mesh: h does not divide the interval");
  Mesh mesh;
  mesh.dim = 1;
  for (int i = 0; i <= n; ++i) mesh.vertices.emplace_back(a + i * h, 0.0);
  for (int i = 0; i < n; ++i) mesh.cells.push_back({i, i + 1, -1});
  mesh.boundary.push_back({{0, -1}, 0, marker::left});
  mesh.boundary.push_back({{n, -1}, n - 1, marker::right});
  update_mesh_size(mesh);
  return mesh;
}

Mesh refine_uniform(const Mesh& mesh) {
  Mesh out;
  out.dim = mesh.dim;
  out.vertices = mesh.vertices;
  std::unordered_map<std::uint64_t, int> mid;
  auto midpoint = [&](int a, int b) {
    const auto key = edge_key(a, b);
    auto it = mid.find(key);
    if (it != mid.end()) return it->second;
    const int id = static_cast<int>(out.vertices.size());
    out.vertices.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
    mid.emplace(key, id);
    return id;
  };
  if (mesh.dim == 1) {
    for (const auto& c : mesh.cells) {
      const int m = midpoint(c[0], c[1]);
      out.cells.push_back({c[0], m, -1});
      out.cells.push_back({m, c[1], -1});
    }
    for (const auto& f : mesh.boundary) {
      const int local = mesh.cells[f.cell][0] == f.v[0] ? 0 : 1;
      out.boundary.push_back({f.v, 2 * f.cell + local, f.marker});
    }
    update_mesh_size(out);
    return out;
  }
  std::unordered_map<std::uint64_t, int> owner;
  for (const auto& t : mesh.cells) {
    const int a = t[0], b = t[1], c = t[2];
    const int ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
    const std::array<std::array<int, 3>, 4> kids{{{a, ab, ca}, {ab, b, bc}, {ca, bc, c}, {bc, ca, ab}}};
    for (const auto& k : kids) {
      const int id = static_cast<int>(out.cells.size());
      out.cells.push_back(k);
      for (int e = 0; e < 3; ++e) owner[edge_key(k[e], k[(e + 1) % 3])] = id;
    }
  }
  for (const auto& f : mesh.boundary) {
    const int m = midpoint(f.v[0], f.v[1]);
    out.boundary.push_back({{f.v[0], m}, owner.at(edge_key(f.v[0], m)), f.marker});
    out.boundary.push_back({{m, f.v[1]}, owner.at(edge_key(m, f.v[1])), f.marker});
  }
  update_mesh_size(out);
  return out;
}

// ---------------------------------------------------------------- graded mesh

double graded_target_size(const GradedMeshSpec& spec, double d) {
  if (d <= spec.grow_start) return spec.h_min;
  if (d >= spec.grow_end) return spec.h_max;
  const double s = (d - spec.grow_start) / (spec.grow_end - spec.grow_start);
  return spec.h_min + s * (spec.h_max - spec.h_min);
}

namespace {

// Newest-vertex bisection. Triangle (a, b, c) is refined across edge (b, c).
class Bisector {
 public:
  Bisector(std::vector<Vec2> vertices, const std::vector<std::array<int, 3>>& cells)
      : vertices_(std::move(vertices)) {
    for (const auto& t : cells) add(t);
  }

  int size() const { return static_cast<int>(tris_.size()); }
  bool alive(int t) const { return alive_[t]; }
  const std::array<int, 3>& tri(int t) const { return tris_[t]; }
  const std::vector<Vec2>& vertices() const { return vertices_; }

  void refine(int t) {
    while (alive_[t]) {
      const auto [a, b, c] = tris_[t];
      const int n = neighbour(t, b, c);
      if (n < 0) {
        split(t, midpoint(b, c));
        return;
      }
      const auto& tn = tris_[n];
      if (edge_key(tn[1], tn[2]) == edge_key(b, c)) {
        const int m = midpoint(b, c);
        split(t, m);
        split(n, m);
        return;
      }
      refine(n);
    }
  }

  std::vector<std::array<int, 3>> cells() const {
    std::vector<std::array<int, 3>> out;
    for (int t = 0; t < size(); ++t)
      if (alive_[t]) out.push_back(tris_[t]);
    return out;
  }

 private:
  int add(const std::array<int, 3>& t) {
    const int id = static_cast<int>(tris_.size());
    tris_.push_back(t);
    alive_.push_back(true);
    for (int e = 0; e < 3; ++e) {
      auto& slot = edges_.try_emplace(edge_key(t[e], t[(e + 1) % 3]), std::array<int, 2>{-1, -1}).first->second;
      if (slot[0] < 0) slot[0] = id;
      else slot[1] = id;
    }
    return id;
  }

  void remove(int t) {
    alive_[t] = false;
    const auto& v = tris_[t];
    for (int e = 0; e < 3; ++e) {
      auto it = edges_.find(edge_key(v[e], v[(e + 1) % 3]));
      auto& slot = it->second;
      if (slot[0] == t) slot[0] = slot[1];
      slot[1] = -1;
      if (slot[0] < 0) edges_.erase(it);
    }
  }

  int neighbour(int t, int b, int c) const {
    const auto& slot = edges_.at(edge_key(b, c));
    return slot[0] == t ? slot[1] : slot[0];
  }

  int midpoint(int b, int c) {
    const auto key = edge_key(b, c);
    auto it = mids_.find(key);
    if (it != mids_.end()) return it->second;
    const int id = static_cast<int>(vertices_.size());
    vertices_.push_back(0.5 * (vertices_[b] + vertices_[c]));
    mids_.emplace(key, id);
    return id;
  }

  void split(int t, int m) {
    const auto [a, b, c] = tris_[t];
    remove(t);
    add({m, a, b});
    add({m, c, a});
  }

  std::vector<Vec2> vertices_;
  std::vector<std::array<int, 3>> tris_;
  std::vector<bool> alive_;
  std::unordered_map<std::uint64_t, std::array<int, 2>> edges_;
  std::unordered_map<std::uint64_t, int> mids_;
};

}  // namespace

Mesh graded_mesh(const GradedMeshSpec& spec) {
  if (!(spec.h_min > 0.0 && spec.h_min <= spec.h_max))
    throw std::invalid_argument("graded mesh needs 0 < hMin <= hMax");
  if (!(spec.grow_start < spec.grow_end)) throw std::invalid_argument("graded mesh needs growStart < growEnd");
  const ShapePtr hole = make_shape(spec.hole);
  const Vec2 ext = spec.hi - spec.lo;
  const double leg = spec.h_max / std::sqrt(2.0);
  const int nx = std::max(1, static_cast<int>(std::ceil(ext.x() / leg - 1e-9)));
  const int ny = std::max(1, static_cast<int>(std::ceil(ext.y() / leg - 1e-9)));
  const Mesh base = uniform_box(spec.lo, spec.hi, nx, ny);

  auto target_at = [&](const Vec2& x) {
    if (!std::isfinite(spec.grow_start)) return spec.h_min;
    return graded_target_size(spec, std::abs(hole->distance(x)));
  };

  Bisector bis(base.vertices, base.cells);
  for (int pass = 0; pass < 64; ++pass) {
    std::vector<int> marked;
    for (int t = 0; t < bis.size(); ++t) {
      if (!bis.alive(t)) continue;
      const auto& v = bis.tri(t);
      const auto& P = bis.vertices();
      const Vec2 cen = (P[v[0]] + P[v[1]] + P[v[2]]) / 3.0;
      double target = target_at(cen);
      for (int k = 0; k < 3; ++k) target = std::min(target, target_at(P[v[k]]));
      if (circumdiameter(P[v[0]], P[v[1]], P[v[2]]) > target * (1.0 + 1e-6)) marked.push_back(t);
    }
    if (marked.empty()) break;
    for (int t : marked)
      if (bis.alive(t)) bis.refine(t);
  }

  Mesh mesh;
  mesh.dim = 2;
  mesh.vertices = bis.vertices();
  mesh.cells = bis.cells();
  label_box_boundary(mesh, spec.lo, spec.hi);
  update_mesh_size(mesh);

  std::vector<double> near, far;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const double d = std::abs(hole->distance(mesh.centroid(c)));
    if (d <= spec.grow_start) near.push_back(mesh.cell_diameter(c));
    if (d >= spec.grow_end) far.push_back(mesh.cell_diameter(c));
  }
  if (!near.empty() && median(near) > 1.3 * spec.h_min)
    throw MeshGenerationError("graded mesh: fine region misses hMin (median " + std::to_string(median(near)) + ")");
  if (!far.empty() && median(far) < 0.7 * spec.h_max)
    throw MeshGenerationError("graded mesh: coarse region below hMax (median " + std::to_string(median(far)) + ")");
  return mesh;
}

// ---------------------------------------------------------------- VTK

void write_vtk(const std::string& path, const Mesh& mesh, const PointData& fields) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << std::setprecision(17);
  out << "# vtk DataFile Version 3.0\nddfem\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& v : mesh.vertices) out << v.x() << ' ' << v.y() << " 0\n";
  const int nv = mesh.vertices_per_cell();
  out << "CELLS " << mesh.num_cells() << ' ' << mesh.num_cells() * (nv + 1) << '\n';
  for (const auto& c : mesh.cells) {
    out << nv;
    for (int k = 0; k < nv; ++k) out << ' ' << c[k];
    out << '\n';
  }
  out << "CELL_TYPES " << mesh.num_cells() << '\n';
  for (int c = 0; c < mesh.num_cells(); ++c) out << (mesh.dim == 1 ? 3 : 5) << '\n';
  if (fields.empty()) return;
  out << "POINT_DATA " << mesh.num_vertices() << '\n';
  for (const auto& [name, values] : fields) {
    if (static_cast<int>(values.size()) < mesh.num_vertices())
      throw std::invalid_argument("vtk field " + name + " is shorter than the vertex count");
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < mesh.num_vertices(); ++i) out << values[i] << '\n';
  }
}

}  // namespace ddfem
