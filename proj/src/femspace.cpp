#include "ddfem/femspace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <unordered_map>

namespace ddfem {

// ---------------------------------------------------------------- quadrature

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre needs n >= 1");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    // Map [-1, 1] -> [0, 1].
    nodes[n - 1 - i] = 0.5 * (x + 1.0);
    weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
}

QuadratureRule interval_rule(int exactness) {
  const int n = std::max(1, (exactness + 2) / 2);
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  QuadratureRule rule;
  rule.dim = 1;
  rule.exactness = exactness;
  for (int i = 0; i < n; ++i) {
    rule.points.emplace_back(x[i], 0.0);
    rule.weights.push_back(w[i]);
  }
  return rule;
}

QuadratureRule triangle_rule(int exactness) {
  // Collapsed tensor rule; the Duffy Jacobian (1 - s) raises the degree in s
  // by one.
  const int n = std::max(1, (exactness + 3) / 2);
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  QuadratureRule rule;
  rule.dim = 2;
  rule.exactness = exactness;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      rule.points.emplace_back(x[i], x[j] * (1.0 - x[i]));
      rule.weights.push_back(w[i] * w[j] * (1.0 - x[i]));
    }
  }
  return rule;
}

QuadratureRule quadrature_for(int dim, int order, FormKind kind) {
  const int q = kind == FormKind::Diffuse ? 2 * order + 2 : 2 * order;
  return dim == 1 ? interval_rule(q) : triangle_rule(q);
}

// ---------------------------------------------------------------- basis

int local_dof_count(int dim, int order) {
  if (dim == 1) return order + 1;
  return order == 1 ? 3 : 6;
}

void reference_basis(int dim, int order, const Vec2& xi, double* values, Vec2* grads) {
  const double s = xi.x();
  if (dim == 1) {
    if (order == 1) {
      values[0] = 1.0 - s;
      values[1] = s;
      grads[0] = {-1.0, 0.0};
      grads[1] = {1.0, 0.0};
    } else {
      values[0] = (1.0 - s) * (1.0 - 2.0 * s);
      values[1] = s * (2.0 * s - 1.0);
      values[2] = 4.0 * s * (1.0 - s);
      grads[0] = {4.0 * s - 3.0, 0.0};
      grads[1] = {4.0 * s - 1.0, 0.0};
      grads[2] = {4.0 - 8.0 * s, 0.0};
    }
    return;
  }
  const double l[3] = {1.0 - xi.x() - xi.y(), xi.x(), xi.y()};
  const Vec2 dl[3] = {{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}};
  if (order == 1) {
    for (int i = 0; i < 3; ++i) {
      values[i] = l[i];
      grads[i] = dl[i];
    }
    return;
  }
  for (int i = 0; i < 3; ++i) {
    values[i] = l[i] * (2.0 * l[i] - 1.0);
    grads[i] = (4.0 * l[i] - 1.0) * dl[i];
  }
  for (int e = 0; e < 3; ++e) {
    const int a = e, b = (e + 1) % 3;
    values[3 + e] = 4.0 * l[a] * l[b];
    grads[3 + e] = 4.0 * (l[a] * dl[b] + l[b] * dl[a]);
  }
}

CellMap cell_map(const Mesh& mesh, int cell) {
  const auto& t = mesh.cells[cell];
  CellMap m;
  m.x0 = mesh.vertices[t[0]];
  if (mesh.dim == 1) {
    const double L = mesh.vertices[t[1]].x() - m.x0.x();
    m.J << L, 0.0, 0.0, 1.0;
    m.det = L;
  } else {
    m.J.col(0) = mesh.vertices[t[1]] - m.x0;
    m.J.col(1) = mesh.vertices[t[2]] - m.x0;
    m.det = m.J.determinant();
  }
  if (!(m.det > 0.0)) throw std::runtime_error("singular or inverted cell map at cell " + std::to_string(cell));
  m.JinvT = m.J.inverse().transpose();
  return m;
}

// ---------------------------------------------------------------- locator

PointLocator::PointLocator(const Mesh& mesh) : mesh_(&mesh) {
  lo_ = mesh.vertices.front();
  hi_ = lo_;
  for (const auto& v : mesh.vertices) {
    lo_ = lo_.cwiseMin(v);
    hi_ = hi_.cwiseMax(v);
  }
  const int nc = mesh.num_cells();
  maps_.reserve(nc);
  for (int c = 0; c < nc; ++c) maps_.push_back(cell_map(mesh, c));
  const Vec2 ext = (hi_ - lo_).cwiseMax(1e-300);
  if (mesh.dim == 1) {
    nx_ = std::max(1, nc);
    ny_ = 1;
  } else {
    const double per = std::sqrt(static_cast<double>(nc) / (ext.x() * ext.y()));
    nx_ = std::clamp(static_cast<int>(ext.x() * per), 1, 4096);
    ny_ = std::clamp(static_cast<int>(ext.y() * per), 1, 4096);
  }
  bins_.assign(static_cast<std::size_t>(nx_) * ny_, {});
  auto bin = [&](double v, double lo, double len, int n) {
    return std::clamp(static_cast<int>((v - lo) / len * n), 0, n - 1);
  };
  for (int c = 0; c < nc; ++c) {
    const auto& t = mesh.cells[c];
    Vec2 a = mesh.vertices[t[0]], b = a;
    for (int k = 1; k < mesh.vertices_per_cell(); ++k) {
      a = a.cwiseMin(mesh.vertices[t[k]]);
      b = b.cwiseMax(mesh.vertices[t[k]]);
    }
    const int i0 = bin(a.x(), lo_.x(), ext.x(), nx_), i1 = bin(b.x(), lo_.x(), ext.x(), nx_);
    const int j0 = mesh.dim == 1 ? 0 : bin(a.y(), lo_.y(), ext.y(), ny_);
    const int j1 = mesh.dim == 1 ? 0 : bin(b.y(), lo_.y(), ext.y(), ny_);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) bins_[static_cast<std::size_t>(j) * nx_ + i].push_back(c);
  }
}

std::optional<std::pair<int, Vec2>> PointLocator::locate(const Vec2& x) const {
  constexpr double tol = 1e-10;
  const Vec2 ext = (hi_ - lo_).cwiseMax(1e-300);
  const double slack = 1e-9 * ext.maxCoeff();
  if (x.x() < lo_.x() - slack || x.x() > hi_.x() + slack) return std::nullopt;
  if (mesh_->dim == 2 && (x.y() < lo_.y() - slack || x.y() > hi_.y() + slack)) return std::nullopt;
  const int i = std::clamp(static_cast<int>((x.x() - lo_.x()) / ext.x() * nx_), 0, nx_ - 1);
  const int j = mesh_->dim == 1 ? 0 : std::clamp(static_cast<int>((x.y() - lo_.y()) / ext.y() * ny_), 0, ny_ - 1);
  for (int c : bins_[static_cast<std::size_t>(j) * nx_ + i]) {
    Vec2 xi = maps_[c].to_reference(x);
    if (mesh_->dim == 1) {
      if (xi.x() >= -tol && xi.x() <= 1.0 + tol) return std::make_pair(c, Vec2{std::clamp(xi.x(), 0.0, 1.0), 0.0});
    } else if (xi.x() >= -tol && xi.y() >= -tol && xi.x() + xi.y() <= 1.0 + tol) {
      return std::make_pair(c, xi);
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- space

namespace {
std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}
}  // namespace

FeSpace::FeSpace(std::shared_ptr<const Mesh> mesh, int order, int components)
    : mesh_(std::move(mesh)), order_(order), components_(components) {
  if (!mesh_) throw std::invalid_argument("FeSpace needs a mesh");
  if (order_ != 1 && order_ != 2) throw std::invalid_argument("FeSpace order must be 1 or 2");
  if (components_ != 1 && components_ != 2) throw std::invalid_argument("FeSpace components must be 1 or 2");
  const Mesh& m = *mesh_;
  per_cell_ = local_dof_count(m.dim, order_);
  dof_coords_ = m.vertices;
  cell_dofs_.resize(static_cast<std::size_t>(m.num_cells()) * per_cell_);
  std::unordered_map<std::uint64_t, int> edge_dof;
  for (int c = 0; c < m.num_cells(); ++c) {
    const auto& t = m.cells[c];
    int* d = cell_dofs_.data() + static_cast<std::ptrdiff_t>(c) * per_cell_;
    for (int k = 0; k < m.vertices_per_cell(); ++k) d[k] = t[k];
    if (order_ == 1) continue;
    if (m.dim == 1) {
      d[2] = static_cast<int>(dof_coords_.size());
      dof_coords_.push_back(0.5 * (m.vertices[t[0]] + m.vertices[t[1]]));
      continue;
    }
    for (int e = 0; e < 3; ++e) {
      const int a = t[e], b = t[(e + 1) % 3];
      auto [it, inserted] = edge_dof.try_emplace(edge_key(a, b), static_cast<int>(dof_coords_.size()));
      if (inserted) dof_coords_.push_back(0.5 * (m.vertices[a] + m.vertices[b]));
      d[3 + e] = it->second;
    }
  }
  for (const auto& f : m.boundary) {
    std::array<int, 3> fd{f.v[0], f.v[1], -1};
    if (m.dim == 1) fd[1] = -1;
    if (order_ == 2 && m.dim == 2) fd[2] = edge_dof.at(edge_key(f.v[0], f.v[1]));
    facet_dofs_.push_back(fd);
  }
  locator_ = std::make_unique<PointLocator>(m);
}

std::vector<int> FeSpace::boundary_dofs(const std::vector<int>& markers) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < facet_dofs_.size(); ++i) {
    if (std::find(markers.begin(), markers.end(), mesh_->boundary[i].marker) == markers.end()) continue;
    for (int d : facet_dofs_[i])
      if (d >= 0) out.push_back(d);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> FeSpace::boundary_dofs() const {
  std::vector<int> out;
  for (const auto& fd : facet_dofs_)
    for (int d : fd)
      if (d >= 0) out.push_back(d);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------- functions

double FeFunction::value_in_cell(int cell, const Vec2& xi, int component) const {
  double val[kMaxLocalDofs];
  Vec2 grad[kMaxLocalDofs];
  reference_basis(space->dim(), space->order(), xi, val, grad);
  const auto dofs = space->cell_dofs(cell);
  const int off = component * space->num_scalar_dofs();
  double s = 0.0;
  for (std::size_t k = 0; k < dofs.size(); ++k) s += val[k] * coeffs[off + dofs[k]];
  return s;
}

Vec2 FeFunction::gradient_in_cell(int cell, const Vec2& xi, int component) const {
  double val[kMaxLocalDofs];
  Vec2 grad[kMaxLocalDofs];
  reference_basis(space->dim(), space->order(), xi, val, grad);
  const auto dofs = space->cell_dofs(cell);
  const int off = component * space->num_scalar_dofs();
  Vec2 g = Vec2::Zero();
  for (std::size_t k = 0; k < dofs.size(); ++k) g += coeffs[off + dofs[k]] * grad[k];
  return cell_map(space->mesh(), cell).physical_gradient(g);
}

double FeFunction::value(const Vec2& x, int component) const {
  const auto hit = space->locator().locate(x);
  if (!hit) throw PointOutsideMeshError("point (" + std::to_string(x.x()) + ", " + std::to_string(x.y()) + ") is outside the mesh");
  return value_in_cell(hit->first, hit->second, component);
}

Vec2 FeFunction::gradient(const Vec2& x, int component) const {
  const auto hit = space->locator().locate(x);
  if (!hit) throw PointOutsideMeshError("point (" + std::to_string(x.x()) + ", " + std::to_string(x.y()) + ") is outside the mesh");
  return gradient_in_cell(hit->first, hit->second, component);
}

std::vector<double> FeFunction::vertex_values(int component) const {
  const int nv = space->mesh().num_vertices();
  const int off = component * space->num_scalar_dofs();
  std::vector<double> out(nv);
  for (int i = 0; i < nv; ++i) out[i] = coeffs[off + i];
  return out;
}

FeFunction interpolate(const FeSpacePtr& space, const ScalarFn& fn) {
  FeFunction u(space);
  const int n = space->num_scalar_dofs();
  for (int c = 0; c < space->components(); ++c)
    for (int i = 0; i < n; ++i) u.coeffs[c * n + i] = fn(space->dof_coords()[i]);
  return u;
}

FeFunction interpolate(const FeSpacePtr& space, const VectorFn& fn) {
  if (space->components() != 2) throw std::invalid_argument("vector interpolation needs a two-component space");
  FeFunction u(space);
  const int n = space->num_scalar_dofs();
  for (int i = 0; i < n; ++i) {
    const Vec2 v = fn(space->dof_coords()[i]);
    u.coeffs[i] = v.x();
    u.coeffs[n + i] = v.y();
  }
  return u;
}

}  // namespace ddfem
