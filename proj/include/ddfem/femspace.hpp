#pragma once

#include "ddfem/mesh.hpp"
#include "ddfem/phasefield.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <span>

namespace ddfem {

struct QuadratureRule {
  int dim = 2;
  int exactness = 0;
  std::vector<Vec2> points;  // reference coordinates
  std::vector<double> weights;

  int size() const { return static_cast<int>(points.size()); }
};

/// Gauss-Legendre rule with n points on [0, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Rules on the reference interval [0, 1] and triangle {(0,0), (1,0), (0,1)}
/// exact for polynomials of degree <= exactness.
QuadratureRule interval_rule(int exactness);
QuadratureRule triangle_rule(int exactness);

enum class FormKind { Plain, Diffuse };

/// Exactness 2p + 2 for phase-field weighted forms, 2p for plain ones.
QuadratureRule quadrature_for(int dim, int order, FormKind kind);

inline constexpr int kMaxLocalDofs = 6;

/// Lagrange basis on the reference cell. Local ordering: vertices, then edge
/// midpoints (0-1, 1-2, 2-0); for intervals the midpoint comes last.
void reference_basis(int dim, int order, const Vec2& xi, double* values, Vec2* grads);
int local_dof_count(int dim, int order);

/// Affine map x = x0 + J xi. For intervals J = diag(L, 1).
struct CellMap {
  Vec2 x0;
  Eigen::Matrix2d J;
  Eigen::Matrix2d JinvT;
  double det = 0.0;

  Vec2 to_physical(const Vec2& xi) const { return x0 + J * xi; }
  Vec2 to_reference(const Vec2& x) const { return JinvT.transpose() * (x - x0); }
  Vec2 physical_gradient(const Vec2& ref_grad) const { return JinvT * ref_grad; }
};

CellMap cell_map(const Mesh& mesh, int cell);

class PointOutsideMeshError : public std::runtime_error {
 public:
  explicit PointOutsideMeshError(const std::string& what) : std::runtime_error(what) {}
};

/// Background-grid point location.
class PointLocator {
 public:
  explicit PointLocator(const Mesh& mesh);
  /// Cell containing x and the reference coordinates, or nullopt.
  std::optional<std::pair<int, Vec2>> locate(const Vec2& x) const;

 private:
  const Mesh* mesh_;
  Vec2 lo_, hi_;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> bins_;
  std::vector<CellMap> maps_;
};

/// Continuous Lagrange space of order 1 or 2 with 1 or 2 components.
/// Scalar DOFs: vertices first, then edge midpoints. Component c of scalar
/// DOF i has global index c * num_scalar_dofs() + i.
class FeSpace {
 public:
  FeSpace(std::shared_ptr<const Mesh> mesh, int order, int components = 1);

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  int order() const { return order_; }
  int components() const { return components_; }
  int dim() const { return mesh_->dim; }
  int num_scalar_dofs() const { return static_cast<int>(dof_coords_.size()); }
  int num_dofs() const { return components_ * num_scalar_dofs(); }
  int dofs_per_cell() const { return per_cell_; }

  std::span<const int> cell_dofs(int cell) const {
    return {cell_dofs_.data() + static_cast<std::ptrdiff_t>(cell) * per_cell_, static_cast<std::size_t>(per_cell_)};
  }
  const std::vector<Vec2>& dof_coords() const { return dof_coords_; }

  /// Scalar DOFs on boundary facets carrying one of the given markers.
  std::vector<int> boundary_dofs(const std::vector<int>& markers) const;
  /// Scalar DOFs on all boundary facets.
  std::vector<int> boundary_dofs() const;

  const PointLocator& locator() const { return *locator_; }

 private:
  std::shared_ptr<const Mesh> mesh_;
  int order_;
  int components_;
  int per_cell_;
  std::vector<int> cell_dofs_;
  std::vector<Vec2> dof_coords_;
  std::vector<std::array<int, 3>> facet_dofs_;  // per boundary facet, -1 padded
  std::unique_ptr<PointLocator> locator_;
};

using FeSpacePtr = std::shared_ptr<const FeSpace>;

struct FeFunction {
  FeSpacePtr space;
  Eigen::VectorXd coeffs;

  FeFunction() = default;
  explicit FeFunction(FeSpacePtr s) : space(std::move(s)), coeffs(Eigen::VectorXd::Zero(space->num_dofs())) {}
  FeFunction(FeSpacePtr s, Eigen::VectorXd c) : space(std::move(s)), coeffs(std::move(c)) {}

  /// Point evaluation; throws PointOutsideMeshError.
  double value(const Vec2& x, int component = 0) const;
  Vec2 gradient(const Vec2& x, int component = 0) const;

  double value_in_cell(int cell, const Vec2& xi, int component = 0) const;
  Vec2 gradient_in_cell(int cell, const Vec2& xi, int component = 0) const;

  /// Vertex values of one component (for VTK output).
  std::vector<double> vertex_values(int component = 0) const;
};

FeFunction interpolate(const FeSpacePtr& space, const ScalarFn& fn);
FeFunction interpolate(const FeSpacePtr& space, const VectorFn& fn);

}  // namespace ddfem
