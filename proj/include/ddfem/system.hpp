#pragma once

#include "ddfem/femspace.hpp"
#include "ddfem/formulations.hpp"
#include "ddfem/phasefield.hpp"

#include <Eigen/Sparse>

#include <memory>
#include <string>
#include <vector>

namespace ddfem {

using SparseMatrix = Eigen::SparseMatrix<double>;  // column-compressed
using Triplets = std::vector<Eigen::Triplet<double>>;

// Phase-field data at one quadrature point.
struct QuadPointGeom {
  Vec2 x;
  double w = 0.0;  // quadrature weight times |det J|
  double r = -1.0;
  double phi = 1.0;
  double omphi = 0.0;
  Vec2 grad_phi = Vec2::Zero();
  Vec2 cp = Vec2::Zero();  // closest boundary point
};

/// Quadrature points of every cell with the phase field evaluated once.
/// Without a phase field the geometry is fitted: phi = 1 everywhere.
class GeometryCache {
 public:
  GeometryCache(std::shared_ptr<const Mesh> mesh, std::shared_ptr<const PhaseField> pf, QuadratureRule rule);

  const Mesh& mesh() const { return *mesh_; }
  const QuadratureRule& rule() const { return rule_; }
  const PhaseField* phase_field() const { return pf_.get(); }
  int points_per_cell() const { return rule_.size(); }
  const QuadPointGeom& at(int cell, int q) const { return pts_[static_cast<std::size_t>(cell) * rule_.size() + q]; }
  const CellMap& map(int cell) const { return maps_[cell]; }

 private:
  std::shared_ptr<const Mesh> mesh_;
  std::shared_ptr<const PhaseField> pf_;
  QuadratureRule rule_;
  std::vector<QuadPointGeom> pts_;
  std::vector<CellMap> maps_;
};

/// Reference basis values and gradients at the points of a rule.
class BasisTable {
 public:
  BasisTable(int dim, int order, const QuadratureRule& rule);
  int n() const { return n_; }
  double value(int q, int k) const { return values_[static_cast<std::size_t>(q) * n_ + k]; }
  const Vec2& ref_grad(int q, int k) const { return grads_[static_cast<std::size_t>(q) * n_ + k]; }

 private:
  int n_;
  std::vector<double> values_;
  std::vector<Vec2> grads_;
};

// Per-cell evaluation context passed to assembly kernels.
struct PointBasis {
  const double* N;
  const Vec2* dN;  // physical gradients
  int n;
};

/// Assembles sum_cells sum_q w k(cell, q, geom, i, j, basis) over the scalar
/// DOFs of `space` (test index i, trial index j). Fixed loop order makes the
/// result bit-reproducible.
template <class Kernel>
SparseMatrix assemble_matrix(const FeSpace& space, const GeometryCache& cache, const BasisTable& table,
                             Kernel&& kernel) {
  const int n = table.n();
  const int nq = cache.points_per_cell();
  const int ncell = space.mesh().num_cells();
  Triplets trip;
  trip.reserve(static_cast<std::size_t>(ncell) * n * n);
  std::vector<double> Ke(static_cast<std::size_t>(n) * n);
  double N[kMaxLocalDofs];
  Vec2 dN[kMaxLocalDofs];
  for (int c = 0; c < ncell; ++c) {
    std::fill(Ke.begin(), Ke.end(), 0.0);
    const CellMap& cm = cache.map(c);
    for (int q = 0; q < nq; ++q) {
      const QuadPointGeom& g = cache.at(c, q);
      for (int k = 0; k < n; ++k) {
        N[k] = table.value(q, k);
        dN[k] = cm.physical_gradient(table.ref_grad(q, k));
      }
      const PointBasis basis{N, dN, n};
      kernel.begin_point(c, q, g, basis);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) Ke[static_cast<std::size_t>(i) * n + j] += g.w * kernel(i, j);
    }
    const auto dofs = space.cell_dofs(c);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) trip.emplace_back(dofs[i], dofs[j], Ke[static_cast<std::size_t>(i) * n + j]);
  }
  SparseMatrix A(space.num_scalar_dofs(), space.num_scalar_dofs());
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  return A;
}

/// Vector counterpart: kernel.begin_point as above, kernel.rhs(i) per test index.
template <class Kernel>
Eigen::VectorXd assemble_vector(const FeSpace& space, const GeometryCache& cache, const BasisTable& table,
                                Kernel&& kernel) {
  const int n = table.n();
  const int nq = cache.points_per_cell();
  Eigen::VectorXd F = Eigen::VectorXd::Zero(space.num_scalar_dofs());
  double N[kMaxLocalDofs];
  Vec2 dN[kMaxLocalDofs];
  double Fe[kMaxLocalDofs];
  for (int c = 0; c < space.mesh().num_cells(); ++c) {
    std::fill(Fe, Fe + n, 0.0);
    const CellMap& cm = cache.map(c);
    for (int q = 0; q < nq; ++q) {
      const QuadPointGeom& g = cache.at(c, q);
      for (int k = 0; k < n; ++k) {
        N[k] = table.value(q, k);
        dN[k] = cm.physical_gradient(table.ref_grad(q, k));
      }
      const PointBasis basis{N, dN, n};
      kernel.begin_point(c, q, g, basis);
      for (int i = 0; i < n; ++i) Fe[i] += g.w * kernel.rhs(i);
    }
    const auto dofs = space.cell_dofs(c);
    for (int i = 0; i < n; ++i) F[dofs[i]] += Fe[i];
  }
  return F;
}

// Problem coefficients at one quadrature point, already extended.
struct PointCoefficients {
  double D = 1.0;
  Vec2 b = Vec2::Zero();
  double m = 0.0;
  double f_bar = 0.0;
  double g_bar = 0.0;
  Vec2 grad_g_bar = Vec2::Zero();
};

using CoefficientFn = std::function<void(int cell, int q, const QuadPointGeom& geom, PointCoefficients& out)>;

/// Problem data as plain callables (pre-extension).
struct ProblemData {
  ScalarFn D = [](const Vec2&) { return 1.0; };
  VectorFn b;  // empty: no advection
  ScalarFn m;  // empty: zero
  ScalarFn f = [](const Vec2&) { return 0.0; };
  ScalarFn g = [](const Vec2&) { return 0.0; };
  VectorFn grad_g;  // gradient of the extension g_bar; empty: finite differences
};

/// Coefficient provider for ProblemData: g_bar = g(cp), f_bar = f inside and
/// f(cp) outside, grad g_bar analytic or by central differences (step eps 1e-4).
CoefficientFn coefficients_from(const ProblemData& data, const PhaseField* pf, bool need_grad_g = true);

struct FeSystem {
  FeSpacePtr space;
  SparseMatrix A;
  Eigen::VectorXd rhs;
  std::vector<char> constrained;  // per DOF
};

/// Assembles a(u, v) and l(v) of the chosen method.
FeSystem assemble(const MethodSpec& method, const FeSpacePtr& space, const GeometryCache& cache,
                  const CoefficientFn& coeffs, bool with_advection);

struct Constraints {
  std::vector<int> dofs;
  std::vector<double> values;
  void add(int dof, double value) {
    dofs.push_back(dof);
    values.push_back(value);
  }
};

/// Replaces constrained rows by identity rows with the prescribed value.
void apply_constraints(FeSystem& sys, const Constraints& c);
void apply_constraints(SparseMatrix& A, Eigen::VectorXd& rhs, const Constraints& c);

/// Dirichlet values for the given scalar DOFs from a callable.
Constraints dirichlet(const FeSpace& space, const std::vector<int>& dofs, const ScalarFn& value);

class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(const std::string& what, int pivot) : std::runtime_error(what), pivot_(pivot) {}
  int pivot() const { return pivot_; }

 private:
  int pivot_;
};

/// Sparse LU (UMFPACK) with the symbolic analysis reused while the sparsity
/// pattern is unchanged.
class SparseLU {
 public:
  explicit SparseLU(double rcond_threshold = 1e-13);
  ~SparseLU();
  SparseLU(const SparseLU&) = delete;
  SparseLU& operator=(const SparseLU&) = delete;

  void factorize(const SparseMatrix& A);
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  double rcond() const { return rcond_; }

 private:
  void release_numeric();
  void release_symbolic();

  double threshold_;
  void* symbolic_ = nullptr;
  void* numeric_ = nullptr;
  std::vector<int> Ap_, Ai_;
  std::vector<double> Ax_;
  int n_ = 0;
  double rcond_ = 0.0;
};

Eigen::VectorXd solve(const SparseMatrix& A, const Eigen::VectorXd& b, double rcond_threshold = 1e-13);
FeFunction solve(const FeSystem& sys);

double quadratic_form(const SparseMatrix& A, const Eigen::VectorXd& x);

class SizeLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Smallest eigenvalue of (A + A^T)/2 restricted to the DOFs with
/// free[i] != 0. Dense up to 5000 DOFs, shift-invert Lanczos beyond that
/// (up to max_dofs).
double sym_min_eig(const SparseMatrix& A, const std::vector<char>& free, int max_dofs = 400000);
double sym_min_eig(const FeSystem& sys, bool interior_only);

/// Appends a Lagrange multiplier row/column enforcing c^T x = 0.
void mean_zero_constraint(SparseMatrix& A, Eigen::VectorXd& rhs, const Eigen::VectorXd& c);
FeSystem mean_zero_constraint(const FeSystem& sys, const Eigen::VectorXd& c);

/// c_i = integral of basis function i over the quadrature points where mask holds.
Eigen::VectorXd masked_basis_integrals(const FeSpace& space, const GeometryCache& cache,
                                       const std::function<bool(const QuadPointGeom&)>& mask);

double asymmetry_ratio(const SparseMatrix& A);  // ||A - A^T||_inf / ||A||_inf
double inf_norm(const SparseMatrix& A);

/// Coordinate text dump: header "n m nnz", then "row col value" lines.
void dump_matrix(const std::string& path, const SparseMatrix& A);
void dump_vector(const std::string& path, const Eigen::VectorXd& v);

}  // namespace ddfem
