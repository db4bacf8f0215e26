#include "ddfem/studies.hpp"
#include "ddfem/system.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace ddfem;

namespace {

FeSystem poisson(int n, bool fitted = true) {
  auto mesh = std::make_shared<const Mesh>(uniform_box(Vec2(0, 0), Vec2(1, 1), n, n));
  auto space = std::make_shared<const FeSpace>(mesh, 1);
  const GeometryCache cache(mesh, nullptr, quadrature_for(2, 1, FormKind::Plain));
  ProblemData data;
  data.f = [](const Vec2&) { return 1.0; };
  FeSystem sys = assemble({MethodId::DDM1, false}, space, cache, coefficients_from(data, nullptr), false);
  if (fitted) apply_constraints(sys, dirichlet(*space, space->boundary_dofs(), [](const Vec2&) { return 0.0; }));
  return sys;
}

SparseMatrix from_dense(const Eigen::MatrixXd& M) { return M.sparseView(); }

// Frozen from this implementation; guards against unintended changes.
constexpr double kDdm1RegressionL2 = 0.25842070268241135;

}  // namespace

TEST(System, ReferenceTriangleStiffness) {
  Mesh m;
  m.dim = 2;
  m.vertices = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
  m.cells = {{0, 1, 2}};
  label_box_boundary(m, Vec2(0, 0), Vec2(1, 1));
  update_mesh_size(m);
  auto mesh = std::make_shared<const Mesh>(m);
  auto space = std::make_shared<const FeSpace>(mesh, 1);
  const GeometryCache cache(mesh, nullptr, quadrature_for(2, 1, FormKind::Plain));
  const FeSystem sys = assemble({MethodId::DDM1, false}, space, cache, coefficients_from(ProblemData{}, nullptr), false);
  Eigen::Matrix3d expected;
  expected << 1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5;
  EXPECT_LT((Eigen::MatrixXd(sys.A) - expected).norm(), 1e-14);
}

TEST(System, DirectSolves) {
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(4, 4);
  Eigen::VectorXd b(4);
  b << 1, 2, 3, 4;
  EXPECT_LT((solve(from_dense(I), b) - b).norm(), 1e-15);
  Eigen::MatrixXd M(2, 2);
  M << 2, 1, 1, 3;
  Eigen::VectorXd r(2);
  r << 3, 5;
  const Eigen::VectorXd x = solve(from_dense(M), r);
  EXPECT_NEAR(x[0], 0.8, 1e-15);
  EXPECT_NEAR(x[1], 1.4, 1e-15);
}

TEST(System, ResidualBound) {
  const FeSystem sys = poisson(16);
  const FeFunction u = solve(sys);
  const double res = (sys.A * u.coeffs - sys.rhs).norm();
  EXPECT_LT(res, 1e-10 * sys.rhs.norm());
}

TEST(System, SingularNeumannPoissonDetected) {
  const FeSystem sys = poisson(6, false);
  EXPECT_THROW(solve(sys.A, sys.rhs), SingularMatrixError);
}

TEST(System, MeanZeroFixesConstantShift) {
  FeSystem sys = poisson(8, false);
  // Compatible load: subtract the mean so the Neumann problem has solutions.
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(sys.rhs.size());
  const GeometryCache cache(sys.space->mesh_ptr(), nullptr, quadrature_for(2, 1, FormKind::Plain));
  const Eigen::VectorXd c = masked_basis_integrals(*sys.space, cache, [](const QuadPointGeom&) { return true; });
  EXPECT_NEAR(c.sum(), 1.0, 1e-14);
  Eigen::VectorXd load = Eigen::VectorXd::Zero(sys.rhs.size());
  for (int i = 0; i < load.size(); ++i) load[i] = c[i] * (sys.space->dof_coords()[i].x() - 0.5);
  load -= c * (load.sum() / c.sum());
  Eigen::VectorXd rhs = load;
  SparseMatrix A = sys.A;
  mean_zero_constraint(A, rhs, c);
  const Eigen::VectorXd x = solve(A, rhs);
  EXPECT_NEAR(c.dot(x.head(c.size())), 0.0, 1e-12);
  // Constants are the kernel, so x + 1 solves the same equations; the
  // constraint singles out x.
  EXPECT_LT((sys.A * ones).norm(), 1e-12);
  const Eigen::VectorXd shifted = x.head(c.size()) + ones;
  EXPECT_LT((sys.A * shifted - load).norm(), 1e-10);
  EXPECT_NEAR(c.dot(shifted), 1.0, 1e-12);
  EXPECT_LT((sys.A * x.head(c.size()) - load).norm(), 1e-10);
}

TEST(System, QuadraticFormAndEigenvalue) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(3, 3);
  M.diagonal() << 3.0, -2.0, 5.0;
  Eigen::VectorXd x(3);
  x << 1.0, 2.0, -1.0;
  EXPECT_DOUBLE_EQ(quadratic_form(from_dense(M), x), 3.0 - 8.0 + 5.0);
  EXPECT_NEAR(sym_min_eig(from_dense(M), {1, 1, 1}), -2.0, 1e-14);
  EXPECT_NEAR(sym_min_eig(from_dense(M), {1, 0, 1}), 3.0, 1e-14);
  // Symmetric part of a nonsymmetric matrix.
  Eigen::MatrixXd N(2, 2);
  N << 1.0, 4.0, 0.0, 1.0;
  EXPECT_NEAR(sym_min_eig(from_dense(N), {1, 1}), -1.0, 1e-14);
  EXPECT_NEAR(asymmetry_ratio(from_dense(N)), 4.0 / 5.0, 1e-15);
}

TEST(System, ConstraintsIdempotent) {
  FeSystem a = poisson(5);
  FeSystem b = a;
  apply_constraints(b, dirichlet(*b.space, b.space->boundary_dofs(), [](const Vec2&) { return 0.0; }));
  EXPECT_EQ((Eigen::MatrixXd(a.A) - Eigen::MatrixXd(b.A)).norm(), 0.0);
  EXPECT_EQ((a.rhs - b.rhs).norm(), 0.0);
  for (int d : a.space->boundary_dofs()) {
    EXPECT_EQ(a.A.coeff(d, d), 1.0);
    EXPECT_EQ(a.A.row(d).sum(), 1.0);
  }
}

TEST(System, AssemblyIsDeterministicAndSymmetric) {
  const StudyLevel level = make_study_level(StudyDomain::Arc, 0.1);
  for (MethodId m : {MethodId::DDM1, MethodId::NSDDM}) {
    const SolveResult a = solve_manufactured(level, {m, false}, 1, false);
    const SolveResult b = solve_manufactured(level, {m, false}, 1, false);
    EXPECT_EQ((a.uh.coeffs - b.uh.coeffs).norm(), 0.0);
    EXPECT_EQ((Eigen::MatrixXd(a.system.A) - Eigen::MatrixXd(b.system.A)).norm(), 0.0);
    // Unconstrained diffusion operator.
    const FeSystem raw = assemble({m, false}, a.uh.space, *a.cache, a.coeffs, false);
    EXPECT_LE(asymmetry_ratio(raw.A), 1e-12) << method_name(m);
  }
}

TEST(System, DumpFormat) {
  Eigen::MatrixXd M(2, 2);
  M << 1.5, 0.0, -2.0, 4.0;
  const auto dir = std::filesystem::temp_directory_path();
  const auto p = (dir / "ddfem_dump.mtx").string();
  dump_matrix(p, from_dense(M));
  std::ifstream in(p);
  int n, m, nnz;
  in >> n >> m >> nnz;
  EXPECT_EQ(n, 2);
  EXPECT_EQ(m, 2);
  EXPECT_EQ(nnz, 3);
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(2, 2);
  for (int k = 0; k < nnz; ++k) {
    int i, j;
    double v;
    in >> i >> j >> v;
    R(i, j) = v;
  }
  EXPECT_EQ((R - M).norm(), 0.0);
  std::filesystem::remove(p);
}

TEST(System, Ddm1RegressionValue) {
  // Frozen from this implementation: arc, h = 0.1, P1, diffusion only.
  const StudyLevel level = make_study_level(StudyDomain::Arc, 0.1);
  const SolveResult r = solve_manufactured(level, {MethodId::DDM1, false}, 1, false);
  const MaskedNorms e = masked_error(r.uh, *r.cache, {manufactured::u, manufactured::grad_u}, MethodId::DDM1, r.coeffs);
  EXPECT_NEAR(e.eL2, kDdm1RegressionL2, 1e-10);
}

TEST(System, NaiveAdvectionExampleRoot) {
  const NaiveAdvectionExample ex = naive_advection_example(MethodId::DDM1, true, 2);
  EXPECT_NEAR(ex.x16, -0.515, 1e-12);
  EXPECT_NEAR(ex.x119, 0.515, 1e-12);
  ASSERT_TRUE(ex.root.has_value());
  EXPECT_NEAR(*ex.root, 0.657218, 1e-6);
  // Independent check of the quadratic: evaluate x^T A x at the root.
  Eigen::VectorXd x = Eigen::VectorXd::Zero(ex.A.rows());
  x[16] = 1.0;
  x[119] = *ex.root;
  EXPECT_NEAR(quadratic_form(ex.A, x), 0.0, 1e-9 * std::abs(ex.a));
  EXPECT_LE(ex.min_eig, 0.0);
}
