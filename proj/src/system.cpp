#include "ddfem/system.hpp"

#include <umfpack.h>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <random>

namespace ddfem {

// ---------------------------------------------------------------- caches

GeometryCache::GeometryCache(std::shared_ptr<const Mesh> mesh, std::shared_ptr<const PhaseField> pf,
                             QuadratureRule rule)
    : mesh_(std::move(mesh)), pf_(std::move(pf)), rule_(std::move(rule)) {
  const int nc = mesh_->num_cells();
  const int nq = rule_.size();
  maps_.reserve(nc);
  pts_.resize(static_cast<std::size_t>(nc) * nq);
  for (int c = 0; c < nc; ++c) {
    maps_.push_back(cell_map(*mesh_, c));
    const CellMap& cm = maps_.back();
    for (int q = 0; q < nq; ++q) {
      QuadPointGeom& g = pts_[static_cast<std::size_t>(c) * nq + q];
      g.x = cm.to_physical(rule_.points[q]);
      g.w = rule_.weights[q] * cm.det;
      if (!pf_) {
        g.cp = g.x;
        continue;
      }
      const Shape& shape = pf_->shape();
      const double eps = pf_->epsilon();
      g.r = shape.distance(g.x);
      g.phi = PhaseField::profile(g.r, eps);
      g.omphi = PhaseField::profile_complement(g.r, eps);
      g.grad_phi = -(6.0 / eps) * g.phi * g.omphi * shape.gradient(g.x);
      g.cp = pf_->project(g.x);
    }
  }
}

BasisTable::BasisTable(int dim, int order, const QuadratureRule& rule) : n_(local_dof_count(dim, order)) {
  values_.resize(static_cast<std::size_t>(rule.size()) * n_);
  grads_.resize(static_cast<std::size_t>(rule.size()) * n_);
  for (int q = 0; q < rule.size(); ++q)
    reference_basis(dim, order, rule.points[q], values_.data() + static_cast<std::ptrdiff_t>(q) * n_,
                    grads_.data() + static_cast<std::ptrdiff_t>(q) * n_);
}

// ---------------------------------------------------------------- coefficients

CoefficientFn coefficients_from(const ProblemData& data, const PhaseField* pf, bool need_grad_g) {
  return [data, pf, need_grad_g](int, int, const QuadPointGeom& g, PointCoefficients& out) {
    out.D = data.D(g.x);
    out.b = data.b ? data.b(g.x) : Vec2::Zero();
    out.m = data.m ? data.m(g.x) : 0.0;
    if (!pf) {
      out.f_bar = data.f(g.x);
      out.g_bar = data.g(g.x);
      out.grad_g_bar = data.grad_g ? data.grad_g(g.x) : Vec2::Zero();
      return;
    }
    out.f_bar = g.r <= 0.0 ? data.f(g.x) : data.f(g.cp);
    out.g_bar = data.g(g.cp);
    if (!need_grad_g) {
      out.grad_g_bar = Vec2::Zero();
    } else if (data.grad_g) {
      out.grad_g_bar = data.grad_g(g.x);
    } else {
      const double h = pf->epsilon() * 1e-4;
      const Vec2 ex{h, 0.0}, ey{0.0, h};
      out.grad_g_bar = {(data.g(pf->project(g.x + ex)) - data.g(pf->project(g.x - ex))) / (2.0 * h),
                        (data.g(pf->project(g.x + ey)) - data.g(pf->project(g.x - ey))) / (2.0 * h)};
    }
  };
}

// ---------------------------------------------------------------- assembly

FeSystem assemble(const MethodSpec& method, const FeSpacePtr& space, const GeometryCache& cache,
                  const CoefficientFn& coeffs, bool with_advection) {
  const BasisTable table(space->dim(), space->order(), cache.rule());
  const int n = table.n();
  const int nq = cache.points_per_cell();
  const int ncell = space->mesh().num_cells();
  const double eps = cache.phase_field() ? cache.phase_field()->epsilon() : 1.0;
  Triplets trip;
  trip.reserve(static_cast<std::size_t>(ncell) * n * n);
  Eigen::VectorXd F = Eigen::VectorXd::Zero(space->num_scalar_dofs());
  std::vector<double> Ke(static_cast<std::size_t>(n) * n);
  double Fe[kMaxLocalDofs];
  Vec2 dN[kMaxLocalDofs];
  PointCoefficients pc;
  IntegrandSample s;
  s.eps = eps;
  for (int c = 0; c < ncell; ++c) {
    std::fill(Ke.begin(), Ke.end(), 0.0);
    std::fill(Fe, Fe + n, 0.0);
    const CellMap& cm = cache.map(c);
    for (int q = 0; q < nq; ++q) {
      const QuadPointGeom& g = cache.at(c, q);
      coeffs(c, q, g, pc);
      s.phi = g.phi;
      s.omphi = g.omphi;
      s.grad_phi = g.grad_phi;
      s.D = pc.D;
      s.b = pc.b;
      s.m = pc.m;
      s.f_bar = pc.f_bar;
      s.g_bar = pc.g_bar;
      s.grad_g_bar = pc.grad_g_bar;
      for (int k = 0; k < n; ++k) dN[k] = cm.physical_gradient(table.ref_grad(q, k));
      for (int i = 0; i < n; ++i) {
        s.v = table.value(q, i);
        s.grad_v = dN[i];
        s.u = 0.0;
        s.grad_u = Vec2::Zero();
        Fe[i] += g.w * method_densities(method, s, with_advection).l;
        for (int j = 0; j < n; ++j) {
          s.u = table.value(q, j);
          s.grad_u = dN[j];
          Ke[static_cast<std::size_t>(i) * n + j] += g.w * method_densities(method, s, with_advection).a;
        }
      }
    }
    const auto dofs = space->cell_dofs(c);
    for (int i = 0; i < n; ++i) {
      F[dofs[i]] += Fe[i];
      for (int j = 0; j < n; ++j) trip.emplace_back(dofs[i], dofs[j], Ke[static_cast<std::size_t>(i) * n + j]);
    }
  }
  FeSystem sys;
  sys.space = space;
  sys.A.resize(space->num_scalar_dofs(), space->num_scalar_dofs());
  sys.A.setFromTriplets(trip.begin(), trip.end());
  sys.A.makeCompressed();
  sys.rhs = std::move(F);
  sys.constrained.assign(space->num_scalar_dofs(), 0);
  return sys;
}

// ---------------------------------------------------------------- constraints

void apply_constraints(SparseMatrix& A, Eigen::VectorXd& rhs, const Constraints& c) {
  std::vector<char> mark(A.rows(), 0);
  for (std::size_t k = 0; k < c.dofs.size(); ++k) {
    mark[c.dofs[k]] = 1;
    rhs[c.dofs[k]] = c.values[k];
  }
  for (int col = 0; col < A.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(A, col); it; ++it) {
      if (mark[it.row()]) it.valueRef() = it.row() == col ? 1.0 : 0.0;
    }
  }
  // Diagonal entries exist for every FE DOF; insert defensively otherwise.
  for (int d : c.dofs)
    if (A.coeff(d, d) != 1.0) A.coeffRef(d, d) = 1.0;
  A.prune([](Eigen::Index, Eigen::Index, const double& v) { return v != 0.0; });
  A.makeCompressed();
}

void apply_constraints(FeSystem& sys, const Constraints& c) {
  apply_constraints(sys.A, sys.rhs, c);
  if (sys.constrained.size() != static_cast<std::size_t>(sys.A.rows())) sys.constrained.assign(sys.A.rows(), 0);
  for (int d : c.dofs) sys.constrained[d] = 1;
}

Constraints dirichlet(const FeSpace& space, const std::vector<int>& dofs, const ScalarFn& value) {
  Constraints c;
  for (int d : dofs) c.add(d, value(space.dof_coords()[d]));
  return c;
}

// ---------------------------------------------------------------- UMFPACK

SparseLU::SparseLU(double rcond_threshold) : threshold_(rcond_threshold) {}

SparseLU::~SparseLU() {
  release_numeric();
  release_symbolic();
}

void SparseLU::release_numeric() {
  if (numeric_) umfpack_di_free_numeric(&numeric_);
  numeric_ = nullptr;
}

void SparseLU::release_symbolic() {
  if (symbolic_) umfpack_di_free_symbolic(&symbolic_);
  symbolic_ = nullptr;
}

void SparseLU::factorize(const SparseMatrix& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("SparseLU needs a square matrix");
  SparseMatrix M = A;
  M.makeCompressed();
  const int n = static_cast<int>(M.rows());
  const int nnz = static_cast<int>(M.nonZeros());
  const bool same_pattern = symbolic_ && n == n_ &&
                            std::equal(Ap_.begin(), Ap_.end(), M.outerIndexPtr()) &&
                            static_cast<int>(Ai_.size()) == nnz &&
                            std::equal(Ai_.begin(), Ai_.end(), M.innerIndexPtr());
  n_ = n;
  Ap_.assign(M.outerIndexPtr(), M.outerIndexPtr() + n + 1);
  Ai_.assign(M.innerIndexPtr(), M.innerIndexPtr() + nnz);
  Ax_.assign(M.valuePtr(), M.valuePtr() + nnz);
  release_numeric();

  double control[UMFPACK_CONTROL];
  double info[UMFPACK_INFO];
  umfpack_di_defaults(control);
  if (!same_pattern) {
    release_symbolic();
    const int st = umfpack_di_symbolic(n, n, Ap_.data(), Ai_.data(), Ax_.data(), &symbolic_, control, info);
    if (st != UMFPACK_OK) throw std::runtime_error("UMFPACK symbolic analysis failed, status " + std::to_string(st));
  }
  const int st = umfpack_di_numeric(Ap_.data(), Ai_.data(), Ax_.data(), symbolic_, &numeric_, control, info);
  rcond_ = info[UMFPACK_RCOND];
  if (st == UMFPACK_WARNING_singular_matrix || !(rcond_ >= threshold_)) {
    int pivot = -1;
    int lnz = 0, unz = 0, nr = 0, nc = 0, nz_udiag = 0;
    if (numeric_ && umfpack_di_get_lunz(&lnz, &unz, &nr, &nc, &nz_udiag, numeric_) == UMFPACK_OK) {
      std::vector<double> udiag(std::min(nr, nc));
      std::vector<int> Q(nc);
      int do_recip = 0;
      if (umfpack_di_get_numeric(nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, Q.data(),
                                 udiag.data(), &do_recip, nullptr, numeric_) == UMFPACK_OK) {
        std::size_t k = 0;
        for (std::size_t i = 1; i < udiag.size(); ++i)
          if (std::abs(udiag[i]) < std::abs(udiag[k])) k = i;
        if (!udiag.empty()) pivot = Q[k];
      }
    }
    release_numeric();
    char buf[96];
    std::snprintf(buf, sizeof buf, "singular matrix (rcond %.3g) near pivot %d", rcond_, pivot);
    throw SingularMatrixError(buf, pivot);
  }
  if (st != UMFPACK_OK) {
    release_numeric();
    throw std::runtime_error("UMFPACK numeric factorization failed, status " + std::to_string(st));
  }
}

Eigen::VectorXd SparseLU::solve(const Eigen::VectorXd& b) const {
  if (!numeric_) throw std::logic_error("SparseLU::solve before factorize");
  if (b.size() != n_) throw std::invalid_argument("SparseLU::solve: size mismatch");
  Eigen::VectorXd x(n_);
  double control[UMFPACK_CONTROL];
  double info[UMFPACK_INFO];
  umfpack_di_defaults(control);
  const int st =
      umfpack_di_solve(UMFPACK_A, Ap_.data(), Ai_.data(), Ax_.data(), x.data(), b.data(), numeric_, control, info);
  if (st != UMFPACK_OK) throw std::runtime_error("UMFPACK solve failed, status " + std::to_string(st));
  return x;
}

Eigen::VectorXd solve(const SparseMatrix& A, const Eigen::VectorXd& b, double rcond_threshold) {
  SparseLU lu(rcond_threshold);
  lu.factorize(A);
  return lu.solve(b);
}

FeFunction solve(const FeSystem& sys) { return FeFunction(sys.space, solve(sys.A, sys.rhs)); }

double quadratic_form(const SparseMatrix& A, const Eigen::VectorXd& x) {
  if (x.size() != A.cols()) throw std::invalid_argument("quadratic_form: size mismatch");
  return x.dot(A * x);
}

// ---------------------------------------------------------------- eigenvalues

namespace {

SparseMatrix symmetric_free_block(const SparseMatrix& A, const std::vector<char>& free, int& m) {
  std::vector<int> index(A.rows(), -1);
  m = 0;
  for (int i = 0; i < A.rows(); ++i)
    if (free[i]) index[i] = m++;
  Triplets trip;
  for (int col = 0; col < A.outerSize(); ++col) {
    if (index[col] < 0) continue;
    for (SparseMatrix::InnerIterator it(A, col); it; ++it) {
      const int r = index[it.row()];
      if (r < 0) continue;
      trip.emplace_back(r, index[col], 0.5 * it.value());
      trip.emplace_back(index[col], r, 0.5 * it.value());
    }
  }
  SparseMatrix S(m, m);
  S.setFromTriplets(trip.begin(), trip.end());
  S.makeCompressed();
  return S;
}

double gershgorin_lower(const SparseMatrix& S) {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(S.rows());
  Eigen::VectorXd off = Eigen::VectorXd::Zero(S.rows());
  for (int col = 0; col < S.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(S, col); it; ++it) {
      if (it.row() == col) diag[col] += it.value();
      else off[it.row()] += std::abs(it.value());
    }
  return (diag - off).minCoeff();
}

SparseMatrix shifted(const SparseMatrix& S, double sigma) {
  SparseMatrix I(S.rows(), S.cols());
  I.setIdentity();
  SparseMatrix out = S - sigma * I;
  out.makeCompressed();
  return out;
}

// Eigenvalues of S below sigma, or -1 when the factorization breaks down.
int negative_count(const SparseMatrix& S, double sigma) {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted(S, sigma));
  if (ldlt.info() != Eigen::Success) return -1;
  const Eigen::VectorXd d = ldlt.vectorD();
  if ((d.array() == 0.0).any()) return -1;
  return static_cast<int>((d.array() < 0.0).count());
}

// Largest eigenvalue of (S - sigma I)^{-1} by Lanczos with full
// reorthogonalisation; sigma must lie below the spectrum.
double shift_invert_lanczos(const SparseMatrix& S, double sigma, double tol) {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted(S, sigma));
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("sym_min_eig: shifted factorization failed");
  const int n = static_cast<int>(S.rows());
  const int max_it = std::min(n, 400);
  Eigen::MatrixXd Q(n, max_it + 1);
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> nd;
  Eigen::VectorXd q(n);
  for (int i = 0; i < n; ++i) q[i] = nd(rng);
  q.normalize();
  Q.col(0) = q;
  std::vector<double> alpha, beta;
  double theta = 0.0;
  for (int k = 0; k < max_it; ++k) {
    Eigen::VectorXd w = ldlt.solve(Q.col(k));
    const double a = Q.col(k).dot(w);
    alpha.push_back(a);
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd h = Q.leftCols(k + 1).transpose() * w;
      w -= Q.leftCols(k + 1) * h;
    }
    const double b = w.norm();
    const int m = k + 1;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    theta = es.eigenvalues()[m - 1];
    const double resid = std::abs(b * es.eigenvectors()(m - 1, m - 1));
    if (resid <= tol * std::abs(theta) || b < 1e-300 || m == n) break;
    beta.push_back(b);
    Q.col(k + 1) = w / b;
  }
  return sigma + 1.0 / theta;
}

}  // namespace

double sym_min_eig(const SparseMatrix& A, const std::vector<char>& free, int max_dofs) {
  if (A.rows() != A.cols() || free.size() != static_cast<std::size_t>(A.rows()))
    throw std::invalid_argument("sym_min_eig: size mismatch");
  int m = 0;
  const SparseMatrix S = symmetric_free_block(A, free, m);
  if (m == 0) throw std::invalid_argument("sym_min_eig: no free DOFs");
  if (m > max_dofs) throw SizeLimitError("sym_min_eig: " + std::to_string(m) + " DOFs exceed the limit");
  if (m <= 5000) {
    const Eigen::MatrixXd dense(S);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }
  constexpr double tol = 1e-8;
  if (negative_count(S, 0.0) == 0) return shift_invert_lanczos(S, 0.0, tol);
  // Indefinite or singular: bracket the smallest eigenvalue by inertia,
  // then shift just below the bracket.
  double lo = gershgorin_lower(S);
  lo -= 1e-6 * std::max(1.0, std::abs(lo));
  double hi = 0.0;
  for (int it = 0; it < 60 && hi - lo > 1e-3 * std::max(std::abs(lo), std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const int cnt = negative_count(S, mid);
    if (cnt == 0) lo = mid;
    else hi = mid;
  }
  return shift_invert_lanczos(S, lo - (hi - lo), tol);
}

double sym_min_eig(const FeSystem& sys, bool interior_only) {
  std::vector<char> free(sys.A.rows(), 1);
  if (interior_only)
    for (std::size_t i = 0; i < sys.constrained.size(); ++i)
      if (sys.constrained[i]) free[i] = 0;
  return sym_min_eig(sys.A, free);
}

// ---------------------------------------------------------------- mean value

void mean_zero_constraint(SparseMatrix& A, Eigen::VectorXd& rhs, const Eigen::VectorXd& c) {
  const int n = static_cast<int>(A.rows());
  if (c.size() != n) throw std::invalid_argument("mean_zero_constraint: size mismatch");
  Triplets trip;
  trip.reserve(A.nonZeros() + 2 * n);
  for (int col = 0; col < A.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(A, col); it; ++it) trip.emplace_back(it.row(), col, it.value());
  for (int i = 0; i < n; ++i) {
    if (c[i] == 0.0) continue;
    trip.emplace_back(n, i, c[i]);
    trip.emplace_back(i, n, c[i]);
  }
  SparseMatrix B(n + 1, n + 1);
  B.setFromTriplets(trip.begin(), trip.end());
  B.makeCompressed();
  A = std::move(B);
  Eigen::VectorXd r(n + 1);
  r.head(n) = rhs;
  r[n] = 0.0;
  rhs = std::move(r);
}

FeSystem mean_zero_constraint(const FeSystem& sys, const Eigen::VectorXd& c) {
  FeSystem out = sys;
  mean_zero_constraint(out.A, out.rhs, c);
  out.constrained.push_back(0);
  return out;
}

Eigen::VectorXd masked_basis_integrals(const FeSpace& space, const GeometryCache& cache,
                                       const std::function<bool(const QuadPointGeom&)>& mask) {
  struct Kernel {
    const std::function<bool(const QuadPointGeom&)>& mask;
    bool on = false;
    PointBasis basis{};
    void begin_point(int, int, const QuadPointGeom& g, const PointBasis& b) {
      on = mask(g);
      basis = b;
    }
    double rhs(int i) const { return on ? basis.N[i] : 0.0; }
  };
  const BasisTable table(space.dim(), space.order(), cache.rule());
  return assemble_vector(space, cache, table, Kernel{mask});
}

// ---------------------------------------------------------------- norms, dumps

double inf_norm(const SparseMatrix& A) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(A.rows());
  for (int col = 0; col < A.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(A, col); it; ++it) rows[it.row()] += std::abs(it.value());
  return rows.size() ? rows.maxCoeff() : 0.0;
}

double asymmetry_ratio(const SparseMatrix& A) {
  const SparseMatrix At = A.transpose();
  const SparseMatrix D = A - At;
  const double na = inf_norm(A);
  return na > 0.0 ? inf_norm(D) / na : 0.0;
}

void dump_matrix(const std::string& path, const SparseMatrix& A) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << std::setprecision(17);
  out << A.rows() << ' ' << A.cols() << ' ' << A.nonZeros() << '\n';
  for (int col = 0; col < A.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(A, col); it; ++it) out << it.row() << ' ' << col << ' ' << it.value() << '\n';
}

void dump_vector(const std::string& path, const Eigen::VectorXd& v) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << std::setprecision(17) << v.size() << '\n';
  for (Eigen::Index i = 0; i < v.size(); ++i) out << v[i] << '\n';
}

}  // namespace ddfem
