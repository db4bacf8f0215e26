#include "ddfem/navierstokes.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numbers>

namespace ddfem {

namespace {

constexpr double kPi = std::numbers::pi;
// Floor of the pressure diffusion weight; keeps exterior rows non-singular.
constexpr double kPressureFloor = 1e-10;
constexpr double kMomentumTolerance = 1e-12;

void eval_velocity(const FeSpace& space, const Eigen::VectorXd& coeffs, const BasisTable& table, int q,
                   std::span<const int> dofs, const Vec2* dN, Vec2& u, Eigen::Matrix2d* grad) {
  const int ns = space.num_scalar_dofs();
  u.setZero();
  if (grad) grad->setZero();
  for (int k = 0; k < table.n(); ++k) {
    const double a = coeffs[dofs[k]], b = coeffs[ns + dofs[k]];
    const double N = table.value(q, k);
    u += Vec2(a * N, b * N);
    if (grad) {
      grad->row(0) += a * dN[k].transpose();
      grad->row(1) += b * dN[k].transpose();
    }
  }
}

Vec2 outward_normal(const Mesh& mesh, const BoundaryFacet& f, double& length) {
  const Vec2 a = mesh.vertices[f.v[0]], b = mesh.vertices[f.v[1]];
  const Vec2 t = b - a;
  length = t.norm();
  Vec2 n(t.y(), -t.x());
  n /= length;
  if (n.dot(mesh.centroid(f.cell) - a) > 0.0) n = -n;
  return n;
}

}  // namespace

// ---------------------------------------------------------------- solver

IpcSolver::IpcSolver(NsProblem problem)
    : problem_(std::move(problem)),
      vspace_(std::make_shared<const FeSpace>(problem_.mesh, 2, 2)),
      pspace_(std::make_shared<const FeSpace>(problem_.mesh, 1, 1)),
      cache_(std::make_shared<const GeometryCache>(problem_.mesh, problem_.pf,
                                                   quadrature_for(2, 2, FormKind::Diffuse))),
      vtable_(2, 2, cache_->rule()),
      ptable_(2, 1, cache_->rule()) {
  if (!(problem_.nu > 0.0)) throw std::invalid_argument("viscosity must be positive");
  if (!(problem_.tau > 0.0)) throw std::invalid_argument("time step must be positive");
  if (problem_.method != MethodId::NSDDM && problem_.method != MethodId::Mix0)
    throw std::invalid_argument("Navier-Stokes supports nsddm and mix0 only");
  if (!problem_.g || !problem_.box_velocity) throw std::invalid_argument("Navier-Stokes needs boundary data");

  vdofs_bc_ = problem_.velocity_markers.empty() ? vspace_->boundary_dofs()
                                                : vspace_->boundary_dofs(problem_.velocity_markers);
  mean_zero_ = problem_.pressure_markers.empty();
  if (!mean_zero_) pdofs_bc_ = pspace_->boundary_dofs(problem_.pressure_markers);

  const int nv = vtable_.n();
  const int np = ptable_.n();
  const int nq = cache_->points_per_cell();
  const int ncell = problem_.mesh->num_cells();
  const double eps = problem_.pf ? problem_.pf->epsilon() : 1.0;
  const MethodSpec spec{problem_.method, false};

  Triplets ta, tm, tp, tg0, tg1;
  ta.reserve(static_cast<std::size_t>(ncell) * nv * nv);
  load_f_.resize(static_cast<std::size_t>(ncell) * nq * nv);
  load_g_.resize(load_f_.size());
  tm.reserve(static_cast<std::size_t>(ncell) * nv * nv);
  tp.reserve(static_cast<std::size_t>(ncell) * np * np);
  std::vector<double> Ka(nv * nv), Km(nv * nv), Kp(np * np), Kg0(nv * np), Kg1(nv * np);
  Vec2 dN[kMaxLocalDofs], dP[kMaxLocalDofs];
  IntegrandSample s;
  s.eps = eps;
  s.D = problem_.nu;
  s.m = 1.5 / problem_.tau;
  for (int c = 0; c < ncell; ++c) {
    std::fill(Ka.begin(), Ka.end(), 0.0);
    std::fill(Km.begin(), Km.end(), 0.0);
    std::fill(Kp.begin(), Kp.end(), 0.0);
    std::fill(Kg0.begin(), Kg0.end(), 0.0);
    std::fill(Kg1.begin(), Kg1.end(), 0.0);
    const CellMap& cm = cache_->map(c);
    for (int q = 0; q < nq; ++q) {
      const QuadPointGeom& g = cache_->at(c, q);
      s.phi = g.phi;
      s.omphi = g.omphi;
      s.grad_phi = g.grad_phi;
      for (int k = 0; k < nv; ++k) dN[k] = cm.physical_gradient(vtable_.ref_grad(q, k));
      for (int k = 0; k < np; ++k) dP[k] = cm.physical_gradient(ptable_.ref_grad(q, k));
      for (int i = 0; i < nv; ++i) {
        s.v = vtable_.value(q, i);
        s.grad_v = dN[i];
        for (int j = 0; j < nv; ++j) {
          s.u = vtable_.value(q, j);
          s.grad_u = dN[j];
          Ka[i * nv + j] += g.w * method_densities(spec, s, true).a;
          Km[i * nv + j] += g.w * s.u * s.v;
        }
        for (int j = 0; j < np; ++j) {
          Kg0[i * np + j] += g.w * dP[j].x() * s.v;
          Kg1[i * np + j] += g.w * dP[j].y() * s.v;
        }
        // Data-linear part of the load: l = lf f_bar + lg g_bar.
        const std::size_t at = (static_cast<std::size_t>(c) * nq + q) * nv + i;
        s.u = 0.0;
        s.grad_u = Vec2::Zero();
        s.f_bar = 1.0;
        s.g_bar = 0.0;
        load_f_[at] = g.w * diffusion_terms(spec.id, s).l;
        s.f_bar = 0.0;
        s.g_bar = 1.0;
        load_g_[at] = g.w * diffusion_terms(spec.id, s).l;
      }
      const double kp = g.phi + kPressureFloor;
      for (int i = 0; i < np; ++i)
        for (int j = 0; j < np; ++j) Kp[i * np + j] += g.w * kp * dP[i].dot(dP[j]);
    }
    const auto vd = vspace_->cell_dofs(c);
    const auto pd = pspace_->cell_dofs(c);
    for (int i = 0; i < nv; ++i)
      for (int j = 0; j < nv; ++j) {
        ta.emplace_back(vd[i], vd[j], Ka[i * nv + j]);
        tm.emplace_back(vd[i], vd[j], Km[i * nv + j]);
      }
    for (int i = 0; i < np; ++i)
      for (int j = 0; j < np; ++j) tp.emplace_back(pd[i], pd[j], Kp[i * np + j]);
    for (int i = 0; i < nv; ++i)
      for (int j = 0; j < np; ++j) {
        tg0.emplace_back(vd[i], pd[j], Kg0[i * np + j]);
        tg1.emplace_back(vd[i], pd[j], Kg1[i * np + j]);
      }
  }
  const int nsv = vspace_->num_scalar_dofs();
  const int nsp = pspace_->num_scalar_dofs();
  A_base_.resize(nsv, nsv);
  A_base_.setFromTriplets(ta.begin(), ta.end());
  A_base_.makeCompressed();
  mass_.resize(nsv, nsv);
  mass_.setFromTriplets(tm.begin(), tm.end());
  mass_.makeCompressed();
  for (int comp = 0; comp < 2; ++comp) {
    const Triplets& t = comp == 0 ? tg0 : tg1;
    grad_[comp].resize(nsv, nsp);
    grad_[comp].setFromTriplets(t.begin(), t.end());
    grad_[comp].makeCompressed();
  }

  SparseMatrix Mc = mass_;
  Eigen::VectorXd dummy = Eigen::VectorXd::Zero(nsv);
  Constraints vc;
  for (int d : vdofs_bc_) vc.add(d, 0.0);
  apply_constraints(Mc, dummy, vc);
  mass_lu_.factorize(Mc);

  SparseMatrix P(nsp, nsp);
  P.setFromTriplets(tp.begin(), tp.end());
  P.makeCompressed();
  mask_integrals_ = masked_basis_integrals(*pspace_, *cache_, [](const QuadPointGeom& g) { return g.r <= 0.0; });
  mask_area_ = mask_integrals_.sum();
  Eigen::VectorXd prhs = Eigen::VectorXd::Zero(nsp);
  if (mean_zero_) {
    mean_zero_constraint(P, prhs, mask_integrals_);
  } else {
    Constraints pc;
    for (int d : pdofs_bc_) pc.add(d, 0.0);
    apply_constraints(P, prhs, pc);
  }
  pressure_lu_.factorize(P);
}

void IpcSolver::initialize(FeFunction u, FeFunction u_prev, FeFunction p, double t0) {
  if (u.space != vspace_ || u_prev.space != vspace_ || p.space != pspace_)
    throw std::invalid_argument("initial data must live on the solver spaces");
  state_.u = std::move(u);
  state_.u_prev = std::move(u_prev);
  state_.p = std::move(p);
  state_.t = t0;
  state_.tau = problem_.tau;
  state_.step = 0;
}

Constraints IpcSolver::velocity_constraints(int component, double t) const {
  Constraints c;
  for (int d : vdofs_bc_) {
    const Vec2 v = problem_.box_velocity(vspace_->dof_coords()[d], t);
    c.add(d, component == 0 ? v.x() : v.y());
  }
  return c;
}

void IpcSolver::step() {
  if (!state_.u.space) throw std::logic_error("IpcSolver::step before initialize");
  const double tau = problem_.tau;
  const double t1 = state_.t + tau;
  const int nsv = vspace_->num_scalar_dofs();
  const int nv = vtable_.n();
  const int np = ptable_.n();
  const int nq = cache_->points_per_cell();
  const int ncell = problem_.mesh->num_cells();
  const double eps = problem_.pf ? problem_.pf->epsilon() : 1.0;
  const MethodSpec spec{problem_.method, false};

  const Eigen::VectorXd ustar = 2.0 * state_.u.coeffs - state_.u_prev.coeffs;
  const Eigen::VectorXd hist = (4.0 * state_.u.coeffs - state_.u_prev.coeffs) / (2.0 * tau);

  // (i) tentative velocity
  Triplets trip;
  trip.reserve(static_cast<std::size_t>(ncell) * nv * nv);
  Eigen::VectorXd F0 = Eigen::VectorXd::Zero(nsv), F1 = Eigen::VectorXd::Zero(nsv);
  std::vector<double> Ke(nv * nv);
  double Fe0[kMaxLocalDofs], Fe1[kMaxLocalDofs];
  Vec2 dN[kMaxLocalDofs], dP[kMaxLocalDofs];
  IntegrandSample s;
  s.eps = eps;
  s.D = problem_.nu;
  for (int c = 0; c < ncell; ++c) {
    std::fill(Ke.begin(), Ke.end(), 0.0);
    std::fill(Fe0, Fe0 + nv, 0.0);
    std::fill(Fe1, Fe1 + nv, 0.0);
    const CellMap& cm = cache_->map(c);
    const auto vd = vspace_->cell_dofs(c);
    const auto pd = pspace_->cell_dofs(c);
    for (int q = 0; q < nq; ++q) {
      const QuadPointGeom& g = cache_->at(c, q);
      for (int k = 0; k < nv; ++k) dN[k] = cm.physical_gradient(vtable_.ref_grad(q, k));
      for (int k = 0; k < np; ++k) dP[k] = cm.physical_gradient(ptable_.ref_grad(q, k));
      Vec2 b, hq;
      eval_velocity(*vspace_, ustar, vtable_, q, vd, dN, b, nullptr);
      eval_velocity(*vspace_, hist, vtable_, q, vd, dN, hq, nullptr);
      Vec2 dp = Vec2::Zero();
      for (int k = 0; k < np; ++k) dp += state_.p.coeffs[pd[k]] * dP[k];
      const Vec2 gb = problem_.g(g.cp, t1);
      s.phi = g.phi;
      s.omphi = g.omphi;
      s.grad_phi = g.grad_phi;
      s.b = b;
      s.m = 0.0;
      s.f_bar = 0.0;
      s.g_bar = 1.0;
      const std::size_t at = (static_cast<std::size_t>(c) * nq + q) * nv;
      const Vec2 f = hq - dp;
      // The density is linear in (u, grad u) and in g_bar: probe it with unit data.
      for (int i = 0; i < nv; ++i) {
        s.v = vtable_.value(q, i);
        s.grad_v = dN[i];
        s.u = 1.0;
        s.grad_u = Vec2::Zero();
        const Densities d0 = advection_terms(spec, s);
        const double a0 = d0.a;
        const double lg = load_g_[at + i] + g.w * d0.l;
        Fe0[i] += load_f_[at + i] * f.x() + lg * gb.x();
        Fe1[i] += load_f_[at + i] * f.y() + lg * gb.y();
        s.u = 0.0;
        s.grad_u = Vec2(1.0, 0.0);
        const double ax = advection_terms(spec, s).a;
        s.grad_u = Vec2(0.0, 1.0);
        const double ay = advection_terms(spec, s).a;
        for (int j = 0; j < nv; ++j)
          Ke[i * nv + j] += g.w * (a0 * vtable_.value(q, j) + ax * dN[j].x() + ay * dN[j].y());
      }
    }
    for (int i = 0; i < nv; ++i) {
      F0[vd[i]] += Fe0[i];
      F1[vd[i]] += Fe1[i];
      for (int j = 0; j < nv; ++j) trip.emplace_back(vd[i], vd[j], Ke[i * nv + j]);
    }
  }
  SparseMatrix A(nsv, nsv);
  A.setFromTriplets(trip.begin(), trip.end());
  A += A_base_;
  const Constraints c0 = velocity_constraints(0, t1);
  const Constraints c1 = velocity_constraints(1, t1);
  apply_constraints(A, F0, c0);
  for (std::size_t k = 0; k < c1.dofs.size(); ++k) F1[c1.dofs[k]] = c1.values[k];
  tentative_ = FeFunction(vspace_);
  // The BDF mass term dominates, so diagonally preconditioned BiCGSTAB
  // converges in a few iterations; LU is the fallback.
  Eigen::BiCGSTAB<SparseMatrix> krylov;
  krylov.setTolerance(kMomentumTolerance);
  krylov.setMaxIterations(500);
  krylov.compute(A);
  bool converged = true;
  for (int comp = 0; comp < 2; ++comp) {
    const Eigen::VectorXd& F = comp == 0 ? F0 : F1;
    Eigen::VectorXd x = krylov.solveWithGuess(F, ustar.segment(comp * nsv, nsv));
    converged = converged && krylov.info() == Eigen::Success;
    tentative_.coeffs.segment(comp * nsv, nsv) = x;
  }
  if (!converged) {
    SparseLU lu;
    lu.factorize(A);
    tentative_.coeffs.head(nsv) = lu.solve(F0);
    tentative_.coeffs.tail(nsv) = lu.solve(F1);
  }

  // (ii) pressure increment
  const Eigen::VectorXd ptilde = pressure_solve((1.5 / tau) * divergence_vector(tentative_, t1));

  // (iii) velocity correction by L2 projection
  FeFunction unew = correct(tentative_, (2.0 * tau / 3.0) * ptilde, t1);

  const double umax = unew.coeffs.cwiseAbs().maxCoeff();
  if (!(umax <= problem_.blowup_limit)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "velocity blow-up at t = %.6g: |u|_inf = %.3g", t1, umax);
    throw BlowUpError(buf, t1);
  }
  state_.u_prev = std::move(state_.u);
  state_.u = std::move(unew);
  state_.p.coeffs += ptilde;
  state_.t = t1;
  ++state_.step;
}

Eigen::VectorXd IpcSolver::pressure_solve(Eigen::VectorXd rhs) const {
  if (mean_zero_) {
    rhs.conservativeResize(rhs.size() + 1);
    rhs[rhs.size() - 1] = 0.0;
  } else {
    for (int d : pdofs_bc_) rhs[d] = 0.0;
  }
  return pressure_lu_.solve(rhs).head(pspace_->num_scalar_dofs());
}

FeFunction IpcSolver::correct(const FeFunction& u, const Eigen::VectorXd& psi, double t) const {
  const int nsv = vspace_->num_scalar_dofs();
  FeFunction out(vspace_);
  for (int comp = 0; comp < 2; ++comp) {
    Eigen::VectorXd rhs = mass_ * u.coeffs.segment(comp * nsv, nsv) - grad_[comp] * psi;
    const Constraints cc = velocity_constraints(comp, t);
    for (std::size_t k = 0; k < cc.dofs.size(); ++k) rhs[cc.dofs[k]] = cc.values[k];
    out.coeffs.segment(comp * nsv, nsv) = mass_lu_.solve(rhs);
  }
  return out;
}

FeFunction IpcSolver::project(const FeFunction& u, double t) const {
  return correct(u, pressure_solve(divergence_vector(u, t)), t);
}

Eigen::VectorXd IpcSolver::divergence_vector(const FeFunction& u, double t) const {
  const int nv = vtable_.n();
  const int np = ptable_.n();
  const int nq = cache_->points_per_cell();
  Eigen::VectorXd F = Eigen::VectorXd::Zero(pspace_->num_scalar_dofs());
  Vec2 dN[kMaxLocalDofs];
  for (int c = 0; c < problem_.mesh->num_cells(); ++c) {
    const CellMap& cm = cache_->map(c);
    const auto vd = vspace_->cell_dofs(c);
    const auto pd = pspace_->cell_dofs(c);
    for (int q = 0; q < nq; ++q) {
      const QuadPointGeom& g = cache_->at(c, q);
      for (int k = 0; k < nv; ++k) dN[k] = cm.physical_gradient(vtable_.ref_grad(q, k));
      Vec2 uq;
      eval_velocity(*vspace_, u.coeffs, vtable_, q, vd, dN, uq, nullptr);
      const Vec2 gb = problem_.g(g.cp, t);
      for (int i = 0; i < np; ++i) {
        const Vec2 dq = cm.physical_gradient(ptable_.ref_grad(q, i));
        F[pd[i]] += g.w * ns_divergence_density(g.phi, g.grad_phi, uq, gb, ptable_.value(q, i), dq);
      }
    }
  }
  // Flux through the fitted box boundary.
  const Mesh& mesh = *problem_.mesh;
  std::vector<double> gx, gw;
  gauss_legendre(3, gx, gw);
  for (const BoundaryFacet& f : mesh.boundary) {
    double len = 0.0;
    const Vec2 n = outward_normal(mesh, f, len);
    const Vec2 a = mesh.vertices[f.v[0]], b = mesh.vertices[f.v[1]];
    const CellMap& cm = cache_->map(f.cell);
    const auto pd = pspace_->cell_dofs(f.cell);
    double Np[kMaxLocalDofs];
    Vec2 dPr[kMaxLocalDofs];
    for (std::size_t k = 0; k < gx.size(); ++k) {
      const Vec2 x = a + gx[k] * (b - a);
      const Vec2 xi = cm.to_reference(x);
      const double phi = problem_.pf ? problem_.pf->phi(x) : 1.0;
      const Vec2 uq(u.value_in_cell(f.cell, xi, 0), u.value_in_cell(f.cell, xi, 1));
      reference_basis(2, 1, xi, Np, dPr);
      for (int i = 0; i < np; ++i) F[pd[i]] -= gw[k] * len * phi * uq.dot(n) * Np[i];
    }
  }
  return F;
}

double IpcSolver::divergence_residual(const FeFunction& u, double t) const {
  Eigen::VectorXd F = divergence_vector(u, t);
  for (int d : pdofs_bc_) F[d] = 0.0;
  if (mean_zero_) {
    // Remove the component along the constraint direction.
    const double cc = mask_integrals_.squaredNorm();
    if (cc > 0.0) F -= (F.dot(mask_integrals_) / cc) * mask_integrals_;
  }
  return F.norm();
}

Forces IpcSolver::forces() const {
  const int nv = vtable_.n();
  const int np = ptable_.n();
  const int nq = cache_->points_per_cell();
  Forces out;
  Vec2 dN[kMaxLocalDofs];
  for (int c = 0; c < problem_.mesh->num_cells(); ++c) {
    const CellMap& cm = cache_->map(c);
    const auto vd = vspace_->cell_dofs(c);
    const auto pd = pspace_->cell_dofs(c);
    for (int q = 0; q < nq; ++q) {
      const QuadPointGeom& g = cache_->at(c, q);
      if (g.grad_phi.squaredNorm() == 0.0) continue;
      for (int k = 0; k < nv; ++k) dN[k] = cm.physical_gradient(vtable_.ref_grad(q, k));
      Vec2 uq;
      Eigen::Matrix2d gu;
      eval_velocity(*vspace_, state_.u.coeffs, vtable_, q, vd, dN, uq, &gu);
      double p = 0.0;
      for (int k = 0; k < np; ++k) p += state_.p.coeffs[pd[k]] * ptable_.value(q, k);
      out.F += g.w * (problem_.nu * gu * g.grad_phi - p * g.grad_phi);
    }
  }
  return out;
}

double IpcSolver::masked_mean(const FeFunction& p) const {
  return mask_area_ > 0.0 ? mask_integrals_.dot(p.coeffs) / mask_area_ : 0.0;
}

// ---------------------------------------------------------------- Taylor-Green

namespace taylor_green_exact {

Vec2 u(const Vec2& x, double t, double nu) {
  const double e = std::exp(-8.0 * kPi * kPi * nu * t);
  const double a = 2.0 * kPi * x.x(), b = 2.0 * kPi * x.y();
  return {-std::cos(a) * std::sin(b) * e, std::sin(a) * std::cos(b) * e};
}

Eigen::Matrix2d grad_u(const Vec2& x, double t, double nu) {
  const double e = std::exp(-8.0 * kPi * kPi * nu * t);
  const double a = 2.0 * kPi * x.x(), b = 2.0 * kPi * x.y();
  const double k = 2.0 * kPi * e;
  Eigen::Matrix2d G;
  G << k * std::sin(a) * std::sin(b), -k * std::cos(a) * std::cos(b), k * std::cos(a) * std::cos(b),
      -k * std::sin(a) * std::sin(b);
  return G;
}

double p(const Vec2& x, double t, double nu) {
  const double e = std::exp(-16.0 * kPi * kPi * nu * t);
  return -0.25 * (std::cos(4.0 * kPi * x.x()) + std::cos(4.0 * kPi * x.y())) * e;
}

}  // namespace taylor_green_exact

NsProblem taylor_green_problem(const TaylorGreenConfig& cfg) {
  const StudyLevel level = make_study_level(StudyDomain::Circle, cfg.h, cfg.eps_factor, cfg.margin_factor);
  NsProblem pb;
  pb.nu = cfg.nu;
  pb.method = cfg.method;
  pb.mesh = level.mesh;
  pb.pf = level.pf;
  pb.tau = cfg.tau > 0.0 ? cfg.tau : cfg.h * cfg.h;
  const double nu = cfg.nu;
  pb.g = [nu](const Vec2& x, double t) { return taylor_green_exact::u(x, t, nu); };
  const auto pf = level.pf;
  pb.box_velocity = [nu, pf](const Vec2& x, double t) { return taylor_green_exact::u(pf->project(x), t, nu); };
  return pb;
}

namespace {

// Runs Taylor-Green and calls visit(solver) after every step.
template <class Visit>
void run_taylor_green(const TaylorGreenConfig& cfg, IpcSolver& solver, Visit&& visit) {
  const double nu = cfg.nu;
  const double tau = solver.problem().tau;
  const FeSpacePtr& V = solver.velocity_space();
  const FeSpacePtr& P = solver.pressure_space();
  FeFunction u0 = interpolate(V, VectorFn([nu](const Vec2& x) { return taylor_green_exact::u(x, 0.0, nu); }));
  FeFunction um = interpolate(V, VectorFn([nu, tau](const Vec2& x) { return taylor_green_exact::u(x, -tau, nu); }));
  FeFunction p0 = interpolate(P, ScalarFn([nu](const Vec2& x) { return taylor_green_exact::p(x, 0.0, nu); }));
  p0.coeffs.array() -= solver.masked_mean(p0);
  solver.initialize(std::move(u0), std::move(um), std::move(p0), 0.0);
  const int steps = static_cast<int>(std::lround(cfg.T / tau));
  for (int n = 0; n < steps; ++n) {
    solver.step();
    visit(solver);
  }
}

struct SquaredErrors {
  double l2 = 0.0, h1 = 0.0, p = 0.0;
};

SquaredErrors taylor_green_errors(const IpcSolver& solver, double nu) {
  const GeometryCache& cache = solver.cache();
  const FeSpace& V = *solver.velocity_space();
  const FeSpace& P = *solver.pressure_space();
  const TimeState& st = solver.state();
  const BasisTable vt(2, 2, cache.rule()), pt(2, 1, cache.rule());
  const int nq = cache.points_per_cell();
  const MethodId method = solver.problem().method;
  const double t = st.t;
  // Masked means of the discrete and exact pressures.
  double area = 0.0, mean_h = 0.0, mean_e = 0.0;
  for (int c = 0; c < V.mesh().num_cells(); ++c) {
    const auto pd = P.cell_dofs(c);
    for (int q = 0; q < nq; ++q) {
      const QuadPointGeom& g = cache.at(c, q);
      if (g.r > 0.0) continue;
      double ph = 0.0;
      for (int k = 0; k < pt.n(); ++k) ph += st.p.coeffs[pd[k]] * pt.value(q, k);
      area += g.w;
      mean_h += g.w * ph;
      mean_e += g.w * taylor_green_exact::p(g.x, t, nu);
    }
  }
  mean_h /= area;
  mean_e /= area;

  SquaredErrors e;
  Vec2 dN[kMaxLocalDofs];
  for (int c = 0; c < V.mesh().num_cells(); ++c) {
    const CellMap& cm = cache.map(c);
    const auto vd = V.cell_dofs(c);
    const auto pd = P.cell_dofs(c);
    for (int q = 0; q < nq; ++q) {
      const QuadPointGeom& g = cache.at(c, q);
      if (g.r > 0.0) continue;
      for (int k = 0; k < vt.n(); ++k) dN[k] = cm.physical_gradient(vt.ref_grad(q, k));
      Vec2 uh;
      Eigen::Matrix2d gh;
      eval_velocity(V, st.u.coeffs, vt, q, vd, dN, uh, &gh);
      const Vec2 ue = taylor_green_exact::u(g.x, t, nu);
      const Eigen::Matrix2d ge = taylor_green_exact::grad_u(g.x, t, nu);
      const double el2 = (ue - uh).squaredNorm();
      double eg = 0.0;
      if (is_mixed(method)) {
        const Vec2 gb = taylor_green_exact::u(g.cp, t, nu);
        for (int comp = 0; comp < 2; ++comp) {
          PointCoefficients pc;
          pc.g_bar = gb[comp];
          const Vec2 sigma = reported_gradient(method, uh[comp], gh.row(comp).transpose(), g, pc);
          eg += (ge.row(comp).transpose() - sigma).squaredNorm();
        }
      } else {
        eg = (ge - gh).squaredNorm();
      }
      double ph = 0.0;
      for (int k = 0; k < pt.n(); ++k) ph += st.p.coeffs[pd[k]] * pt.value(q, k);
      const double ep = (ph - mean_h) - (taylor_green_exact::p(g.x, t, nu) - mean_e);
      e.l2 += g.w * el2;
      e.h1 += g.w * (el2 + eg);
      e.p += g.w * ep * ep;
    }
  }
  return e;
}

double masked_l2_squared(const IpcSolver& solver, const Eigen::VectorXd& coeffs) {
  const GeometryCache& cache = solver.cache();
  const FeSpace& V = *solver.velocity_space();
  const BasisTable vt(2, 2, cache.rule());
  double sum = 0.0;
  for (int c = 0; c < V.mesh().num_cells(); ++c) {
    const auto vd = V.cell_dofs(c);
    for (int q = 0; q < cache.points_per_cell(); ++q) {
      const QuadPointGeom& g = cache.at(c, q);
      if (g.r > 0.0) continue;
      Vec2 u;
      eval_velocity(V, coeffs, vt, q, vd, nullptr, u, nullptr);
      sum += g.w * u.squaredNorm();
    }
  }
  return sum;
}

}  // namespace

TaylorGreenResult taylor_green(const TaylorGreenConfig& cfg) {
  IpcSolver solver(taylor_green_problem(cfg));
  SquaredErrors acc;
  const double tau = solver.problem().tau;
  run_taylor_green(cfg, solver, [&](const IpcSolver& s) {
    const SquaredErrors e = taylor_green_errors(s, cfg.nu);
    acc.l2 += tau * e.l2;
    acc.h1 += tau * e.h1;
    acc.p += tau * e.p;
  });
  TaylorGreenResult r;
  r.method = cfg.method;
  r.h = solver.problem().mesh->h;
  r.eps = solver.problem().pf->epsilon();
  r.tau = tau;
  r.steps = solver.state().step;
  r.dofs = solver.velocity_space()->num_dofs() + solver.pressure_space()->num_dofs();
  r.eL2_u = std::sqrt(acc.l2);
  r.eH1_u = std::sqrt(acc.h1);
  r.eL2_p = std::sqrt(acc.p);
  return r;
}

std::vector<TaylorGreenResult> taylor_green_study(const std::vector<double>& hs, const std::vector<MethodId>& methods,
                                                  const TaylorGreenConfig& base) {
  std::vector<TaylorGreenResult> rows;
  for (MethodId m : methods) {
    const std::size_t first = rows.size();
    for (double h : hs) {
      TaylorGreenConfig cfg = base;
      cfg.method = m;
      cfg.h = h;
      rows.push_back(taylor_green(cfg));
    }
    for (std::size_t i = first + 1; i < rows.size(); ++i) {
      const double lh = std::log(rows[i - 1].h / rows[i].h);
      rows[i].eoc_L2_u = std::log(rows[i - 1].eL2_u / rows[i].eL2_u) / lh;
      rows[i].eoc_H1_u = std::log(rows[i - 1].eH1_u / rows[i].eH1_u) / lh;
      rows[i].eoc_L2_p = std::log(rows[i - 1].eL2_p / rows[i].eL2_p) / lh;
    }
  }
  return rows;
}

void write_taylor_green_csv(const std::string& path, const std::vector<TaylorGreenResult>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "method,h,eps,tau,steps,eL2u,eocL2u,eH1u,eocH1u,eL2p,eocL2p\n" << std::setprecision(15);
  for (const auto& r : rows)
    out << method_name(r.method) << ',' << r.h << ',' << r.eps << ',' << r.tau << ',' << r.steps << ',' << r.eL2_u
        << ',' << r.eoc_L2_u << ',' << r.eH1_u << ',' << r.eoc_H1_u << ',' << r.eL2_p << ',' << r.eoc_L2_p << '\n';
}

TemporalOrderResult temporal_order(const TaylorGreenConfig& base, const std::vector<double>& taus) {
  if (taus.empty()) throw std::invalid_argument("temporal_order needs step sizes");
  TemporalOrderResult res;
  res.taus = taus;
  std::vector<double> all = taus;
  all.push_back(0.5 * taus.back());
  const double coarse = taus.front();
  const double fine = all.back();
  const int snaps = static_cast<int>(std::lround(base.T / coarse));
  std::vector<int> back;
  for (double tau : all) {
    const int every = static_cast<int>(std::lround(coarse / tau));
    const int k = static_cast<int>(std::lround(tau / fine));
    if (std::abs(every * tau - coarse) > 1e-12 * coarse || std::abs(k * fine - tau) > 1e-12 * tau)
      throw std::invalid_argument("step sizes must halve successively");
    back.push_back(k);
  }

  // Interpolated exact data are not a discrete solution; each run would
  // first relax towards one at a rate that depends on tau. All runs therefore
  // start from one spin-up run with the finest step, begun 10 coarse steps
  // before t = 0.
  TaylorGreenConfig fcfg = base;
  fcfg.tau = fine;
  IpcSolver spin(taylor_green_problem(fcfg));
  {
    const double nu = base.nu;
    const double t0 = -10.0 * coarse;
    const FeSpacePtr& V = spin.velocity_space();
    FeFunction u0 = interpolate(V, VectorFn([&](const Vec2& x) { return taylor_green_exact::u(x, t0, nu); }));
    FeFunction um = interpolate(V, VectorFn([&](const Vec2& x) { return taylor_green_exact::u(x, t0 - fine, nu); }));
    FeFunction p0 = interpolate(spin.pressure_space(),
                                ScalarFn([&](const Vec2& x) { return taylor_green_exact::p(x, t0, nu); }));
    p0.coeffs.array() -= spin.masked_mean(p0);
    spin.initialize(std::move(u0), std::move(um), std::move(p0), t0);
  }
  const int spin_steps = static_cast<int>(std::lround(10.0 * coarse / fine));
  std::vector<Eigen::VectorXd> history;  // history[k]: velocity at -k * fine
  for (int n = 1; n <= spin_steps; ++n) {
    spin.step();
    if (spin_steps - n <= back.front()) history.insert(history.begin(), spin.state().u.coeffs);
  }
  const Eigen::VectorXd p_start = spin.state().p.coeffs;

  std::vector<std::vector<Eigen::VectorXd>> runs;
  std::unique_ptr<IpcSolver> last;
  for (std::size_t r = 0; r < all.size(); ++r) {
    TaylorGreenConfig cfg = base;
    cfg.tau = all[r];
    const int every = static_cast<int>(std::lround(coarse / all[r]));
    auto solver = std::make_unique<IpcSolver>(taylor_green_problem(cfg));
    solver->initialize(FeFunction(solver->velocity_space(), history[0]),
                       FeFunction(solver->velocity_space(), history[back[r]]),
                       FeFunction(solver->pressure_space(), p_start), 0.0);
    std::vector<Eigen::VectorXd> snap;
    for (int n = 1; n <= snaps * every; ++n) {
      solver->step();
      if (n % every == 0) snap.push_back(solver->state().u.coeffs);
    }
    runs.push_back(std::move(snap));
    last = std::move(solver);
  }
  for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
    double sum = 0.0;
    for (int n = 0; n < snaps; ++n) sum += coarse * masked_l2_squared(*last, runs[k][n] - runs[k + 1][n]);
    res.differences.push_back(std::sqrt(sum));
  }
  for (std::size_t k = 0; k + 1 < res.differences.size(); ++k)
    res.ratios.push_back(res.differences[k] / res.differences[k + 1]);
  return res;
}

// ---------------------------------------------------------------- cylinder

GradedMeshSpec CylinderConfig::default_cylinder_mesh() {
  GradedMeshSpec m;
  m.lo = Vec2(0.0, 0.0);
  m.hi = Vec2(2.2, 0.41);
  m.hole = ShapeSpec{CircleSpec{Vec2(0.2, 0.2), 0.05}};
  m.h_min = 0.005;
  m.h_max = 0.02;
  m.grow_start = 0.0875;
  m.grow_end = 0.35;
  return m;
}

CylinderConfig cylinder_smoke_config(MethodId method) {
  CylinderConfig cfg;
  cfg.method = method;
  cfg.T = 1.0;
  cfg.eps = 0.035;
  cfg.mesh.h_min = 0.01;
  cfg.mesh.h_max = 0.04;
  cfg.mesh.grow_start = 5.0 * cfg.eps;
  cfg.mesh.grow_end = 20.0 * cfg.eps;
  return cfg;
}

Vec2 cylinder_inflow(const Vec2& x, double t) {
  const double H = 0.41;
  return {6.0 * x.y() * (H - x.y()) / (H * H) * std::sin(kPi * t / 8.0), 0.0};
}

std::vector<CylinderSample> run_cylinder(const CylinderConfig& cfg) {
  auto mesh = std::make_shared<const Mesh>(graded_mesh(cfg.mesh));
  NsProblem pb;
  pb.nu = cfg.nu;
  pb.method = cfg.method;
  pb.mesh = mesh;
  pb.pf = std::make_shared<const PhaseField>(std::make_shared<Complement>(make_shape(cfg.mesh.hole)), cfg.eps);
  pb.tau = cfg.tau;
  pb.g = [](const Vec2&, double) { return Vec2::Zero(); };
  const double x_in = cfg.mesh.lo.x();
  pb.box_velocity = [x_in](const Vec2& x, double t) {
    return std::abs(x.x() - x_in) < 1e-12 ? cylinder_inflow(x, t) : Vec2::Zero();
  };
  pb.velocity_markers = {marker::left, marker::bottom, marker::top};
  pb.pressure_markers = {marker::right};
  IpcSolver solver(pb);
  if (!cfg.resume.empty()) {
    solver.restore(read_checkpoint(cfg.resume, solver.velocity_space(), solver.pressure_space()));
  } else {
    solver.initialize(FeFunction(solver.velocity_space()), FeFunction(solver.velocity_space()),
                      FeFunction(solver.pressure_space()), 0.0);
  }
  const double scale = 2.0 / (1.0 * 0.1 * 1.0 * 1.0);
  std::vector<CylinderSample> series;
  std::ofstream csv;
  if (!cfg.csv.empty()) {
    csv.open(cfg.csv);
    if (!csv) throw std::runtime_error("cannot open " + cfg.csv);
    csv << "t,cd,cl,dp\n" << std::setprecision(12);
  }
  const int steps = static_cast<int>(std::lround((cfg.T - solver.state().t) / cfg.tau));
  for (int n = 0; n < steps; ++n) {
    solver.step();
    const TimeState& st = solver.state();
    const Forces f = solver.forces();
    CylinderSample s;
    s.t = st.t;
    s.cd = scale * f.F.x();
    s.cl = scale * f.F.y();
    s.dp = st.p.value(Vec2(0.15, 0.2)) - st.p.value(Vec2(0.25, 0.2));
    series.push_back(s);
    if (csv) csv << s.t << ',' << s.cd << ',' << s.cl << ',' << s.dp << '\n' << std::flush;
    if (!cfg.vtk_prefix.empty() && cfg.vtk_every > 0 && st.step % cfg.vtk_every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "_%06d.vtk", st.step);
      write_vtk(cfg.vtk_prefix + name, *mesh,
                {{"ux", st.u.vertex_values(0)}, {"uy", st.u.vertex_values(1)}, {"p", st.p.vertex_values(0)}});
    }
    if (!cfg.checkpoint.empty() && cfg.checkpoint_every > 0 && st.step % cfg.checkpoint_every == 0)
      write_checkpoint(cfg.checkpoint, st);
  }
  if (!cfg.checkpoint.empty()) write_checkpoint(cfg.checkpoint, solver.state());
  return series;
}

CylinderSummary summarize(const std::vector<CylinderSample>& series) {
  CylinderSummary s;
  if (series.empty()) return s;
  s.cd_max = -1e300;
  s.cl_max = -1e300;
  double prev = 0.0;
  bool have_prev = false;
  for (const auto& x : series) {
    if (x.cd > s.cd_max) {
      s.cd_max = x.cd;
      s.t_cd_max = x.t;
    }
    if (x.cl > s.cl_max) {
      s.cl_max = x.cl;
      s.t_cl_max = x.t;
    }
    if (x.t >= 5.0 && x.t <= 7.0) {
      if (have_prev && (x.cl > 0.0) != (prev > 0.0)) ++s.lift_sign_changes;
      prev = x.cl;
      have_prev = true;
    }
  }
  s.dp_final = series.back().dp;
  return s;
}

void write_cylinder_csv(const std::string& path, const std::vector<CylinderSample>& series) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "t,cd,cl,dp\n" << std::setprecision(12);
  for (const auto& s : series) out << s.t << ',' << s.cd << ',' << s.cl << ',' << s.dp << '\n';
}

// ---------------------------------------------------------------- checkpoints

namespace {
constexpr char kMagic[8] = {'D', 'D', 'F', 'E', 'M', 'C', 'K', '1'};

template <class T>
void put(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("truncated checkpoint");
  return v;
}
}  // namespace

void write_checkpoint(const std::string& path, const TimeState& st) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.write(kMagic, sizeof kMagic);
  put<std::int64_t>(out, st.u.coeffs.size());
  put<std::int64_t>(out, st.p.coeffs.size());
  put<std::int64_t>(out, st.step);
  put<double>(out, st.t);
  put<double>(out, st.tau);
  for (const Eigen::VectorXd* v : {&st.u.coeffs, &st.u_prev.coeffs, &st.p.coeffs})
    out.write(reinterpret_cast<const char*>(v->data()), static_cast<std::streamsize>(v->size() * sizeof(double)));
  if (!out) throw std::runtime_error("failed writing " + path);
}

TimeState read_checkpoint(const std::string& path, const FeSpacePtr& vspace, const FeSpacePtr& pspace) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw std::runtime_error(path + " is not a checkpoint");
  const auto nu = get<std::int64_t>(in);
  const auto np = get<std::int64_t>(in);
  if (nu != vspace->num_dofs() || np != pspace->num_dofs())
    throw std::runtime_error("checkpoint sizes do not match the discretisation");
  TimeState st;
  st.step = static_cast<int>(get<std::int64_t>(in));
  st.t = get<double>(in);
  st.tau = get<double>(in);
  st.u = FeFunction(vspace);
  st.u_prev = FeFunction(vspace);
  st.p = FeFunction(pspace);
  for (Eigen::VectorXd* v : {&st.u.coeffs, &st.u_prev.coeffs, &st.p.coeffs}) {
    in.read(reinterpret_cast<char*>(v->data()), static_cast<std::streamsize>(v->size() * sizeof(double)));
    if (!in) throw std::runtime_error("truncated checkpoint");
  }
  return st;
}

}  // namespace ddfem
