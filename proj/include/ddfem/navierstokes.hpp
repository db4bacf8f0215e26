#pragma once

#include "ddfem/studies.hpp"
#include "ddfem/system.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ddfem {

using TimeVectorFn = std::function<Vec2(const Vec2& x, double t)>;

// Velocity (P2, two components) and pressure (P1) history of the IPC scheme.
struct TimeState {
  FeFunction u;       // u^n
  FeFunction u_prev;  // u^{n-1}
  FeFunction p;       // p^n
  double t = 0.0;
  double tau = 0.0;
  int step = 0;
};

struct NsProblem {
  double nu = 0.01;
  MethodId method = MethodId::NSDDM;
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const PhaseField> pf;
  double tau = 1e-3;
  /// Dirichlet data g(x, t) of the diffuse boundary, evaluated at cp(x).
  TimeVectorFn g;
  /// Values on fitted Dirichlet DOFs of the box boundary.
  TimeVectorFn box_velocity;
  std::vector<int> velocity_markers;  // empty: every box boundary facet
  /// Box markers with p~ = 0; empty: masked mean-zero constraint instead.
  std::vector<int> pressure_markers;
  double blowup_limit = 1e3;
};

class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(const std::string& what, double t) : std::runtime_error(what), t_(t) {}
  double time() const { return t_; }

 private:
  double t_;
};

// Force on the diffuse boundary, F = int (nu grad u - p I) grad phi dx.
struct Forces {
  Vec2 F = Vec2::Zero();
};

/// Incremental pressure correction with BDF2 on Taylor-Hood P2/P1.
class IpcSolver {
 public:
  explicit IpcSolver(NsProblem problem);

  const NsProblem& problem() const { return problem_; }
  const FeSpacePtr& velocity_space() const { return vspace_; }
  const FeSpacePtr& pressure_space() const { return pspace_; }
  const GeometryCache& cache() const { return *cache_; }
  const TimeState& state() const { return state_; }

  /// Sets u^n, u^{n-1}, p^n at time t0.
  void initialize(FeFunction u, FeFunction u_prev, FeFunction p, double t0);
  void restore(const TimeState& state) { state_ = state; }

  /// One BDF2 step. Throws BlowUpError if |u|_inf exceeds the limit.
  void step();

  /// Discrete projection of u (Dirichlet data at time t): u - grad psi with
  /// the pressure operator applied to the divergence functional of u.
  FeFunction project(const FeFunction& u, double t) const;

  /// Tentative velocity of the last step.
  const FeFunction& tentative() const { return tentative_; }

  /// Euclidean norm over the free pressure DOFs of the diffuse divergence
  /// functional q -> int phi u.grad q + g.grad phi q - boundary flux, at time t.
  double divergence_residual(const FeFunction& u, double t) const;

  Forces forces() const;

  /// Mean of a pressure field over the quadrature points with r <= 0.
  double masked_mean(const FeFunction& p) const;

 private:
  Eigen::VectorXd divergence_vector(const FeFunction& u, double t) const;
  Eigen::VectorXd pressure_solve(Eigen::VectorXd rhs) const;
  FeFunction correct(const FeFunction& u, const Eigen::VectorXd& psi, double t) const;
  Constraints velocity_constraints(int component, double t) const;

  NsProblem problem_;
  FeSpacePtr vspace_, pspace_;
  std::shared_ptr<const GeometryCache> cache_;
  BasisTable vtable_, ptable_;
  std::vector<int> vdofs_bc_;
  std::vector<int> pdofs_bc_;
  SparseMatrix A_base_;  // diffusion, penalty and BDF mass terms
  SparseLU pressure_lu_{0.0};
  SparseLU mass_lu_;
  SparseMatrix mass_;  // unconstrained P2 mass matrix
  SparseMatrix grad_[2];  // int dp/dx_c v, velocity rows, pressure columns
  // Per (cell, point, test function): weighted load coefficients of f_bar and g_bar.
  std::vector<double> load_f_, load_g_;
  Eigen::VectorXd mask_integrals_;
  double mask_area_ = 0.0;
  bool mean_zero_ = false;
  TimeState state_;
  FeFunction tentative_;
};

// ---------------------------------------------------------------- Taylor-Green

namespace taylor_green_exact {
Vec2 u(const Vec2& x, double t, double nu);
Eigen::Matrix2d grad_u(const Vec2& x, double t, double nu);  // row c: grad u_c
double p(const Vec2& x, double t, double nu);
}  // namespace taylor_green_exact

struct TaylorGreenConfig {
  MethodId method = MethodId::NSDDM;
  double h = 0.05;
  double tau = 0.005;  // 0: tau = h^2
  double T = 1.0;
  double nu = 0.01;
  double eps_factor = 3.5;
  double margin_factor = 7.0;
};

struct TaylorGreenResult {
  MethodId method = MethodId::NSDDM;
  double h = 0.0;
  double eps = 0.0;
  double tau = 0.0;
  int steps = 0;
  int dofs = 0;
  double eL2_u = 0.0;
  double eH1_u = 0.0;
  double eL2_p = 0.0;
  double eoc_L2_u = 0.0;
  double eoc_H1_u = 0.0;
  double eoc_L2_p = 0.0;
};

/// Mesh, phase field and solver set up for one Taylor-Green run.
NsProblem taylor_green_problem(const TaylorGreenConfig& cfg);

/// Time-accumulated masked errors sqrt(sum tau ||e(t_n)||^2), n = 1..N.
/// E_H1 uses the full H1 norm; for mixed methods the gradient is the
/// reconstructed flux. Pressures are compared after removing masked means.
TaylorGreenResult taylor_green(const TaylorGreenConfig& cfg);

std::vector<TaylorGreenResult> taylor_green_study(const std::vector<double>& hs, const std::vector<MethodId>& methods,
                                                  const TaylorGreenConfig& base = {});

void write_taylor_green_csv(const std::string& path, const std::vector<TaylorGreenResult>& rows);

struct TemporalOrderResult {
  std::vector<double> taus;         // the requested step sizes
  std::vector<double> differences;  // d_k = accumulated |u_{tau_k} - u_{tau_k / 2}|
  std::vector<double> ratios;       // d_k / d_{k+1}
};

/// Step-halving study on a fixed mesh. Each run is compared with the run at
/// half its step size on the snapshot times of the coarsest step, which
/// cancels the spatial error; the finest requested step is paired with one
/// extra run at half of it.
TemporalOrderResult temporal_order(const TaylorGreenConfig& base, const std::vector<double>& taus);

// ---------------------------------------------------------------- cylinder

struct CylinderConfig {
  MethodId method = MethodId::Mix0;
  double tau = 0.005;
  double T = 8.0;
  double nu = 1e-3;
  double eps = 0.0175;
  GradedMeshSpec mesh = default_cylinder_mesh();
  std::string csv;         // time series, empty: none
  std::string vtk_prefix;  // snapshots, empty: none
  int vtk_every = 0;
  std::string checkpoint;  // written every checkpoint_every steps and at the end
  int checkpoint_every = 0;
  std::string resume;  // checkpoint to start from

  static GradedMeshSpec default_cylinder_mesh();
};

/// Reduced smoke variant: T = 1 on a coarser graded mesh (h 0.01 - 0.04).
CylinderConfig cylinder_smoke_config(MethodId method);

struct CylinderSample {
  double t = 0.0;
  double cd = 0.0;
  double cl = 0.0;
  double dp = 0.0;
};

struct CylinderSummary {
  double cd_max = 0.0;
  double t_cd_max = 0.0;
  double cl_max = 0.0;
  double t_cl_max = 0.0;
  double dp_final = 0.0;
  int lift_sign_changes = 0;  // in t in [5, 7]
};

/// Inflow 6 y (0.41 - y) / 0.41^2 sin(pi t / 8).
Vec2 cylinder_inflow(const Vec2& x, double t);

/// Coefficients 2 F / (rho L U^2) with rho = 1, L = 0.1, U = 1.
std::vector<CylinderSample> run_cylinder(const CylinderConfig& cfg);
CylinderSummary summarize(const std::vector<CylinderSample>& series);
void write_cylinder_csv(const std::string& path, const std::vector<CylinderSample>& series);

// ---------------------------------------------------------------- checkpoints

/// Flat little-endian layout: 8-byte magic "DDFEMCK1", int64 counts
/// (velocity coefficients, pressure coefficients), int64 step, doubles t and
/// tau, then u^n, u^{n-1} and p^n coefficients.
void write_checkpoint(const std::string& path, const TimeState& state);
TimeState read_checkpoint(const std::string& path, const FeSpacePtr& vspace, const FeSpacePtr& pspace);

}  // namespace ddfem
