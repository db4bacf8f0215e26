#pragma once

#include "ddfem/system.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ddfem {

struct ExactSolution {
  ScalarFn u;
  VectorFn grad_u;
};

// Errors over the quadrature points with r(x) <= 0.
struct MaskedNorms {
  double eL2 = 0.0;
  double eH1_semi = 0.0;  // || grad e ||, or || grad u - sigma_h || for mixed methods
  double eH1 = 0.0;       // eL2 + eH1_semi
};

/// Gradient surrogate used for error reporting: grad u_h for primal methods,
/// the reconstructed flux sigma_h for the mixed ones.
Vec2 reported_gradient(MethodId method, double uh, const Vec2& grad_uh, const QuadPointGeom& g,
                       const PointCoefficients& c);

MaskedNorms masked_error(const FeFunction& uh, const GeometryCache& cache, const ExactSolution& exact,
                         MethodId method, const CoefficientFn& coeffs);

/// log(e_i / e_{i+1}) / log(h_i / h_{i+1}).
std::vector<double> eoc(const std::vector<double>& errors, const std::vector<double>& hs);

// Manufactured problem u = cos(1.8 pi x) cos(2.6 pi y), D = 1 + |x|.
namespace manufactured {
double u(const Vec2& x);
Vec2 grad_u(const Vec2& x);
double laplace_u(const Vec2& x);
double D(const Vec2& x);
Vec2 grad_D(const Vec2& x);
/// -div(D grad u) + b . grad u.
double forcing(const Vec2& x, const Vec2& b);
}  // namespace manufactured

enum class StudyDomain { Arc, InvertedArc, Circle };
std::string domain_name(StudyDomain d);
StudyDomain parse_domain(const std::string& name);

struct StudySpec {
  std::vector<StudyDomain> domains{StudyDomain::Arc, StudyDomain::InvertedArc};
  std::vector<MethodId> methods{MethodId::NSDDM, MethodId::Mix0};
  std::vector<int> orders{1, 2};
  int levels = 4;
  double h0 = 0.05;
  double eps_factor = 3.5;     // eps = 3.5 h, i.e. 2 eps = 7 h
  double margin_factor = 7.0;  // box extends 7 eps beyond the shape
  bool advection = false;
  bool naive_advection = false;
};

struct StudyRow {
  StudyDomain domain = StudyDomain::Arc;
  MethodId method = MethodId::NSDDM;
  int order = 1;
  double h = 0.0;
  double eps = 0.0;
  double eL2 = 0.0;
  double eocL2 = 0.0;
  double eH1 = 0.0;
  double eocH1 = 0.0;
  int dofs = 0;
};

// One discretised study level.
struct StudyLevel {
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const PhaseField> pf;
  ShapePtr shape;
  double eps = 0.0;
  bool fitted_outer = false;  // outer box boundary is part of the true boundary
};

/// Mesh and phase field for a target h (2 eps = 7 h).
StudyLevel make_study_level(StudyDomain domain, double h, double eps_factor = 3.5, double margin_factor = 7.0);

/// b = -100 (y, x).
Vec2 study_advection(const Vec2& x);

struct SolveResult {
  FeFunction uh;
  FeSystem system;  // constrained system
  std::shared_ptr<const GeometryCache> cache;
  CoefficientFn coeffs;
};

/// Assembles and solves the manufactured problem on one level.
SolveResult solve_manufactured(const StudyLevel& level, const MethodSpec& method, int order, bool advection);

std::vector<StudyRow> run_study(const StudySpec& spec);

/// Columns: method, order, h, eps, eL2, eocL2, eH1, eocH1.
void write_study_csv(const std::string& path, const std::vector<StudyRow>& rows);

// ---------------------------------------------------------------- audits

struct CoercivityRow {
  MethodId method = MethodId::DDM1;
  bool naive = false;
  int dofs = 0;
  double min_eig = 0.0;    // symmetric part, unconstrained DOFs
  double asymmetry = 0.0;  // ||A - A^T||_inf / ||A||_inf of the diffusion part
  double probe_min = 0.0;  // min x^T A x / x^T x over random unconstrained x
};

/// Arc domain, P1, D = 1, b = -100 (y, x), eps = eps_factor h.
std::vector<CoercivityRow> coercivity_audit(const std::vector<MethodId>& methods, bool naive, double h = 0.05,
                                            double eps_factor = 3.5, std::uint64_t seed = 1, int probes = 64);

// 1D problem -1e-4 u'' + u' = 0 on |x| < 0.5, extended to [-0.675, 0.675],
// h = 0.01, eps = 0.035, P1. With x_16 = 1 and x_119 = t the quadratic form
// is a + b t + c t^2.
struct NaiveAdvectionExample {
  double a = 0.0, b = 0.0, c = 0.0;
  std::optional<double> root;  // smallest positive root
  double min_eig = 0.0;
  double x16 = 0.0, x119 = 0.0;  // node coordinates
  SparseMatrix A;                // unconstrained system matrix
};

NaiveAdvectionExample naive_advection_example(MethodId method = MethodId::DDM1, bool naive = true,
                                              int exactness = 2);

/// max |u_h - c| for constant data g = c, f = 0 on the arc domain.
double constant_solution_error(MethodId method, int order, double c = 1.7, double h = 0.05);

// ---------------------------------------------------------------- searchlight

double searchlight_boundary(const Vec2& x);
Vec2 searchlight_velocity(const Vec2& x);

struct LineSample {
  double t = 0.0;  // arc-length parameter in [0, 1]
  Vec2 x;
  double value = 0.0;
  double r = 0.0;  // signed distance of the sample
  double expected = 0.0;  // transported value inside, g(cp(x)) outside
};

struct SearchlightResult {
  MethodId method;
  double h = 0.0;
  double eps = 0.0;
  std::vector<LineSample> samples;
  FeFunction uh;
};

SearchlightResult run_searchlight(MethodId method, double h, int order = 1, double D = 1e-3,
                                  int samples = 512);

// Plateau check on the sample line. Samples in the diffuse interface
// (|r| < eps) or, inside the domain, within `layer` of the radii 0.35 and 0.65
// are excluded; the rest should lie within `tol` of LineSample::expected.
// The downwind deviation is the mean |u - expected| over samples with
// t < 0.5 and r <= 0, without exclusions.
struct PlateauStats {
  int considered = 0;
  int within = 0;
  double fraction = 0.0;
  int within_high = 0;  // samples matching +0.5
  int within_low = 0;   // samples matching -0.5
  double downwind_deviation = 0.0;
  int downwind_count = 0;
};

double searchlight_expected(const Vec2& x);
PlateauStats plateau_stats(const SearchlightResult& res, double tol = 0.1, double layer = 0.06);

void write_samples_csv(const std::string& path, const std::vector<LineSample>& samples);

}  // namespace ddfem
