#include "ddfem/studies.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <random>

namespace ddfem {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kKx = 1.8 * kPi;
constexpr double kKy = 2.6 * kPi;
}  // namespace

// ---------------------------------------------------------------- errors

Vec2 reported_gradient(MethodId method, double uh, const Vec2& grad_uh, const QuadPointGeom& g,
                       const PointCoefficients& c) {
  if (method == MethodId::Mix0)
    return (g.phi * grad_uh + (uh - c.g_bar) * g.grad_phi) / std::max(g.phi, 0.5);
  if (method == MethodId::Mix1)
    return g.phi * grad_uh + 2.0 * (uh - c.g_bar) * g.grad_phi + g.omphi * c.grad_g_bar;
  return grad_uh;
}

MaskedNorms masked_error(const FeFunction& uh, const GeometryCache& cache, const ExactSolution& exact,
                         MethodId method, const CoefficientFn& coeffs) {
  const FeSpace& space = *uh.space;
  const BasisTable table(space.dim(), space.order(), cache.rule());
  const int n = table.n();
  double l2 = 0.0, h1 = 0.0;
  PointCoefficients pc;
  for (int c = 0; c < space.mesh().num_cells(); ++c) {
    const auto dofs = space.cell_dofs(c);
    const CellMap& cm = cache.map(c);
    for (int q = 0; q < cache.points_per_cell(); ++q) {
      const QuadPointGeom& g = cache.at(c, q);
      if (g.r > 0.0) continue;
      double u = 0.0;
      Vec2 du = Vec2::Zero();
      for (int k = 0; k < n; ++k) {
        const double ck = uh.coeffs[dofs[k]];
        u += ck * table.value(q, k);
        du += ck * table.ref_grad(q, k);
      }
      du = cm.physical_gradient(du);
      Vec2 sigma = du;
      if (is_mixed(method)) {
        coeffs(c, q, g, pc);
        sigma = reported_gradient(method, u, du, g, pc);
      }
      const double e = exact.u(g.x) - u;
      l2 += g.w * e * e;
      h1 += g.w * (exact.grad_u(g.x) - sigma).squaredNorm();
    }
  }
  MaskedNorms out;
  out.eL2 = std::sqrt(l2);
  out.eH1_semi = std::sqrt(h1);
  out.eH1 = out.eL2 + out.eH1_semi;
  return out;
}

std::vector<double> eoc(const std::vector<double>& errors, const std::vector<double>& hs) {
  if (errors.size() != hs.size()) throw std::invalid_argument("eoc: size mismatch");
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i)
    out.push_back(std::log(errors[i] / errors[i + 1]) / std::log(hs[i] / hs[i + 1]));
  return out;
}

// ---------------------------------------------------------------- manufactured

namespace manufactured {

double u(const Vec2& x) { return std::cos(kKx * x.x()) * std::cos(kKy * x.y()); }

Vec2 grad_u(const Vec2& x) {
  return {-kKx * std::sin(kKx * x.x()) * std::cos(kKy * x.y()), -kKy * std::cos(kKx * x.x()) * std::sin(kKy * x.y())};
}

double laplace_u(const Vec2& x) { return -(kKx * kKx + kKy * kKy) * u(x); }

double D(const Vec2& x) { return 1.0 + x.norm(); }

Vec2 grad_D(const Vec2& x) {
  const double n = x.norm();
  return n > 0.0 ? Vec2(x / n) : Vec2::Zero();
}

double forcing(const Vec2& x, const Vec2& b) {
  const Vec2 du = grad_u(x);
  return -D(x) * laplace_u(x) - grad_D(x).dot(du) + b.dot(du);
}

}  // namespace manufactured

// ---------------------------------------------------------------- levels

std::string domain_name(StudyDomain d) {
  switch (d) {
    case StudyDomain::Arc: return "arc";
    case StudyDomain::InvertedArc: return "inverted-arc";
    case StudyDomain::Circle: return "circle";
  }
  return "unknown";
}

StudyDomain parse_domain(const std::string& name) {
  for (StudyDomain d : {StudyDomain::Arc, StudyDomain::InvertedArc, StudyDomain::Circle})
    if (domain_name(d) == name) return d;
  throw std::invalid_argument("unknown study domain '" + name + "'");
}

StudyLevel make_study_level(StudyDomain domain, double h, double eps_factor, double margin_factor) {
  StudyLevel level;
  level.eps = eps_factor * h;
  const double leg = h / std::sqrt(2.0);
  if (domain == StudyDomain::InvertedArc) {
    // The arc is cut out of the square [-1, 1]^2, whose sides stay fitted.
    const auto arc = make_shape(study_arc_spec());
    level.shape = std::make_shared<Complement>(arc);
    const int n = static_cast<int>(std::ceil(2.0 / leg - 1e-9));
    level.mesh = std::make_shared<const Mesh>(uniform_box(Vec2(-1.0, -1.0), Vec2(1.0, 1.0), n, n));
    level.fitted_outer = true;
  } else {
    double outer = 0.0;
    if (domain == StudyDomain::Arc) {
      level.shape = make_shape(study_arc_spec());
      outer = 0.75;
    } else {
      level.shape = std::make_shared<Circle>(Vec2::Zero(), 0.5);
      outer = 0.5;
    }
    // Box half width at least outer + margin, rounded up to whole cells so
    // that the mesh size is exactly h.
    const int n = static_cast<int>(std::ceil(2.0 * (outer + margin_factor * level.eps) / leg - 1e-9));
    const double L = 0.5 * n * leg;
    level.mesh = std::make_shared<const Mesh>(uniform_box(Vec2(-L, -L), Vec2(L, L), n, n));
  }
  level.pf = std::make_shared<const PhaseField>(level.shape, level.eps);
  return level;
}

Vec2 study_advection(const Vec2& x) { return -100.0 * Vec2(x.y(), x.x()); }

SolveResult solve_manufactured(const StudyLevel& level, const MethodSpec& method, int order, bool advection) {
  auto space = std::make_shared<const FeSpace>(level.mesh, order);
  auto cache = std::make_shared<const GeometryCache>(level.mesh, level.pf, quadrature_for(2, order, FormKind::Diffuse));
  ProblemData data;
  data.D = manufactured::D;
  if (advection) data.b = study_advection;
  data.f = [advection](const Vec2& x) {
    return manufactured::forcing(x, advection ? study_advection(x) : Vec2::Zero());
  };
  data.g = manufactured::u;
  const CoefficientFn coeffs = coefficients_from(data, level.pf.get(), method.id == MethodId::Mix1);
  FeSystem sys = assemble(method, space, *cache, coeffs, advection);
  const PhaseField& pf = *level.pf;
  const bool fitted = level.fitted_outer;
  apply_constraints(sys, dirichlet(*space, space->boundary_dofs(), [&](const Vec2& x) {
                      return fitted ? manufactured::u(x) : manufactured::u(pf.project(x));
                    }));
  FeFunction uh = solve(sys);
  return {std::move(uh), std::move(sys), cache, coeffs};
}

std::vector<StudyRow> run_study(const StudySpec& spec) {
  std::vector<StudyRow> rows;
  const ExactSolution exact{manufactured::u, manufactured::grad_u};
  for (StudyDomain domain : spec.domains) {
    std::vector<StudyLevel> levels;
    for (int k = 0; k < spec.levels; ++k)
      levels.push_back(make_study_level(domain, spec.h0 / std::pow(std::sqrt(2.0), k), spec.eps_factor,
                                        spec.margin_factor));
    for (MethodId id : spec.methods) {
      for (int order : spec.orders) {
        const MethodSpec method{id, spec.naive_advection};
        std::vector<double> hs, l2, h1;
        const std::size_t first = rows.size();
        for (const StudyLevel& level : levels) {
          SolveResult res = solve_manufactured(level, method, order, spec.advection);
          const MaskedNorms err = masked_error(res.uh, *res.cache, exact, id, res.coeffs);
          StudyRow row;
          row.domain = domain;
          row.method = id;
          row.order = order;
          row.h = level.mesh->h;
          row.eps = level.eps;
          row.eL2 = err.eL2;
          row.eH1 = err.eH1;
          row.dofs = res.uh.space->num_dofs();
          rows.push_back(row);
          hs.push_back(row.h);
          l2.push_back(err.eL2);
          h1.push_back(err.eH1);
        }
        const auto e2 = eoc(l2, hs);
        const auto e1 = eoc(h1, hs);
        for (std::size_t i = 0; i < e2.size(); ++i) {
          rows[first + i + 1].eocL2 = e2[i];
          rows[first + i + 1].eocH1 = e1[i];
        }
      }
    }
  }
  return rows;
}

void write_study_csv(const std::string& path, const std::vector<StudyRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "method,order,h,eps,eL2,eocL2,eH1,eocH1\n" << std::setprecision(15);
  for (const auto& r : rows)
    out << method_name(r.method) << ',' << r.order << ',' << r.h << ',' << r.eps << ',' << r.eL2 << ',' << r.eocL2
        << ',' << r.eH1 << ',' << r.eocH1 << '\n';
}

// ---------------------------------------------------------------- audits

std::vector<CoercivityRow> coercivity_audit(const std::vector<MethodId>& methods, bool naive, double h,
                                            double eps_factor, std::uint64_t seed, int probes) {
  const StudyLevel level = make_study_level(StudyDomain::Arc, h, eps_factor);
  auto space = std::make_shared<const FeSpace>(level.mesh, 1);
  const GeometryCache cache(level.mesh, level.pf, quadrature_for(2, 1, FormKind::Diffuse));
  ProblemData data;
  data.b = study_advection;
  std::vector<CoercivityRow> rows;
  for (MethodId id : methods) {
    const CoefficientFn coeffs = coefficients_from(data, level.pf.get(), id == MethodId::Mix1);
    FeSystem sys = assemble({id, naive}, space, cache, coeffs, true);
    CoercivityRow row;
    row.method = id;
    row.naive = naive;
    row.dofs = space->num_dofs();
    row.asymmetry = asymmetry_ratio(assemble({id, naive}, space, cache, coeffs, false).A);
    apply_constraints(sys, dirichlet(*space, space->boundary_dofs(), [](const Vec2&) { return 0.0; }));
    row.min_eig = sym_min_eig(sys, true);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    row.probe_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k < probes; ++k) {
      Eigen::VectorXd x(sys.A.rows());
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = sys.constrained[i] ? 0.0 : normal(rng);
      row.probe_min = std::min(row.probe_min, quadratic_form(sys.A, x) / x.squaredNorm());
    }
    rows.push_back(row);
  }
  return rows;
}

NaiveAdvectionExample naive_advection_example(MethodId method, bool naive, int exactness) {
  auto mesh = std::make_shared<const Mesh>(interval_mesh(-0.675, 0.675, 0.01));
  auto shape = make_shape(ShapeSpec{BoxSpec{Vec2(-0.5, -10.0), Vec2(0.5, 10.0)}});
  auto pf = std::make_shared<const PhaseField>(shape, 0.035);
  auto space = std::make_shared<const FeSpace>(mesh, 1);
  const GeometryCache cache(mesh, pf, interval_rule(exactness));
  ProblemData data;
  data.D = [](const Vec2&) { return 1e-4; };
  data.b = [](const Vec2&) { return Vec2(1.0, 0.0); };
  FeSystem sys = assemble({method, naive}, space, cache, coefficients_from(data, pf.get(), method == MethodId::Mix1),
                          true);
  NaiveAdvectionExample ex;
  ex.x16 = space->dof_coords()[16].x();
  ex.x119 = space->dof_coords()[119].x();
  ex.a = sys.A.coeff(16, 16);
  ex.b = sys.A.coeff(16, 119) + sys.A.coeff(119, 16);
  ex.c = sys.A.coeff(119, 119);
  ex.A = sys.A;
  const double disc = ex.b * ex.b - 4.0 * ex.a * ex.c;
  if (ex.c != 0.0 && disc >= 0.0) {
    const double s = std::sqrt(disc);
    double best = std::numeric_limits<double>::infinity();
    for (double t : {(-ex.b - s) / (2.0 * ex.c), (-ex.b + s) / (2.0 * ex.c)})
      if (t > 0.0) best = std::min(best, t);
    if (std::isfinite(best)) ex.root = best;
  }
  apply_constraints(sys, dirichlet(*space, space->boundary_dofs(), [](const Vec2&) { return 0.0; }));
  ex.min_eig = sym_min_eig(sys, true);
  return ex;
}

double constant_solution_error(MethodId method, int order, double c, double h) {
  const StudyLevel level = make_study_level(StudyDomain::Arc, h);
  auto space = std::make_shared<const FeSpace>(level.mesh, order);
  const GeometryCache cache(level.mesh, level.pf, quadrature_for(2, order, FormKind::Diffuse));
  ProblemData data;
  data.g = [c](const Vec2&) { return c; };
  data.grad_g = [](const Vec2&) { return Vec2(0.0, 0.0); };
  FeSystem sys = assemble({method, false}, space, cache, coefficients_from(data, level.pf.get()), false);
  apply_constraints(sys, dirichlet(*space, space->boundary_dofs(), [c](const Vec2&) { return c; }));
  const FeFunction uh = solve(sys);
  return (uh.coeffs.array() - c).abs().maxCoeff();
}

// ---------------------------------------------------------------- searchlight

double searchlight_boundary(const Vec2& x) {
  const double rho = x.norm();
  return (rho > 0.35 && rho < 0.65 && x.y() > 0.0) ? 0.5 : -0.5;
}

Vec2 searchlight_velocity(const Vec2& x) { return {-x.y(), x.x()}; }

double searchlight_expected(const Vec2& x) {
  const double rho = x.norm();
  return (rho > 0.35 && rho < 0.65) ? 0.5 : -0.5;
}

SearchlightResult run_searchlight(MethodId method, double h, int order, double D, int samples) {
  const StudyLevel level = make_study_level(StudyDomain::Arc, h);
  auto space = std::make_shared<const FeSpace>(level.mesh, order);
  const GeometryCache cache(level.mesh, level.pf, quadrature_for(2, order, FormKind::Diffuse));
  ProblemData data;
  data.D = [D](const Vec2&) { return D; };
  data.b = searchlight_velocity;
  data.g = searchlight_boundary;
  const MethodSpec spec{method, false};
  FeSystem sys = assemble(spec, space, cache, coefficients_from(data, level.pf.get(), method == MethodId::Mix1), true);
  const PhaseField& pf = *level.pf;
  apply_constraints(sys, dirichlet(*space, space->boundary_dofs(),
                                   [&](const Vec2& x) { return searchlight_boundary(pf.project(x)); }));
  SearchlightResult res{method, level.mesh->h, level.eps, {}, solve(sys)};
  const Vec2 a(-0.7, -0.8), b(0.1, 0.8);
  for (int i = 0; i < samples; ++i) {
    LineSample s;
    s.t = samples > 1 ? static_cast<double>(i) / (samples - 1) : 0.0;
    s.x = a + s.t * (b - a);
    s.value = res.uh.value(s.x);
    s.r = level.shape->distance(s.x);
    s.expected = s.r <= 0.0 ? searchlight_expected(s.x) : searchlight_boundary(pf.project(s.x));
    res.samples.push_back(s);
  }
  return res;
}

PlateauStats plateau_stats(const SearchlightResult& res, double tol, double layer) {
  PlateauStats st;
  double dev = 0.0;
  for (const auto& s : res.samples) {
    if (s.t < 0.5 && s.r <= 0.0) {
      dev += std::abs(s.value - s.expected);
      ++st.downwind_count;
    }
    if (std::abs(s.r) < res.eps) continue;
    const double rho = s.x.norm();
    if (s.r < 0.0 && (std::abs(rho - 0.35) < layer || std::abs(rho - 0.65) < layer)) continue;
    ++st.considered;
    if (std::abs(s.value - s.expected) <= tol) {
      ++st.within;
      ++(s.expected > 0.0 ? st.within_high : st.within_low);
    }
  }
  st.fraction = st.considered ? static_cast<double>(st.within) / st.considered : 0.0;
  st.downwind_deviation = st.downwind_count ? dev / st.downwind_count : 0.0;
  return st;
}

void write_samples_csv(const std::string& path, const std::vector<LineSample>& samples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "t,value\n" << std::setprecision(15);
  for (const auto& s : samples) out << s.t << ',' << s.value << '\n';
}

}  // namespace ddfem
