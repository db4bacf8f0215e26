#include "ddfem/formulations.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace ddfem {

std::string method_name(MethodId id) {
  switch (id) {
    case MethodId::DDM1: return "ddm1";
    case MethodId::DDM2: return "ddm2";
    case MethodId::SBM: return "sbm";
    case MethodId::NDDM: return "nddm";
    case MethodId::NSDDM: return "nsddm";
    case MethodId::Mix0: return "mix0";
    case MethodId::Mix1: return "mix1";
  }
  return "unknown";
}

MethodId parse_method(const std::string& name) {
  std::string key = name;
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
  if (key == "mix0ddm") key = "mix0";
  if (key == "mix1ddm") key = "mix1";
  for (MethodId id : all_methods())
    if (method_name(id) == key) return id;
  throw std::invalid_argument("unknown method '" + name + "'");
}

const std::vector<MethodId>& all_methods() {
  static const std::vector<MethodId> ids{MethodId::DDM1, MethodId::DDM2, MethodId::SBM, MethodId::NDDM,
                                         MethodId::NSDDM, MethodId::Mix0, MethodId::Mix1};
  return ids;
}

bool is_mixed(MethodId id) { return id == MethodId::Mix0 || id == MethodId::Mix1; }

bool is_symmetric(MethodId id) { return id == MethodId::DDM1 || id == MethodId::NSDDM; }

double forcing_weight(MethodId id, double phi) {
  return (id == MethodId::SBM || id == MethodId::Mix0) ? phi * phi : phi;
}

// ---------------------------------------------------------------- diffusion

Densities ddm1(const IntegrandSample& s) {
  const double pen = s.D / (s.eps * s.eps * s.eps) * s.omphi;
  return {s.phi * s.D * s.grad_u.dot(s.grad_v) + pen * s.u * s.v, s.phi * s.f_bar * s.v + pen * s.g_bar * s.v};
}

Densities ddm2(const IntegrandSample& s) {
  const double pen = s.D / (s.eps * s.eps) * s.omphi;
  const Vec2 grad_phiv = s.phi * s.grad_v + s.v * s.grad_phi;
  return {s.D * s.grad_u.dot(grad_phiv) + pen * s.u * s.v, s.phi * s.f_bar * s.v + pen * s.g_bar * s.v};
}

Densities sbm(const IntegrandSample& s) {
  const double pen = s.D / (s.eps * s.eps) * s.omphi;
  const Vec2 grad_phiv = s.phi * s.grad_v + s.v * s.grad_phi;
  const Vec2 grad_phiu = s.phi * s.grad_u + s.u * s.grad_phi;
  const double a = s.phi * s.D * s.grad_u.dot(grad_phiv) + s.D * s.grad_phi.dot(grad_phiu) * s.v + pen * s.u * s.v;
  const double l = s.phi * s.phi * s.f_bar * s.v + s.D * s.grad_phi.squaredNorm() * s.g_bar * s.v +
                   pen * s.g_bar * s.v;
  return {a, l};
}

Densities nddm(const IntegrandSample& s) {
  Densities d = ddm2(s);
  const double beta = 1.5 * s.D / s.eps * s.omphi * s.grad_phi.norm();
  d.a += beta * s.u * s.v;
  d.l += beta * s.g_bar * s.v;
  return d;
}

Densities nsddm(const IntegrandSample& s) {
  Densities d = ddm2(s);
  const double beta = 6.0 * s.D / s.eps * s.omphi * s.grad_phi.norm();
  const double sym = s.D * s.grad_phi.dot(s.grad_v);
  d.a += s.u * sym + beta * s.u * s.v;
  d.l += s.g_bar * sym + beta * s.g_bar * s.v;
  return d;
}

Densities mix0(const IntegrandSample& s) {
  const double pen = s.D / (s.eps * s.eps) * s.omphi * s.omphi;
  const double stab = 0.25 * s.D * s.grad_phi.squaredNorm();
  const Vec2 grad_phiu = s.phi * s.grad_u + s.u * s.grad_phi;
  const Vec2 test = s.phi * s.grad_v + 2.0 * s.v * s.grad_phi;
  const double a = s.D * grad_phiu.dot(test) + (pen + stab) * s.u * s.v;
  const double l = s.D * s.g_bar * s.grad_phi.dot(test) + (pen + stab) * s.g_bar * s.v +
                   s.phi * s.phi * s.f_bar * s.v;
  return {a, l};
}

Densities mix1(const IntegrandSample& s) {
  const double pen = s.D / (s.eps * s.eps) * s.omphi;
  const double stab = 0.25 * s.D * s.grad_phi.squaredNorm();
  const Vec2 grad_phiv = s.phi * s.grad_v + s.v * s.grad_phi;
  const Vec2 trial = s.phi * s.grad_u + 2.0 * s.u * s.grad_phi;
  const Vec2 data = 2.0 * s.g_bar * s.grad_phi - s.omphi * s.grad_g_bar;
  const double a = s.D * trial.dot(grad_phiv) + (pen + stab) * s.u * s.v;
  const double l = s.D * data.dot(grad_phiv) + (pen + stab) * s.g_bar * s.v + s.phi * s.f_bar * s.v;
  return {a, l};
}

Densities diffusion_terms(MethodId id, const IntegrandSample& s) {
  switch (id) {
    case MethodId::DDM1: return ddm1(s);
    case MethodId::DDM2: return ddm2(s);
    case MethodId::SBM: return sbm(s);
    case MethodId::NDDM: return nddm(s);
    case MethodId::NSDDM: return nsddm(s);
    case MethodId::Mix0: return mix0(s);
    case MethodId::Mix1: return mix1(s);
  }
  throw std::logic_error("unhandled method");
}

// ---------------------------------------------------------------- advection

Densities advection_terms(const MethodSpec& method, const IntegrandSample& s) {
  const double w = s.b.dot(s.grad_phi);
  switch (method.id) {
    case MethodId::DDM1:
    case MethodId::DDM2:
    case MethodId::NDDM:
    case MethodId::NSDDM: {
      Densities d{s.phi * s.b.dot(s.grad_u) * s.v + s.phi * s.m * s.u * s.v, 0.0};
      if (!method.naive_advection) {
        d.a += positive_part(w) * s.u * s.v;
        d.l += positive_part(w) * s.g_bar * s.v;
      }
      return d;
    }
    case MethodId::SBM: {
      const double p2 = s.phi * s.phi;
      Densities d{p2 * s.b.dot(s.grad_u) * s.v + p2 * s.m * s.u * s.v, 0.0};
      if (!method.naive_advection) {
        d.a += s.phi * positive_part(w) * s.u * s.v;
        d.l += s.phi * positive_part(w) * s.g_bar * s.v;
      }
      return d;
    }
    case MethodId::Mix0: {
      const Vec2 grad_phiu = s.phi * s.grad_u + s.u * s.grad_phi;
      return {s.phi * s.b.dot(grad_phiu) * s.v + s.phi * s.phi * s.m * s.u * s.v, s.phi * w * s.g_bar * s.v};
    }
    case MethodId::Mix1: {
      const Vec2 trial = s.phi * s.grad_u + 2.0 * s.u * s.grad_phi;
      const Vec2 data = 2.0 * s.g_bar * s.grad_phi - s.omphi * s.grad_g_bar;
      const double outflow = -s.phi * negative_part(w);
      return {s.phi * trial.dot(s.b) * s.v + outflow * s.u * s.v + s.phi * s.m * s.u * s.v,
              s.phi * data.dot(s.b) * s.v + outflow * s.g_bar * s.v};
    }
  }
  throw std::logic_error("unhandled method");
}

Densities method_densities(const MethodSpec& method, const IntegrandSample& s, bool with_advection) {
  Densities d = diffusion_terms(method.id, s);
  if (with_advection) d += advection_terms(method, s);
  return d;
}

// ---------------------------------------------------------------- auxiliary

Densities neumann_ddm(const IntegrandSample& s, double p_neumann) {
  return {s.phi * s.D * s.grad_u.dot(s.grad_v), s.phi * s.f_bar * s.v - p_neumann * s.grad_phi.norm() * s.v};
}

double ns_gradient_density(MethodId momentum, double phi, double dp_dc, double v) {
  return forcing_weight(momentum, phi) * dp_dc * v;
}

double ns_divergence_density(double phi, const Vec2& grad_phi, const Vec2& u, const Vec2& g_bar, double q,
                             const Vec2& grad_q) {
  return phi * u.dot(grad_q) + g_bar.dot(grad_phi) * q;
}

}  // namespace ddfem
