#pragma once

#include "ddfem/geometry.hpp"

#include <string>
#include <vector>

namespace ddfem {

enum class MethodId { DDM1, DDM2, SBM, NDDM, NSDDM, Mix0, Mix1 };

struct MethodSpec {
  MethodId id = MethodId::NSDDM;
  // Drops the upwind [b.grad phi] terms (DDM family and SBM only).
  bool naive_advection = false;
};

std::string method_name(MethodId id);
MethodId parse_method(const std::string& name);
const std::vector<MethodId>& all_methods();

bool is_mixed(MethodId id);
/// Methods whose bilinear form is symmetric without advection.
bool is_symmetric(MethodId id);
/// Weight multiplying f in the linear form: phi or phi^2.
double forcing_weight(MethodId id, double phi);

// Per-point state consumed by every density. omphi carries 1 - phi computed
// without cancellation.
struct IntegrandSample {
  double phi = 1.0;
  double omphi = 0.0;
  Vec2 grad_phi = Vec2::Zero();
  double u = 0.0;
  Vec2 grad_u = Vec2::Zero();
  double v = 0.0;
  Vec2 grad_v = Vec2::Zero();
  double g_bar = 0.0;
  Vec2 grad_g_bar = Vec2::Zero();
  double f_bar = 0.0;
  double D = 1.0;
  Vec2 b = Vec2::Zero();
  double m = 0.0;
  double eps = 1.0;
};

struct Densities {
  double a = 0.0;
  double l = 0.0;

  Densities& operator+=(const Densities& o) {
    a += o.a;
    l += o.l;
    return *this;
  }
};

inline double positive_part(double w) { return w > 0.0 ? w : 0.0; }
inline double negative_part(double w) { return w < 0.0 ? w : 0.0; }

Densities ddm1(const IntegrandSample& s);
Densities ddm2(const IntegrandSample& s);
Densities sbm(const IntegrandSample& s);
Densities nddm(const IntegrandSample& s);
Densities nsddm(const IntegrandSample& s);
Densities mix0(const IntegrandSample& s);
Densities mix1(const IntegrandSample& s);

/// Diffusion, boundary-condition and forcing part of a method.
Densities diffusion_terms(MethodId id, const IntegrandSample& s);

/// Advection and mass part of a method, including its inflow/outflow terms
/// unless the naive flag removes them.
Densities advection_terms(const MethodSpec& method, const IntegrandSample& s);

/// Full advection-diffusion densities.
Densities method_densities(const MethodSpec& method, const IntegrandSample& s, bool with_advection);

/// phi-weighted Neumann problem: a = phi D grad p . grad q,
/// l = phi f q - pN |grad phi| q.
Densities neumann_ddm(const IntegrandSample& s, double p_neumann);

/// Pressure-gradient coupling w(phi) dp/dx_c v for one velocity component.
double ns_gradient_density(MethodId momentum, double phi, double dp_dc, double v);

/// Integrand of the diffuse divergence phi u . grad q + g_bar . grad phi q.
double ns_divergence_density(double phi, const Vec2& grad_phi, const Vec2& u, const Vec2& g_bar, double q,
                             const Vec2& grad_q);

}  // namespace ddfem
