#include "ddfem/formulations.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace ddfem;

namespace {

// Random sample inside the diffuse interface of a unit-speed profile.
IntegrandSample random_sample(std::mt19937_64& rng, bool with_b = true) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  IntegrandSample s;
  s.eps = 0.05 + 0.1 * std::abs(U(rng));
  const double r = 3.5 * s.eps * U(rng);
  s.phi = 1.0 / (1.0 + std::exp(6.0 * r / s.eps));
  s.omphi = 1.0 - s.phi;
  const double ang = M_PI * U(rng);
  s.grad_phi = -(6.0 / s.eps) * s.phi * s.omphi * Vec2(std::cos(ang), std::sin(ang));
  s.u = U(rng);
  s.grad_u = Vec2(U(rng), U(rng));
  s.v = U(rng);
  s.grad_v = Vec2(U(rng), U(rng));
  s.g_bar = U(rng);
  s.grad_g_bar = Vec2(U(rng), U(rng));
  s.f_bar = U(rng);
  s.D = 0.5 + std::abs(U(rng));
  s.b = with_b ? Vec2(3.0 * U(rng), 3.0 * U(rng)) : Vec2::Zero();
  s.m = std::abs(U(rng));
  return s;
}

IntegrandSample fitted(IntegrandSample s) {
  s.phi = 1.0;
  s.omphi = 0.0;
  s.grad_phi = Vec2::Zero();
  return s;
}

}  // namespace

TEST(Formulations, NamesRoundTrip) {
  for (MethodId m : all_methods()) EXPECT_EQ(parse_method(method_name(m)), m);
  EXPECT_EQ(all_methods().size(), 7u);
  EXPECT_THROW(parse_method("ddm3"), std::invalid_argument);
  EXPECT_EQ(parse_method("Mix0"), MethodId::Mix0);
}

TEST(Formulations, ReduceToStrongFormInsideDomain) {
  // With phi = 1 and grad phi = 0 every method is D grad u . grad v + b . grad u v + m u v.
  std::mt19937_64 rng(1);
  for (int k = 0; k < 200; ++k) {
    const IntegrandSample s = fitted(random_sample(rng));
    const double a = s.D * s.grad_u.dot(s.grad_v) + s.b.dot(s.grad_u) * s.v + s.m * s.u * s.v;
    const double l = s.f_bar * s.v;
    for (MethodId m : all_methods()) {
      const Densities d = method_densities({m, false}, s, true);
      EXPECT_NEAR(d.a, a, 1e-13) << method_name(m);
      EXPECT_NEAR(d.l, l, 1e-13) << method_name(m);
    }
  }
}

TEST(Formulations, SymmetricMethodsAreSymmetric) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 500; ++k) {
    IntegrandSample s = random_sample(rng, false);
    IntegrandSample t = s;
    std::swap(t.u, t.v);
    std::swap(t.grad_u, t.grad_v);
    for (MethodId m : all_methods()) {
      if (!is_symmetric(m)) continue;
      EXPECT_NEAR(diffusion_terms(m, s).a, diffusion_terms(m, t).a, 1e-12 * (1.0 + std::abs(diffusion_terms(m, s).a)))
          << method_name(m);
    }
  }
  EXPECT_TRUE(is_symmetric(MethodId::DDM1));
  EXPECT_TRUE(is_symmetric(MethodId::NSDDM));
  EXPECT_FALSE(is_symmetric(MethodId::Mix0));
}

TEST(Formulations, Ddm2Example) {
  IntegrandSample s;
  s.phi = 0.5;
  s.omphi = 0.5;
  s.eps = 0.1;
  s.D = 1.0;
  s.u = 1.0;
  s.v = 1.0;
  s.g_bar = 2.0;
  s.grad_u = s.grad_v = Vec2::Zero();
  const Densities d = ddm2(s);
  // (D / eps^2) (1 - phi) u v = 0.5 / 0.01.
  EXPECT_NEAR(d.a, 50.0, 1e-12);
  EXPECT_NEAR(d.l, 100.0, 1e-12);
}

TEST(Formulations, NddmReducesToDdm2WithoutPhaseGradient) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 100; ++k) {
    IntegrandSample s = random_sample(rng, false);
    s.grad_phi = Vec2::Zero();
    EXPECT_NEAR(nddm(s).a, ddm2(s).a, 1e-12);
    EXPECT_NEAR(nddm(s).l, ddm2(s).l, 1e-12);
  }
}

TEST(Formulations, Mix1MinusMix0BoundaryTerm) {
  // The penalty differs by (D / eps^2) (1 - phi) phi u v.
  std::mt19937_64 rng(4);
  for (int k = 0; k < 200; ++k) {
    IntegrandSample s = random_sample(rng, false);
    s.u = 1.0;
    s.grad_u = Vec2::Zero();
    s.v = 1.0;
    s.grad_v = Vec2::Zero();
    const double pen1 = s.D / (s.eps * s.eps) * s.omphi;
    const double pen0 = pen1 * s.omphi;
    const double stab = 0.25 * s.D * s.grad_phi.squaredNorm();
    const double gp2 = s.grad_phi.squaredNorm();
    // Trial/test structure of the two variants with u = v = 1.
    const double a1 = s.D * 2.0 * s.grad_phi.dot(s.grad_phi) + pen1 + stab;
    const double a0 = s.D * gp2 * 2.0 + pen0 + stab;
    EXPECT_NEAR(mix1(s).a - mix0(s).a, a1 - a0, 1e-9 * (1.0 + std::abs(a1)));
    EXPECT_NEAR(a1 - a0, s.D / (s.eps * s.eps) * s.omphi * s.phi, 1e-9 * (1.0 + std::abs(a1)));
  }
}

TEST(Formulations, ConstantSolutionIdentityPointwise) {
  // With g = c, f = 0 and u = c the densities satisfy a(c, v) = l(v) at every point.
  std::mt19937_64 rng(5);
  for (int k = 0; k < 500; ++k) {
    IntegrandSample s = random_sample(rng);
    const double c = 1.7;
    s.u = c;
    s.g_bar = c;
    s.grad_u = Vec2::Zero();
    s.grad_g_bar = Vec2::Zero();
    s.f_bar = 0.0;
    s.m = 0.0;
    for (MethodId m : all_methods()) {
      for (bool naive : {false, true}) {
        if (naive && (m == MethodId::Mix0 || m == MethodId::Mix1)) continue;
        const Densities d = method_densities({m, naive}, s, true);
        EXPECT_NEAR(d.a, d.l, 1e-9 * (1.0 + std::abs(d.a))) << method_name(m) << (naive ? " naive" : "");
      }
    }
  }
}

TEST(Formulations, PositiveAndNegativeParts) {
  for (double w : {-2.5, -1e-300, 0.0, 1e-300, 3.0}) {
    EXPECT_EQ(positive_part(w) + negative_part(w), w);
    EXPECT_GE(positive_part(w), 0.0);
    EXPECT_LE(negative_part(w), 0.0);
    EXPECT_EQ(positive_part(w) * negative_part(w), 0.0);
  }
}

TEST(Formulations, StabilisedMinusNaiveIsInflowTerm) {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 300; ++k) {
    const IntegrandSample s = random_sample(rng);
    const double w = positive_part(s.b.dot(s.grad_phi));
    for (MethodId m : {MethodId::DDM1, MethodId::DDM2, MethodId::NDDM, MethodId::NSDDM}) {
      const double diff = advection_terms({m, false}, s).a - advection_terms({m, true}, s).a;
      EXPECT_NEAR(diff, w * s.u * s.v, 1e-12 * (1.0 + std::abs(diff)));
    }
    const double diff = advection_terms({MethodId::SBM, false}, s).a - advection_terms({MethodId::SBM, true}, s).a;
    EXPECT_NEAR(diff, s.phi * w * s.u * s.v, 1e-12 * (1.0 + std::abs(diff)));
  }
}

TEST(Formulations, Mix0DiagonalBoundByPenalty) {
  // Without advection, a(u, u) >= (D / eps^2) (1 - phi)^2 u^2 pointwise.
  std::mt19937_64 rng(7);
  for (int k = 0; k < 10000; ++k) {
    IntegrandSample s = random_sample(rng, false);
    s.v = s.u;
    s.grad_v = s.grad_u;
    const double bound = s.D / (s.eps * s.eps) * s.omphi * s.omphi * s.u * s.u;
    EXPECT_GE(mix0(s).a, bound - 1e-12 * (1.0 + bound));
  }
}

TEST(Formulations, NeumannKernel) {
  IntegrandSample s;
  s.phi = 0.25;
  s.grad_phi = Vec2(3.0, 4.0);
  s.D = 2.0;
  s.grad_u = Vec2(1.0, 0.0);
  s.grad_v = Vec2(0.5, 1.0);
  s.v = 2.0;
  s.f_bar = 1.0;
  const Densities d = neumann_ddm(s, 0.1);
  EXPECT_NEAR(d.a, 0.25 * 2.0 * 0.5, 1e-15);
  EXPECT_NEAR(d.l, 0.25 * 1.0 * 2.0 - 0.1 * 5.0 * 2.0, 1e-15);
}

TEST(Formulations, NavierStokesCouplings) {
  EXPECT_NEAR(ns_gradient_density(MethodId::NSDDM, 0.5, 2.0, 3.0), 3.0, 1e-15);
  EXPECT_NEAR(ns_gradient_density(MethodId::Mix0, 0.5, 2.0, 3.0), 1.5, 1e-15);
  EXPECT_EQ(forcing_weight(MethodId::SBM, 0.5), 0.25);
  EXPECT_EQ(forcing_weight(MethodId::DDM1, 0.5), 0.5);
  const double d = ns_divergence_density(0.5, Vec2(1.0, 2.0), Vec2(3.0, -1.0), Vec2(0.5, 0.5), 2.0, Vec2(1.0, 1.0));
  EXPECT_NEAR(d, 0.5 * 2.0 + 1.5 * 2.0, 1e-15);
}
