#include "ddfem/navierstokes.hpp"
#include "ddfem/phasefield.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace ddfem;

namespace {

PhaseField circle_field(double eps, double R = 0.5) {
  return PhaseField(std::make_shared<Circle>(Vec2::Zero(), R), eps);
}

}  // namespace

TEST(PhaseField, ProfileValues) {
  const double eps = 0.05;
  EXPECT_EQ(PhaseField::profile(0.0, eps), 0.5);
  EXPECT_NEAR(PhaseField::profile(eps, eps), 0.5 * (1.0 - std::tanh(3.0)), 1e-16);
  EXPECT_NEAR(PhaseField::profile(eps, eps), 2.4726231566347743e-3, 1e-15);
  EXPECT_NEAR(PhaseField::profile(-eps, eps), 0.9975273768433653, 1e-15);
  EXPECT_NEAR(PhaseField::profile_complement(-eps, eps), PhaseField::profile(eps, eps), 1e-18);
}

TEST(PhaseField, ProfileMonotoneInsideOpenInterval) {
  const double eps = 0.1;
  double prev = 1.0;
  for (double r = -3.5 * eps; r <= 3.5 * eps; r += eps / 50.0) {
    const double p = PhaseField::profile(r, eps);
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
    EXPECT_LT(p, prev);
    prev = p;
  }
}

TEST(PhaseField, GradientIdentityAndFiniteDifferences) {
  const ShapePtr arc = make_shape(study_arc_spec());
  const double eps = 0.05;
  PhaseField pf(arc, eps);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  int checked = 0;
  while (checked < 1000) {
    const Vec2 x(U(rng), U(rng));
    const double r = arc->distance(x);
    if (std::abs(r) > 3.5 * eps) continue;
    const Vec2 gr = arc->gradient(x);
    if (std::abs(gr.norm() - 1.0) > 1e-12) continue;
    const double phi = pf.phi(x);
    const Vec2 g = pf.grad_phi(x);
    const Vec2 expected = -(6.0 / eps) * phi * (1.0 - phi) * gr;
    EXPECT_LT((g - expected).norm(), 1e-12 * (1.0 + expected.norm()));
    Vec2 fd;
    const double h = 1e-6;
    for (int i = 0; i < 2; ++i) {
      Vec2 e = Vec2::Zero();
      e[i] = h;
      fd[i] = (pf.phi(x + e) - pf.phi(x - e)) / (2.0 * h);
    }
    // Skip the medial-axis neighbourhood where r is not differentiable.
    if (std::abs((arc->distance(x + Vec2(1e-3, 0)) - arc->distance(x - Vec2(1e-3, 0))) / 2e-3 - gr.x()) > 1e-2)
      continue;
    ++checked;
    if (g.norm() > 1e-3) EXPECT_LT((fd - g).norm() / g.norm(), 1e-6) << x.transpose();
  }
}

TEST(PhaseField, GradientAtInterface) {
  const double eps = 0.05;
  PhaseField pf = circle_field(eps);
  const Vec2 g = pf.grad_phi(Vec2(0.5, 0.0));
  EXPECT_NEAR(g.x(), -1.5 / eps, 1e-12);
  EXPECT_NEAR(g.y(), 0.0, 1e-12);
  // Deep interior: phi within 1e-9 of 1.
  const Vec2 x(0.0, 0.1);
  ASSERT_GE(pf.phi(x), 1.0 - kRegionThreshold);
  EXPECT_LT(pf.grad_phi(x).norm(), 6.0 * kRegionThreshold / eps);
}

TEST(PhaseField, SurfaceMeasureApproximatesPerimeter) {
  PhaseField pf = circle_field(0.05);
  // Midpoint rule on [-1, 1]^2 with cells far below eps.
  const int n = 1000;
  const double dx = 2.0 / n;
  double total = 0.0;
  Vec2 integral = Vec2::Zero();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Vec2 x(-1.0 + (i + 0.5) * dx, -1.0 + (j + 0.5) * dx);
      const Vec2 g = pf.grad_phi(x);
      total += g.norm() * dx * dx;
      integral += g * dx * dx;
    }
  EXPECT_NEAR(total / std::numbers::pi, 1.0, 0.02);
  EXPECT_LT(integral.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(PhaseField, DiffuseNormal) {
  PhaseField pf = circle_field(0.05);
  const Vec2 n = pf.diffuse_normal(Vec2(0.5, 0.0));
  EXPECT_NEAR(n.x(), 1.0, 1e-14);
  EXPECT_NEAR(n.y(), 0.0, 1e-14);
  PhaseField inv(std::make_shared<Complement>(std::make_shared<Circle>(Vec2::Zero(), 0.5)), 0.05);
  const Vec2 m = inv.diffuse_normal(Vec2(0.5, 0.0));
  EXPECT_NEAR(m.x(), -1.0, 1e-14);
  EXPECT_THROW(pf.diffuse_normal(Vec2(50.0, 0.0)), DegenerateGradientError);
}

TEST(PhaseField, RegionPartition) {
  const double eps = 0.05;
  PhaseField pf = circle_field(eps);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int k = 0; k < 2000; ++k) {
    const Vec2 x(U(rng), U(rng));
    const double phi = pf.phi(x);
    const RegionTag t = pf.region(x);
    if (phi >= 1.0 - kRegionThreshold) EXPECT_EQ(t, RegionTag::Interior);
    else if (phi <= kRegionThreshold) EXPECT_EQ(t, RegionTag::Exterior);
    else EXPECT_EQ(t, RegionTag::Interface);
  }
  // Interface width along a normal ray: 2 eps atanh(1 - 2 delta) / 3.
  for (double delta : {1e-3, 1e-6, 1e-9}) {
    const double expected = 2.0 * eps * std::atanh(1.0 - 2.0 * delta) / 3.0;
    EXPECT_NEAR(interface_width(eps, delta), expected, 1e-12);
    const int n = 200000;
    double lo = 1e300, hi = -1e300;
    for (int i = 0; i <= n; ++i) {
      const double r = -0.5 + i * 1.0 / n;
      if (pf.region(Vec2(0.5 + r, 0.0), delta) == RegionTag::Interface) {
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
    }
    EXPECT_NEAR(hi - lo, expected, 2.0 / n);
  }
  EXPECT_LT(interface_width(eps, 1e-3), interface_width(eps, 1e-9));
}

TEST(PhaseField, Extension) {
  PhaseField pf = circle_field(0.05);
  const ScalarFn gx = [](const Vec2& x) { return x.x(); };
  EXPECT_NEAR(extend_boundary_value(pf, gx, Vec2(1.0, 0.0)), 0.5, 1e-15);
  const ScalarFn c = [](const Vec2&) { return 2.5; };
  for (const Vec2& x : {Vec2(0.0, 0.0), Vec2(0.3, 0.2), Vec2(0.9, -0.7)})
    EXPECT_EQ(extend_boundary_value(pf, c, x), 2.5);
  const ScalarFn f = [](const Vec2& x) { return x.x() * x.x() + x.y(); };
  EXPECT_EQ(extend_forcing_value(pf, f, Vec2(0.1, 0.2)), f(Vec2(0.1, 0.2)));
  EXPECT_NEAR(extend_forcing_value(pf, f, Vec2(0.6, 0.0)), f(Vec2(0.5, 0.0)), 1e-15);
  const ExtendedData ed = extend(pf, gx, f);
  EXPECT_NEAR(ed.band, 3.5 * 0.05, 1e-15);
  EXPECT_NEAR(ed.g_bar(Vec2(0.0, 0.6)), 0.0, 1e-15);
}

TEST(PhaseField, TaylorGreenDataConstantAlongNormalRays) {
  const double eps = 0.05;
  PhaseField pf = circle_field(eps);
  for (int k = 0; k < 16; ++k) {
    const double a = 2.0 * std::numbers::pi * (k + 0.3) / 16.0;
    const Vec2 n(std::cos(a), std::sin(a));
    const ScalarFn g = [](const Vec2& x) { return taylor_green_exact::u(x, 0.0, 0.01).x(); };
    const double ref = g(0.5 * n);
    for (double r = -3.5 * eps; r <= 3.5 * eps; r += eps / 4.0)
      EXPECT_NEAR(extend_boundary_value(pf, g, (0.5 + r) * n), ref, 1e-9);
  }
}
