#include "ddfem/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace ddfem;

namespace {

constexpr double kPi = std::numbers::pi;

// Independent description of the study arc: annulus 0.25 < |x| < 0.75 over
// the angles 60..300 degrees, closed by round caps of radius 0.25 centred on
// the midline at +-60 degrees.
struct ArcOracle {
  std::vector<Vec2> boundary;

  ArcOracle() {
    const int n = 20000;
    const double a0 = kPi / 3.0, a1 = 5.0 * kPi / 3.0;
    for (int i = 0; i <= n; ++i) {
      const double a = a0 + (a1 - a0) * i / n;
      boundary.emplace_back(0.75 * std::cos(a), 0.75 * std::sin(a));
      boundary.emplace_back(0.25 * std::cos(a), 0.25 * std::sin(a));
    }
    for (double end : {a0, a1}) {
      const Vec2 c(0.5 * std::cos(end), 0.5 * std::sin(end));
      for (int i = 0; i < n; ++i) {
        const double a = 2.0 * kPi * i / n;
        const Vec2 p = c + 0.25 * Vec2(std::cos(a), std::sin(a));
        // Keep only the half of the cap circle outside the annular sector.
        double ang = std::atan2(p.y(), p.x());
        if (ang < 0.0) ang += 2.0 * kPi;
        if (ang > a0 + 1e-12 && ang < a1 - 1e-12 && std::abs(p.norm() - 0.5) < 0.25) continue;
        boundary.push_back(p);
      }
    }
  }

  bool inside(const Vec2& x) const {
    double ang = std::atan2(x.y(), x.x());
    if (ang < 0.0) ang += 2.0 * kPi;
    const double rho = x.norm();
    if (ang >= kPi / 3.0 && ang <= 5.0 * kPi / 3.0 && rho > 0.25 && rho < 0.75) return true;
    for (double end : {kPi / 3.0, 5.0 * kPi / 3.0})
      if ((x - 0.5 * Vec2(std::cos(end), std::sin(end))).norm() < 0.25) return true;
    return false;
  }

  std::pair<double, Vec2> nearest(const Vec2& x) const {
    double best = 1e300;
    Vec2 bp = Vec2::Zero();
    for (const Vec2& p : boundary) {
      const double d = (p - x).norm();
      if (d < best) {
        best = d;
        bp = p;
      }
    }
    return {inside(x) ? -best : best, bp};
  }
};

const ArcOracle& arc_oracle() {
  static const ArcOracle o;
  return o;
}

}  // namespace

TEST(Geometry, CircleExamples) {
  Circle c(Vec2::Zero(), 0.5);
  EXPECT_NEAR(sdf_evaluate(c, Vec2(0.3, 0.4)), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(sdf_evaluate(c, Vec2(0.0, 0.0)), -0.5);
  const Vec2 p1 = closest_point(c, Vec2(1.0, 0.0));
  EXPECT_NEAR(p1.x(), 0.5, 1e-15);
  EXPECT_NEAR(p1.y(), 0.0, 1e-15);
  const Vec2 p2 = closest_point(c, Vec2(0.25, 0.0));
  EXPECT_NEAR(p2.x(), 0.5, 1e-15);
  EXPECT_NEAR(p2.y(), 0.0, 1e-15);
}

TEST(Geometry, CircleCenterIsDegenerate) {
  Circle c(Vec2::Zero(), 0.5);
  EXPECT_THROW(closest_point(c, Vec2::Zero()), DegenerateGradientError);
  const auto samples = c.boundary_samples(64);
  const Vec2 p = closest_point_robust(c, Vec2::Zero(), samples);
  EXPECT_NEAR(p.norm(), 0.5, 1e-12);
}

TEST(Geometry, BoxDistance) {
  Box b(Vec2(0.0, 0.0), Vec2(2.0, 1.0));
  EXPECT_DOUBLE_EQ(b.distance(Vec2(1.0, 0.5)), -0.5);
  EXPECT_DOUBLE_EQ(b.distance(Vec2(3.0, 0.5)), 1.0);
  EXPECT_NEAR(b.distance(Vec2(3.0, 2.0)), std::sqrt(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(b.perimeter(), 6.0);
}

TEST(Geometry, StudyArcMatchesBruteForce) {
  const ShapePtr arc = make_shape(study_arc_spec());
  EXPECT_NEAR(arc->distance(Vec2(-0.5, 0.0)), -0.25, 1e-14);
  EXPECT_NEAR(arc->distance(Vec2(0.0, 0.0)), 0.25, 1e-14);
  const ArcOracle& o = arc_oracle();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1.1, 1.1);
  for (int k = 0; k < 300; ++k) {
    const Vec2 x(U(rng), U(rng));
    const auto [d, p] = o.nearest(x);
    EXPECT_NEAR(arc->distance(x), d, 2e-4) << x.transpose();
  }
}

TEST(Geometry, ArcClosestPointNearCap) {
  const ShapePtr arc = make_shape(study_arc_spec());
  // Off the symmetry axis the nearest boundary is the cap at +60 degrees.
  const Vec2 x(0.9, 0.3);
  const Vec2 c = 0.5 * Vec2(std::cos(kPi / 3.0), std::sin(kPi / 3.0));
  const Vec2 expected = c + 0.25 * (x - c).normalized();
  const Vec2 cp = closest_point(*arc, x);
  EXPECT_LT((cp - expected).norm(), 1e-12);
  EXPECT_NEAR(arc->distance(x), (x - c).norm() - 0.25, 1e-14);
  EXPECT_LT((arc_oracle().nearest(x).second - expected).norm(), 1e-3);
}

TEST(Geometry, ComplementNegatesExactly) {
  const ShapePtr arc = make_shape(study_arc_spec());
  Complement inv(arc);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const Vec2 x(U(rng), U(rng));
    EXPECT_EQ(inv.distance(x), -arc->distance(x));
  }
}

TEST(Geometry, ClosestPointProperty) {
  std::vector<ShapePtr> shapes{std::make_shared<Circle>(Vec2(0.1, -0.2), 0.4), make_shape(study_arc_spec()),
                               std::make_shared<Box>(Vec2(-0.5, -0.3), Vec2(0.4, 0.6))};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (const auto& s : shapes) {
    int checked = 0;
    for (int k = 0; k < 1000; ++k) {
      const Vec2 x(U(rng), U(rng));
      Vec2 cp;
      try {
        cp = closest_point(*s, x);
      } catch (const DegenerateGradientError&) {
        continue;
      }
      ++checked;
      EXPECT_LE(std::abs(s->distance(cp)), 1e-9);
      EXPECT_NEAR((x - cp).norm(), std::abs(s->distance(x)), 1e-9);
    }
    EXPECT_GT(checked, 900);
  }
}

TEST(Geometry, GradientMatchesFiniteDifferences) {
  std::vector<ShapePtr> shapes{std::make_shared<Circle>(Vec2::Zero(), 0.5), make_shape(study_arc_spec())};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const double h = 1e-7;
  for (const auto& s : shapes) {
    int checked = 0;
    while (checked < 1000) {
      const Vec2 x(U(rng), U(rng));
      // Skip a 1e-3 band around the medial axis, detected by a coarse
      // difference that disagrees with the fine one.
      const Vec2 g = s->gradient(x);
      if (std::abs(g.norm() - 1.0) > 1e-12) continue;
      Vec2 coarse, fine;
      for (int i = 0; i < 2; ++i) {
        Vec2 e = Vec2::Zero();
        e[i] = 1e-3;
        coarse[i] = (s->distance(x + e) - s->distance(x - e)) / 2e-3;
        e[i] = h;
        fine[i] = (s->distance(x + e) - s->distance(x - e)) / (2.0 * h);
      }
      if ((coarse - g).norm() > 1e-2) continue;
      ++checked;
      EXPECT_LT((fine - g).norm(), 1e-6) << x.transpose();
    }
  }
}

TEST(Geometry, RejectsCapRadiusMismatch) {
  ArcSpec a;
  a.cap_radius = 0.2;
  EXPECT_THROW(make_shape(ShapeSpec{a}), std::invalid_argument);
  CircleSpec c;
  c.radius = -1.0;
  EXPECT_THROW(make_shape(ShapeSpec{c}), std::invalid_argument);
}

TEST(Geometry, UnionAndIntersection) {
  auto a = std::make_shared<const ShapeSpec>(ShapeSpec{CircleSpec{Vec2(-0.5, 0.0), 0.3}});
  UnionSpec u{{ShapeSpec{CircleSpec{Vec2(-0.5, 0.0), 0.3}}, ShapeSpec{CircleSpec{Vec2(0.5, 0.0), 0.3}}}};
  const ShapePtr su = make_shape(ShapeSpec{u});
  EXPECT_NEAR(su->distance(Vec2(-0.5, 0.0)), -0.3, 1e-15);
  EXPECT_NEAR(su->distance(Vec2(0.5, 0.0)), -0.3, 1e-15);
  EXPECT_NEAR(su->distance(Vec2(0.0, 0.0)), 0.2, 1e-15);
  IntersectionSpec in{{ShapeSpec{BoxSpec{Vec2(-1, -1), Vec2(1, 1)}}, ShapeSpec{ComplementSpec{a}}}};
  const ShapePtr si = make_shape(ShapeSpec{in});
  EXPECT_GT(si->distance(Vec2(-0.5, 0.0)), 0.0);
  EXPECT_LT(si->distance(Vec2(0.5, 0.5)), 0.0);
}
