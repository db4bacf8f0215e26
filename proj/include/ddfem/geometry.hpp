#pragma once

// Signed distance functions for the embedded domains and their CSG
// combinators. Sign convention: r < 0 inside the domain, r > 0 outside.

#include <Eigen/Core>

#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ddfem {

using Vec2 = Eigen::Vector2d;

/// Thrown when a closest-point projection is requested on (or very near) the
/// medial axis, where the distance gradient is not defined.
class DegenerateGradientError : public std::runtime_error {
 public:
  explicit DegenerateGradientError(const std::string& what) : std::runtime_error(what) {}
};

class Shape {
 public:
  virtual ~Shape() = default;

  [[nodiscard]] virtual double distance(const Vec2& x) const = 0;

  /// Gradient of the signed distance; unit length almost everywhere and
  /// shorter (possibly zero) on the medial axis.
  [[nodiscard]] virtual Vec2 gradient(const Vec2& x) const = 0;

  /// Points on the zero level set, roughly uniform in arc length.
  [[nodiscard]] virtual std::vector<Vec2> boundary_samples(int count) const = 0;

  /// Length of the zero level set (exact for primitives).
  [[nodiscard]] virtual double perimeter() const = 0;
};

using ShapePtr = std::shared_ptr<const Shape>;

class Circle final : public Shape {
 public:
  Circle(Vec2 center, double radius);
  double distance(const Vec2& x) const override;
  Vec2 gradient(const Vec2& x) const override;
  std::vector<Vec2> boundary_samples(int count) const override;
  double perimeter() const override;

 private:
  Vec2 center_;
  double radius_;
};

class Box final : public Shape {
 public:
  Box(Vec2 lo, Vec2 hi);
  double distance(const Vec2& x) const override;
  Vec2 gradient(const Vec2& x) const override;
  std::vector<Vec2> boundary_samples(int count) const override;
  double perimeter() const override;

  const Vec2& lo() const { return lo_; }
  const Vec2& hi() const { return hi_; }

 private:
  Vec2 lo_, hi_;
};

/// Annular arc with rounded caps: the set of points within `half_width` of a
/// circular arc of radius `mid_radius` spanning `half_angle` degrees to either
/// side of the direction `direction` (degrees, measured from +x).
class Arc final : public Shape {
 public:
  Arc(Vec2 center, double mid_radius, double half_width, double half_angle_deg,
      double direction_deg);
  double distance(const Vec2& x) const override;
  Vec2 gradient(const Vec2& x) const override;
  std::vector<Vec2> boundary_samples(int count) const override;
  double perimeter() const override;

  double outer_radius() const { return mid_radius_ + half_width_; }

 private:
  // Maps x into the frame where the arc is symmetric about +x; returns the
  // local point with y folded to y >= 0 and the fold sign.
  Vec2 to_local(const Vec2& x, double& fold) const;
  Vec2 from_local_dir(const Vec2& d, double fold) const;

  Vec2 center_;
  double mid_radius_, half_width_, half_angle_;
  double cos_dir_, sin_dir_;
  double cos_half_, sin_half_;
};

class Complement final : public Shape {
 public:
  explicit Complement(ShapePtr inner);
  double distance(const Vec2& x) const override;
  Vec2 gradient(const Vec2& x) const override;
  std::vector<Vec2> boundary_samples(int count) const override;
  double perimeter() const override;

 private:
  ShapePtr inner_;
};

/// min (union) or max (intersection) of child distances. The result is a
/// conservative bound that is exact away from re-entrant corners.
class Combination final : public Shape {
 public:
  enum class Kind { Union, Intersection };
  Combination(Kind kind, std::vector<ShapePtr> children);
  double distance(const Vec2& x) const override;
  Vec2 gradient(const Vec2& x) const override;
  std::vector<Vec2> boundary_samples(int count) const override;
  double perimeter() const override;

 private:
  std::size_t active_child(const Vec2& x) const;

  Kind kind_;
  std::vector<ShapePtr> children_;
};

// Declarative shape description, as read from run configurations.
struct ShapeSpec;

struct CircleSpec {
  Vec2 center{0.0, 0.0};
  double radius = 0.5;
};
struct BoxSpec {
  Vec2 lo{0.0, 0.0};
  Vec2 hi{1.0, 1.0};
};
struct ArcSpec {
  Vec2 center{0.0, 0.0};
  double center_radius = 0.5;
  double half_width = 0.25;
  double half_angle_deg = 120.0;
  double cap_radius = 0.25;  // must equal half_width
  double direction_deg = 180.0;
};
struct ComplementSpec {
  std::shared_ptr<const ShapeSpec> inner;
};
struct UnionSpec {
  std::vector<ShapeSpec> children;
};
struct IntersectionSpec {
  std::vector<ShapeSpec> children;
};

struct ShapeSpec {
  std::variant<CircleSpec, BoxSpec, ArcSpec, ComplementSpec, UnionSpec, IntersectionSpec> node;
};

/// Validates the ArcSpec (positive sizes, cap radius == half width) and builds
/// the evaluable shape. Throws std::invalid_argument on bad parameters.
ShapePtr make_shape(const ShapeSpec& spec);

/// The arc of the convergence studies: midline radius 0.5, half width 0.25,
/// spanning 120 degrees to either side of -x (the gap faces +x).
ShapeSpec study_arc_spec();

double sdf_evaluate(const Shape& shape, const Vec2& x);

/// x - r(x) grad r(x). Throws DegenerateGradientError when |grad r| < 0.5.
Vec2 closest_point(const Shape& shape, const Vec2& x);

/// Closest point that never fails: projects along the gradient (iterating for
/// inexact CSG distances) and falls back to a nearest-sample search over
/// `samples` on the medial axis.
Vec2 closest_point_robust(const Shape& shape, const Vec2& x, const std::vector<Vec2>& samples);

}  // namespace ddfem
