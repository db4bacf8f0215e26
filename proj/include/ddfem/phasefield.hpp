#pragma once

#include "ddfem/geometry.hpp"

#include <functional>

namespace ddfem {

using ScalarFn = std::function<double(const Vec2&)>;
using VectorFn = std::function<Vec2(const Vec2&)>;

enum class RegionTag { Interior, Exterior, Interface };

inline constexpr double kRegionThreshold = 1e-9;

// Smoothed indicator phi = (1 - tanh(3 r / eps)) / 2 of a shape.
class PhaseField {
 public:
  PhaseField(ShapePtr shape, double epsilon, double band_factor = 3.5);

  // Profile as a function of the signed distance. Both branches are
  // evaluated without cancellation, so 1 - phi keeps full relative accuracy
  // deep inside the domain.
  static double profile(double r, double epsilon);
  static double profile_complement(double r, double epsilon);

  double phi(const Vec2& x) const;
  Vec2 grad_phi(const Vec2& x) const;

  /// -grad phi / |grad phi|. Throws DegenerateGradientError where the
  /// gradient vanishes numerically.
  Vec2 diffuse_normal(const Vec2& x) const;

  RegionTag region(const Vec2& x, double threshold = kRegionThreshold) const;

  /// Closest boundary point; total (uses boundary samples on the medial axis).
  Vec2 project(const Vec2& x) const;

  const Shape& shape() const { return *shape_; }
  const ShapePtr& shape_ptr() const { return shape_; }
  double epsilon() const { return epsilon_; }
  double band() const { return band_; }

 private:
  ShapePtr shape_;
  double epsilon_;
  double band_;
  std::vector<Vec2> samples_;
};

RegionTag classify(double phi, double threshold = kRegionThreshold);

/// Normal extensions of boundary data g and forcing f.
struct ExtendedData {
  ScalarFn g_bar;
  ScalarFn f_bar;
  double band = 0.0;
};

/// g_bar(x) = g(cp(x)); f_bar(x) = f(x) for r <= 0 and f(cp(x)) outside.
/// Beyond the band the value is taken from the band edge on the same normal
/// line, which for a distance function is the same boundary point.
ExtendedData extend(const PhaseField& pf, ScalarFn g, ScalarFn f);

double extend_boundary_value(const PhaseField& pf, const ScalarFn& g, const Vec2& x);
double extend_forcing_value(const PhaseField& pf, const ScalarFn& f, const Vec2& x);

/// Width of the Interface region along a normal ray.
double interface_width(double epsilon, double threshold = kRegionThreshold);

}  // namespace ddfem
