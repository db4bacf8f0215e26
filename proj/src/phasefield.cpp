#include "ddfem/phasefield.hpp"

#include <cmath>

namespace ddfem {

namespace {
constexpr int kBoundarySamples = 4096;
}

PhaseField::PhaseField(ShapePtr shape, double epsilon, double band_factor)
    : shape_(std::move(shape)), epsilon_(epsilon), band_(band_factor * epsilon) {
  if (!shape_) throw std::invalid_argument("phase field needs a shape");
  if (!(epsilon > 0.0)) throw std::invalid_argument("phase field width must be positive");
  samples_ = shape_->boundary_samples(kBoundarySamples);
}

double PhaseField::profile(double r, double epsilon) { return 1.0 / (1.0 + std::exp(6.0 * r / epsilon)); }

double PhaseField::profile_complement(double r, double epsilon) {
  return 1.0 / (1.0 + std::exp(-6.0 * r / epsilon));
}

double PhaseField::phi(const Vec2& x) const { return profile(shape_->distance(x), epsilon_); }

Vec2 PhaseField::grad_phi(const Vec2& x) const {
  const double r = shape_->distance(x);
  const double p = profile(r, epsilon_);
  const double q = profile_complement(r, epsilon_);
  return -(6.0 / epsilon_) * p * q * shape_->gradient(x);
}

Vec2 PhaseField::diffuse_normal(const Vec2& x) const {
  const Vec2 g = grad_phi(x);
  const double n = g.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw DegenerateGradientError("diffuse normal: vanishing phase-field gradient");
  return -g / n;
}

RegionTag classify(double phi, double threshold) {
  if (phi >= 1.0 - threshold) return RegionTag::Interior;
  if (phi <= threshold) return RegionTag::Exterior;
  return RegionTag::Interface;
}

RegionTag PhaseField::region(const Vec2& x, double threshold) const { return classify(phi(x), threshold); }

Vec2 PhaseField::project(const Vec2& x) const { return closest_point_robust(*shape_, x, samples_); }

ExtendedData extend(const PhaseField& pf, ScalarFn g, ScalarFn f) {
  ExtendedData out;
  out.band = pf.band();
  out.g_bar = [&pf, g = std::move(g)](const Vec2& x) { return extend_boundary_value(pf, g, x); };
  out.f_bar = [&pf, f = std::move(f)](const Vec2& x) { return extend_forcing_value(pf, f, x); };
  return out;
}

double extend_boundary_value(const PhaseField& pf, const ScalarFn& g, const Vec2& x) { return g(pf.project(x)); }

double extend_forcing_value(const PhaseField& pf, const ScalarFn& f, const Vec2& x) {
  if (pf.shape().distance(x) <= 0.0) return f(x);
  return f(pf.project(x));
}

double interface_width(double epsilon, double threshold) {
  return 2.0 * epsilon * std::atanh(1.0 - 2.0 * threshold) / 3.0;
}

}  // namespace ddfem
