#include "ddfem/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ddfem {

namespace {

constexpr double kPi = std::numbers::pi;

double deg2rad(double deg) { return deg * kPi / 180.0; }

Vec2 polar(double radius, double angle) { return {radius * std::cos(angle), radius * std::sin(angle)}; }

}  // namespace

// ---------------------------------------------------------------- Circle

Circle::Circle(Vec2 center, double radius) : center_(std::move(center)), radius_(radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("circle radius must be positive");
}

double Circle::distance(const Vec2& x) const { return (x - center_).norm() - radius_; }

Vec2 Circle::gradient(const Vec2& x) const {
  const Vec2 d = x - center_;
  const double n = d.norm();
  if (n == 0.0) return Vec2::Zero();
  return d / n;
}

std::vector<Vec2> Circle::boundary_samples(int count) const {
  std::vector<Vec2> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(center_ + polar(radius_, 2.0 * kPi * i / count));
  return out;
}

double Circle::perimeter() const { return 2.0 * kPi * radius_; }

// ---------------------------------------------------------------- Box

Box::Box(Vec2 lo, Vec2 hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (!(hi_.x() > lo_.x() && hi_.y() > lo_.y())) throw std::invalid_argument("box must have hi > lo");
}

double Box::distance(const Vec2& x) const {
  const Vec2 c = 0.5 * (lo_ + hi_);
  const Vec2 half = 0.5 * (hi_ - lo_);
  const Vec2 q = (x - c).cwiseAbs() - half;
  const Vec2 qpos = q.cwiseMax(0.0);
  return qpos.norm() + std::min(std::max(q.x(), q.y()), 0.0);
}

Vec2 Box::gradient(const Vec2& x) const {
  const Vec2 c = 0.5 * (lo_ + hi_);
  const Vec2 half = 0.5 * (hi_ - lo_);
  const Vec2 p = x - c;
  const Vec2 s{p.x() >= 0.0 ? 1.0 : -1.0, p.y() >= 0.0 ? 1.0 : -1.0};
  const Vec2 q = p.cwiseAbs() - half;
  if (q.x() > 0.0 || q.y() > 0.0) {
    const Vec2 qpos = q.cwiseMax(0.0);
    return s.cwiseProduct(qpos) / qpos.norm();
  }
  // Inside: the nearest side wins; on the diagonal the gradient is averaged
  // (length 1/sqrt(2) < 1 marks the medial axis).
  if (q.x() > q.y()) return {s.x(), 0.0};
  if (q.y() > q.x()) return {0.0, s.y()};
  return {0.5 * s.x(), 0.5 * s.y()};
}

std::vector<Vec2> Box::boundary_samples(int count) const {
  std::vector<Vec2> out;
  out.reserve(count);
  const double per = perimeter();
  const double w = hi_.x() - lo_.x();
  const double h = hi_.y() - lo_.y();
  for (int i = 0; i < count; ++i) {
    double s = per * i / count;
    if (s < w) {
      out.emplace_back(lo_.x() + s, lo_.y());
      continue;
    }
    s -= w;
    if (s < h) {
      out.emplace_back(hi_.x(), lo_.y() + s);
      continue;
    }
    s -= h;
    if (s < w) {
      out.emplace_back(hi_.x() - s, hi_.y());
      continue;
    }
    s -= w;
    out.emplace_back(lo_.x(), hi_.y() - s);
  }
  return out;
}

double Box::perimeter() const { return 2.0 * ((hi_.x() - lo_.x()) + (hi_.y() - lo_.y())); }

// ---------------------------------------------------------------- Arc

Arc::Arc(Vec2 center, double mid_radius, double half_width, double half_angle_deg,
         double direction_deg)
    : center_(std::move(center)),
      mid_radius_(mid_radius),
      half_width_(half_width),
      half_angle_(deg2rad(half_angle_deg)) {
  if (!(mid_radius > 0.0 && half_width > 0.0)) throw std::invalid_argument("arc radii must be positive");
  if (!(half_width < mid_radius)) throw std::invalid_argument("arc half width must be below the midline radius");
  if (!(half_angle_deg > 0.0 && half_angle_deg <= 180.0))
    throw std::invalid_argument("arc half angle must lie in (0, 180] degrees");
  const double dir = deg2rad(direction_deg);
  cos_dir_ = std::cos(dir);
  sin_dir_ = std::sin(dir);
  cos_half_ = std::cos(half_angle_);
  sin_half_ = std::sin(half_angle_);
}

Vec2 Arc::to_local(const Vec2& x, double& fold) const {
  const Vec2 d = x - center_;
  const Vec2 p{cos_dir_ * d.x() + sin_dir_ * d.y(), -sin_dir_ * d.x() + cos_dir_ * d.y()};
  fold = p.y() >= 0.0 ? 1.0 : -1.0;
  return {p.x(), std::abs(p.y())};
}

Vec2 Arc::from_local_dir(const Vec2& d, double fold) const {
  const Vec2 u{d.x(), fold * d.y()};
  return {cos_dir_ * u.x() - sin_dir_ * u.y(), sin_dir_ * u.x() + cos_dir_ * u.y()};
}

double Arc::distance(const Vec2& x) const {
  double fold = 1.0;
  const Vec2 p = to_local(x, fold);
  // Inside the angular wedge the nearest midline point is the radial
  // projection; outside it is the arc end point.
  if (p.y() * cos_half_ <= p.x() * sin_half_) return std::abs(p.norm() - mid_radius_) - half_width_;
  const Vec2 end{mid_radius_ * cos_half_, mid_radius_ * sin_half_};
  return (p - end).norm() - half_width_;
}

Vec2 Arc::gradient(const Vec2& x) const {
  double fold = 1.0;
  const Vec2 p = to_local(x, fold);
  Vec2 g;
  if (p.y() * cos_half_ <= p.x() * sin_half_) {
    const double n = p.norm();
    if (n == 0.0) return Vec2::Zero();
    g = (n >= mid_radius_ ? 1.0 : -1.0) * p / n;
  } else {
    const Vec2 end{mid_radius_ * cos_half_, mid_radius_ * sin_half_};
    const Vec2 d = p - end;
    const double n = d.norm();
    if (n == 0.0) return Vec2::Zero();
    g = d / n;
  }
  // On the symmetry axis outside the wedge the two caps compete.
  if (p.y() == 0.0 && p.x() < 0.0 && !(p.y() * cos_half_ <= p.x() * sin_half_)) g.y() = 0.0;
  return from_local_dir(g, fold);
}

std::vector<Vec2> Arc::boundary_samples(int count) const {
  const double outer = mid_radius_ + half_width_;
  const double inner = mid_radius_ - half_width_;
  const double len_outer = 2.0 * half_angle_ * outer;
  const double len_inner = 2.0 * half_angle_ * inner;
  const double len_cap = kPi * half_width_;
  const double total = len_outer + len_inner + 2.0 * len_cap;
  std::vector<Vec2> out;
  out.reserve(count);
  auto to_global = [&](const Vec2& local) {
    return Vec2{center_.x() + cos_dir_ * local.x() - sin_dir_ * local.y(),
                center_.y() + sin_dir_ * local.x() + cos_dir_ * local.y()};
  };
  for (int i = 0; i < count; ++i) {
    double s = total * i / count;
    Vec2 local;
    if (s < len_outer) {
      local = polar(outer, -half_angle_ + s / outer);
    } else if ((s -= len_outer) < len_cap) {
      const Vec2 end = polar(mid_radius_, half_angle_);
      local = end + polar(half_width_, half_angle_ + s / half_width_);
    } else if ((s -= len_cap) < len_inner) {
      local = polar(inner, half_angle_ - s / inner);
    } else {
      s -= len_inner;
      const Vec2 end = polar(mid_radius_, -half_angle_);
      local = end + polar(half_width_, -half_angle_ + kPi + s / half_width_);
    }
    out.push_back(to_global(local));
  }
  return out;
}

double Arc::perimeter() const { return 4.0 * half_angle_ * mid_radius_ + 2.0 * kPi * half_width_; }

// ---------------------------------------------------------------- Complement

Complement::Complement(ShapePtr inner) : inner_(std::move(inner)) {
  if (!inner_) throw std::invalid_argument("complement of a null shape");
}

double Complement::distance(const Vec2& x) const { return -inner_->distance(x); }
Vec2 Complement::gradient(const Vec2& x) const { return -inner_->gradient(x); }
std::vector<Vec2> Complement::boundary_samples(int count) const { return inner_->boundary_samples(count); }
double Complement::perimeter() const { return inner_->perimeter(); }

// ---------------------------------------------------------------- Combination

Combination::Combination(Kind kind, std::vector<ShapePtr> children)
    : kind_(kind), children_(std::move(children)) {
  if (children_.empty()) throw std::invalid_argument("CSG combination needs at least one child");
}

std::size_t Combination::active_child(const Vec2& x) const {
  std::size_t best = 0;
  double best_d = children_[0]->distance(x);
  for (std::size_t i = 1; i < children_.size(); ++i) {
    const double d = children_[i]->distance(x);
    if (kind_ == Kind::Union ? d < best_d : d > best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

double Combination::distance(const Vec2& x) const { return children_[active_child(x)]->distance(x); }
Vec2 Combination::gradient(const Vec2& x) const { return children_[active_child(x)]->gradient(x); }

std::vector<Vec2> Combination::boundary_samples(int count) const {
  double total = 0.0;
  for (const auto& c : children_) total += c->perimeter();
  std::vector<Vec2> out;
  for (const auto& c : children_) {
    const int n = std::max(8, static_cast<int>(std::ceil(count * c->perimeter() / total)));
    for (const Vec2& s : c->boundary_samples(n)) {
      if (std::abs(distance(s)) <= 1e-9) out.push_back(s);
    }
  }
  return out;
}

double Combination::perimeter() const {
  // Estimated from the fraction of child boundary that survives.
  constexpr int kSamples = 4096;
  double total = 0.0;
  for (const auto& c : children_) {
    const auto samples = c->boundary_samples(kSamples);
    int kept = 0;
    for (const Vec2& s : samples) kept += std::abs(distance(s)) <= 1e-9 ? 1 : 0;
    total += c->perimeter() * kept / static_cast<double>(samples.size());
  }
  return total;
}

// ---------------------------------------------------------------- factory

ShapePtr make_shape(const ShapeSpec& spec) {
  return std::visit(
      [](const auto& node) -> ShapePtr {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, CircleSpec>) {
          return std::make_shared<Circle>(node.center, node.radius);
        } else if constexpr (std::is_same_v<T, BoxSpec>) {
          return std::make_shared<Box>(node.lo, node.hi);
        } else if constexpr (std::is_same_v<T, ArcSpec>) {
          if (std::abs(node.cap_radius - node.half_width) > 1e-14)
            throw std::invalid_argument("arc cap radius must equal its half width");
          return std::make_shared<Arc>(node.center, node.center_radius, node.half_width,
                                       node.half_angle_deg, node.direction_deg);
        } else if constexpr (std::is_same_v<T, ComplementSpec>) {
          if (!node.inner) throw std::invalid_argument("complement without inner shape");
          return std::make_shared<Complement>(make_shape(*node.inner));
        } else {
          std::vector<ShapePtr> children;
          for (const auto& c : node.children) children.push_back(make_shape(c));
          const auto kind = std::is_same_v<T, UnionSpec> ? Combination::Kind::Union
                                                         : Combination::Kind::Intersection;
          return std::make_shared<Combination>(kind, std::move(children));
        }
      },
      spec.node);
}

ShapeSpec study_arc_spec() {
  ArcSpec arc;
  arc.center = Vec2::Zero();
  arc.center_radius = 0.5;
  arc.half_width = 0.25;
  arc.cap_radius = 0.25;
  arc.half_angle_deg = 120.0;
  arc.direction_deg = 180.0;
  return ShapeSpec{arc};
}

double sdf_evaluate(const Shape& shape, const Vec2& x) { return shape.distance(x); }

Vec2 closest_point(const Shape& shape, const Vec2& x) {
  const Vec2 g = shape.gradient(x);
  if (g.norm() < 0.5) throw DegenerateGradientError("closest_point: point lies on the medial axis");
  return x - shape.distance(x) * g;
}

Vec2 closest_point_robust(const Shape& shape, const Vec2& x, const std::vector<Vec2>& samples) {
  Vec2 y = x;
  const double scale = 1.0 + x.norm();
  for (int it = 0; it < 8; ++it) {
    const Vec2 g = shape.gradient(y);
    const double gn = g.norm();
    if (gn < 0.5) break;
    const double r = shape.distance(y);
    y -= r * g / gn;
    if (std::abs(shape.distance(y)) <= 1e-12 * scale) return y;
  }
  if (samples.empty()) throw DegenerateGradientError("closest_point_robust: no boundary samples");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double d = (samples[i] - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return samples[best];
}

}  // namespace ddfem
