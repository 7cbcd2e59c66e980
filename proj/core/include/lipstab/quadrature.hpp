#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "lipstab/types.hpp"

namespace lipstab::quad {

struct TrianglePoint {
  double l1, l2, l3;  // barycentric
  double weight;      // sums to 1 over the rule
};

/// Degree-5 seven-point rule on a triangle.
std::span<const TrianglePoint> seven_point();

/// Integrates f over triangle (a, b, c) with the seven-point rule.
template <class F>
auto integrate_triangle(const Vec2& a, const Vec2& b, const Vec2& c, F&& f) {
  const double area = 0.5 * std::abs((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
  using R = decltype(f(a));
  R sum{};
  for (const auto& q : seven_point()) {
    const Vec2 x = q.l1 * a + q.l2 * b + q.l3 * c;
    sum += q.weight * f(x);
  }
  return sum * area;
}

/// Region selector for clipped integration.
enum class BallPart { inside, outside };

/// Integrates f over triangle ∩ B_r(center) (or the complement) by recursive
/// quadrisection of triangles straddling the circle, with the seven-point rule
/// on the leaves; leaves at max depth are weighted by an indicator per point.
template <class F>
auto integrate_clipped(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& center, double r,
                       BallPart part, int max_depth, F&& f) {
  using R = decltype(f(a));
  const double ra = (a - center).norm(), rb = (b - center).norm(), rc = (c - center).norm();
  const bool all_in = ra <= r && rb <= r && rc <= r;
  // Distance from center to the triangle: zero if inside, else min edge distance.
  auto seg_dist = [&](const Vec2& p, const Vec2& q) {
    const Vec2 d = q - p;
    const double t = std::clamp((center - p).dot(d) / d.squaredNorm(), 0.0, 1.0);
    return (p + t * d - center).norm();
  };
  const double cross = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
  auto side = [&](const Vec2& p, const Vec2& q) {
    return ((q.x() - p.x()) * (center.y() - p.y()) - (center.x() - p.x()) * (q.y() - p.y())) * cross >= 0.0;
  };
  const bool center_in = side(a, b) && side(b, c) && side(c, a);
  const double dist = center_in ? 0.0 : std::min({seg_dist(a, b), seg_dist(b, c), seg_dist(c, a)});
  const bool all_out = dist >= r;

  if (all_in) return part == BallPart::inside ? integrate_triangle(a, b, c, f) : R{};
  if (all_out) return part == BallPart::outside ? integrate_triangle(a, b, c, f) : R{};
  if (max_depth <= 0) {
    return integrate_triangle(a, b, c, [&](const Vec2& x) {
      const bool in = (x - center).norm() <= r;
      return (in == (part == BallPart::inside)) ? f(x) : R{};
    });
  }
  const Vec2 ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
  R sum = integrate_clipped(a, ab, ca, center, r, part, max_depth - 1, f);
  sum += integrate_clipped(ab, b, bc, center, r, part, max_depth - 1, f);
  sum += integrate_clipped(ca, bc, c, center, r, part, max_depth - 1, f);
  sum += integrate_clipped(ab, bc, ca, center, r, part, max_depth - 1, f);
  return sum;
}

/// Integrates f over a triangle, refining towards the given singular points:
/// a sub-triangle is split while its diameter exceeds `ratio` times its distance
/// to the nearest singular point.
template <class F>
auto integrate_graded(const Vec2& a, const Vec2& b, const Vec2& c, std::span<const Vec2> singular,
                      double ratio, int max_depth, F&& f) {
  const double diam = std::max({(a - b).norm(), (b - c).norm(), (c - a).norm()});
  double dist = std::numeric_limits<double>::infinity();
  const Vec2 g = (a + b + c) / 3.0;
  for (const auto& s : singular) dist = std::min(dist, (g - s).norm() - diam);
  if (max_depth <= 0 || (dist > 0.0 && diam <= ratio * dist)) return integrate_triangle(a, b, c, f);
  const Vec2 ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
  auto sum = integrate_graded(a, ab, ca, singular, ratio, max_depth - 1, f);
  sum += integrate_graded(ab, b, bc, singular, ratio, max_depth - 1, f);
  sum += integrate_graded(ca, bc, c, singular, ratio, max_depth - 1, f);
  sum += integrate_graded(ab, bc, ca, singular, ratio, max_depth - 1, f);
  return sum;
}

/// Exact value of the segment integral ∫_a^b ln|x - y| ds.
double segment_log_integral(const Vec2& a, const Vec2& b, const Vec2& y);

/// Gauss–Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace lipstab::quad
