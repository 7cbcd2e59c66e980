#include "lipstab/quadrature.hpp"

#include <array>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>

#include "lipstab/error.hpp"

namespace lipstab::quad {

std::span<const TrianglePoint> seven_point() {
  static const std::array<TrianglePoint, 7> rule = [] {
    const double r15 = std::sqrt(15.0);
    const double a1 = (9.0 - 2.0 * r15) / 21.0, b1 = (6.0 + r15) / 21.0;
    const double a2 = (9.0 + 2.0 * r15) / 21.0, b2 = (6.0 - r15) / 21.0;
    const double w1 = (155.0 + r15) / 1200.0, w2 = (155.0 - r15) / 1200.0;
    return std::array<TrianglePoint, 7>{{
        {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 9.0 / 40.0},
        {a1, b1, b1, w1},
        {b1, a1, b1, w1},
        {b1, b1, a1, w1},
        {a2, b2, b2, w2},
        {b2, a2, b2, w2},
        {b2, b2, a2, w2},
    }};
  }();
  return rule;
}

double segment_log_integral(const Vec2& a, const Vec2& b, const Vec2& y) {
  const double len = (b - a).norm();
  if (len == 0.0) return 0.0;
  const Vec2 d = (b - a) / len;
  const Vec2 ry = y - a;
  const double u = ry.dot(d);
  const double perp = std::abs(ry.x() * d.y() - ry.y() * d.x());
  auto primitive = [perp](double v) {
    if (perp == 0.0) return v == 0.0 ? 0.0 : v * std::log(std::abs(v)) - v;
    return 0.5 * (v * std::log(v * v + perp * perp) - 2.0 * v + 2.0 * perp * std::atan(v / perp));
  };
  return primitive(len - u) - primitive(-u);
}

namespace {

template <int N>
void fill(std::vector<double>& nodes, std::vector<double>& weights) {
  using Rule = boost::math::quadrature::gauss<double, N>;
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  nodes.clear();
  weights.clear();
  for (std::size_t i = x.size(); i-- > 0;) {
    if (x[i] == 0.0) continue;
    nodes.push_back(-x[i]);
    weights.push_back(w[i]);
  }
  if (N % 2 == 1) {
    nodes.push_back(0.0);
    weights.push_back(w[0]);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) continue;
    nodes.push_back(x[i]);
    weights.push_back(w[i]);
  }
}

}  // namespace

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  switch (n) {
    case 8: fill<8>(nodes, weights); return;
    case 16: fill<16>(nodes, weights); return;
    case 20: fill<20>(nodes, weights); return;
    case 32: fill<32>(nodes, weights); return;
    case 64: fill<64>(nodes, weights); return;
    default: throw Error(ErrorKind::range, "unsupported Gauss-Legendre order " + std::to_string(n));
  }
}

}  // namespace lipstab::quad
