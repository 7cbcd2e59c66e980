#include "lipstab/fundsol.hpp"

#include <cmath>

#include "lipstab/error.hpp"

namespace lipstab {

namespace {

template <int Dim>
double distance_or_throw(const Point<Dim>& x, const Point<Dim>& y) {
  const double r = (x - y).norm();
  if (r == 0.0) throw Error(ErrorKind::singular_point, "fundamental solution evaluated at its source");
  return r;
}

template <int Dim>
bool upper_side(const Point<Dim>& x, Side side) {
  if (side == Side::upper) return true;
  if (side == Side::lower) return false;
  return x[Dim - 1] >= 0.0;
}

}  // namespace

template <int Dim>
double laplace_gamma(const Point<Dim>& x, const Point<Dim>& y) {
  const double r = distance_or_throw<Dim>(x, y);
  if constexpr (Dim == 2) {
    return -std::log(r) / (2.0 * kPi);
  } else {
    return 1.0 / (4.0 * kPi * r);
  }
}

template <int Dim>
Point<Dim> laplace_gradient(const Point<Dim>& x, const Point<Dim>& y) {
  const double r = distance_or_throw<Dim>(x, y);
  if constexpr (Dim == 2) {
    return -(x - y) / (2.0 * kPi * r * r);
  } else {
    return -(x - y) / (4.0 * kPi * r * r * r);
  }
}

double laplace_gamma(std::span<const double> x, std::span<const double> y, int n) {
  if (n != 2 && n != 3) throw Error(ErrorKind::unsupported_dimension, "dimension must be 2 or 3");
  if (x.size() != static_cast<std::size_t>(n) || y.size() != static_cast<std::size_t>(n)) {
    throw Error(ErrorKind::mismatch, "point size does not match dimension");
  }
  if (n == 2) return laplace_gamma<2>(Point<2>{x[0], x[1]}, Point<2>{y[0], y[1]});
  return laplace_gamma<3>(Point<3>{x[0], x[1], x[2]}, Point<3>{y[0], y[1], y[2]});
}

TwoPhaseCoeffs TwoPhaseCoeffs::make(cplx gamma_plus, cplx gamma_minus) {
  const cplx sum = gamma_plus + gamma_minus;
  if (gamma_plus == 0.0 || gamma_minus == 0.0 || sum == 0.0) {
    throw Error(ErrorKind::domain, "two-phase coefficients require γ+, γ- and γ+ + γ- nonzero");
  }
  TwoPhaseCoeffs c;
  c.gamma_plus = gamma_plus;
  c.gamma_minus = gamma_minus;
  c.s = (gamma_plus - gamma_minus) / (gamma_plus * sum);
  c.t = (gamma_minus - gamma_plus) / (gamma_minus * sum);
  // equal phases: keep the reduction to Γ/γ free of rounding
  c.cross = gamma_plus == gamma_minus ? 1.0 / gamma_plus : 2.0 / sum;
  return c;
}

template <int Dim>
cplx two_phase_gamma(const Point<Dim>& x, const Point<Dim>& y, const TwoPhaseCoeffs& c, Side side) {
  const bool y_up = y[Dim - 1] >= 0.0;
  const bool x_up = upper_side<Dim>(x, side);
  const double direct = laplace_gamma<Dim>(x, y);
  if (y[Dim - 1] == 0.0 || x_up != y_up) return c.cross * direct;
  const double mirror = laplace_gamma<Dim>(x, reflect<Dim>(y));
  return y_up ? (1.0 / c.gamma_plus) * direct + c.s * mirror : (1.0 / c.gamma_minus) * direct + c.t * mirror;
}

template <int Dim>
CGrad<Dim> two_phase_gradient(const Point<Dim>& x, const Point<Dim>& y, const TwoPhaseCoeffs& c, Side side) {
  const bool y_up = y[Dim - 1] >= 0.0;
  const bool x_up = upper_side<Dim>(x, side);
  const Point<Dim> direct = laplace_gradient<Dim>(x, y);
  if (y[Dim - 1] == 0.0 || x_up != y_up) return c.cross * direct.template cast<cplx>();
  const Point<Dim> mirror = laplace_gradient<Dim>(x, reflect<Dim>(y));
  const cplx inv = 1.0 / (y_up ? c.gamma_plus : c.gamma_minus);
  return inv * direct.template cast<cplx>() + (y_up ? c.s : c.t) * mirror.template cast<cplx>();
}

template <int Dim>
TransmissionResidual transmission_residual(const TwoPhaseCoeffs& c, const Point<Dim>& y,
                                           std::span<const Point<Dim>> samples) {
  TransmissionResidual res;
  for (const auto& x : samples) {
    if (x[Dim - 1] != 0.0) throw Error(ErrorKind::range, "transmission sample off the interface");
    const cplx up = two_phase_gamma<Dim>(x, y, c, Side::upper);
    const cplx lo = two_phase_gamma<Dim>(x, y, c, Side::lower);
    const cplx flux_up = c.gamma_plus * two_phase_gradient<Dim>(x, y, c, Side::upper)[Dim - 1];
    const cplx flux_lo = c.gamma_minus * two_phase_gradient<Dim>(x, y, c, Side::lower)[Dim - 1];
    res.value_jump = std::max(res.value_jump, std::abs(up - lo));
    res.flux_jump = std::max(res.flux_jump, std::abs(flux_up - flux_lo));
  }
  return res;
}

template double laplace_gamma<2>(const Point<2>&, const Point<2>&);
template double laplace_gamma<3>(const Point<3>&, const Point<3>&);
template Point<2> laplace_gradient<2>(const Point<2>&, const Point<2>&);
template Point<3> laplace_gradient<3>(const Point<3>&, const Point<3>&);
template cplx two_phase_gamma<2>(const Point<2>&, const Point<2>&, const TwoPhaseCoeffs&, Side);
template cplx two_phase_gamma<3>(const Point<3>&, const Point<3>&, const TwoPhaseCoeffs&, Side);
template CGrad<2> two_phase_gradient<2>(const Point<2>&, const Point<2>&, const TwoPhaseCoeffs&, Side);
template CGrad<3> two_phase_gradient<3>(const Point<3>&, const Point<3>&, const TwoPhaseCoeffs&, Side);
template TransmissionResidual transmission_residual<2>(const TwoPhaseCoeffs&, const Point<2>&,
                                                       std::span<const Point<2>>);
template TransmissionResidual transmission_residual<3>(const TwoPhaseCoeffs&, const Point<3>&,
                                                       std::span<const Point<3>>);

}  // namespace lipstab
