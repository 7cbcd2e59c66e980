#pragma once

#include <span>

#include "lipstab/types.hpp"

namespace lipstab {

template <int Dim>
using Point = Eigen::Matrix<double, Dim, 1>;
template <int Dim>
using CGrad = Eigen::Matrix<cplx, Dim, 1>;

/// Laplace fundamental solution with -ΔΓ = δ_y: -ln|x-y|/(2π) in the plane,
/// 1/(4π|x-y|) in space. Throws singular-point at x = y.
template <int Dim>
double laplace_gamma(const Point<Dim>& x, const Point<Dim>& y);

/// ∇_x of laplace_gamma.
template <int Dim>
Point<Dim> laplace_gradient(const Point<Dim>& x, const Point<Dim>& y);

/// Runtime-dimension entry point; n must be 2 or 3 and both spans of length n.
double laplace_gamma(std::span<const double> x, std::span<const double> y, int n);

/// Coefficients of the two-phase medium with `gamma_plus` on {x_n > 0} and
/// `gamma_minus` on {x_n < 0}. The reflected-source weights are chosen so that
/// value and flux are continuous across the interface:
///   s = (γ+ - γ-) / (γ+ (γ+ + γ-)),  t = (γ- - γ+) / (γ- (γ+ + γ-)),
/// and 1/γ+ + s = 1/γ- + t = 2/(γ+ + γ-) =: cross.
struct TwoPhaseCoeffs {
  cplx gamma_plus{1.0};
  cplx gamma_minus{1.0};
  cplx s{0.0};
  cplx t{0.0};
  cplx cross{1.0};

  static TwoPhaseCoeffs make(cplx gamma_plus, cplx gamma_minus);
};

/// Which one-sided formula to use for points lying exactly on the interface.
enum class Side { automatic, upper, lower };

template <int Dim>
Point<Dim> reflect(const Point<Dim>& y) {
  Point<Dim> r = y;
  r[Dim - 1] = -r[Dim - 1];
  return r;
}

/// Fundamental solution of div((γ- 1_{x_n<0} + γ+ 1_{x_n>0}) ∇·) built from the
/// free-space solution and its mirror image across {x_n = 0}.
template <int Dim>
cplx two_phase_gamma(const Point<Dim>& x, const Point<Dim>& y, const TwoPhaseCoeffs& c,
                     Side side = Side::automatic);

template <int Dim>
CGrad<Dim> two_phase_gradient(const Point<Dim>& x, const Point<Dim>& y, const TwoPhaseCoeffs& c,
                              Side side = Side::automatic);

struct TransmissionResidual {
  double value_jump = 0.0;
  double flux_jump = 0.0;
};

/// Max over interface samples of |u⁺ - u⁻| and |γ+ ∂_n u⁺ - γ- ∂_n u⁻|, using the
/// one-sided closed forms. Samples must lie on {x_n = 0}.
template <int Dim>
TransmissionResidual transmission_residual(const TwoPhaseCoeffs& c, const Point<Dim>& y,
                                           std::span<const Point<Dim>> samples);

/// Planar two-phase solution for the horizontal line {x_2 = height} in domain
/// coordinates; `coeffs.gamma_plus` applies above the line.
struct TwoPhaseField {
  TwoPhaseCoeffs coeffs;
  double height = 0.0;

  cplx value(const Vec2& x, const Vec2& y, Side side = Side::automatic) const {
    return two_phase_gamma<2>(x - Vec2{0.0, height}, y - Vec2{0.0, height}, coeffs, side);
  }
  CVec2 gradient(const Vec2& x, const Vec2& y, Side side = Side::automatic) const {
    return two_phase_gradient<2>(x - Vec2{0.0, height}, y - Vec2{0.0, height}, coeffs, side);
  }
  /// The piecewise-constant coefficient of this two-phase medium at x.
  cplx coefficient(const Vec2& x) const { return x.y() >= height ? coeffs.gamma_plus : coeffs.gamma_minus; }
};

}  // namespace lipstab
