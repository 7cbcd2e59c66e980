#pragma once

#include <memory>
#include <vector>

#include "lipstab/dtn.hpp"
#include "lipstab/forward.hpp"
#include "lipstab/fundsol.hpp"
#include "lipstab/geometry.hpp"

namespace lipstab {

/// G(·,y) = Γ_l(·,y) + w(·,y): the two-phase fundamental solution of one interface
/// plus a finite-energy corrector making div(γ∇G) = -δ_y in Ω and G = 0 on ∂Ω.
struct SingularSolution {
  Vec2 y;
  int link = -1;  // interface index, -1 when built from a bare TwoPhaseField
  TwoPhaseField field;
  FieldSolution corrector;
  std::shared_ptr<const PointLocator> locator;

  /// G and ∇G at x, locating the containing triangle.
  cplx value(const Vec2& x) const;
  CVec2 gradient(const Vec2& x) const;
  /// Same, for a point known to lie in triangle t (the triangle fixes the side
  /// of the interface for points on it).
  cplx value_in(int t, const Vec2& x) const;
  CVec2 gradient_in(int t, const Vec2& x) const;

  const Mesh& mesh() const { return *corrector.mesh; }
};

/// Corrector for an arbitrary two-phase reference field. γ̃ = γ - γ_field must
/// vanish on every triangle containing y.
SingularSolution singular_solution(const DirichletSolver& solver, const TwoPhaseField& field, const Vec2& y);

/// Partition-aware construction with Γ_l taken across interface `link`.
/// y must lie in K, off every interface, inside one of the two regions of the link.
SingularSolution green_correction(const Partition& p, const Chain& c, const DirichletSolver& solver,
                                  const Vec2& y, int link);

/// Many source points sharing one factorization, solved in parallel.
std::vector<SingularSolution> green_corrections(const Partition& p, const Chain& c, const DirichletSolver& solver,
                                                const std::vector<Vec2>& ys, int link);

/// The two-phase reference field of interface `link` for admittivity a.
TwoPhaseField link_field(const Partition& p, const Admittivity& a, int link);

/// ‖G(·,y)‖_{H¹(Ω∖B_r(y))}.
double energy_outside(const SingularSolution& g, double r);

struct AsymptoticsRow {
  double r = 0.0;
  double deviation = 0.0;       // |G(x̄,ȳ) - 2/(γ_l+γ_{l+1}) Γ(x̄,ȳ)|
  double grad_deviation = 0.0;  // |∇G(x̄,ȳ) - 2/(γ_l+γ_{l+1}) ∇Γ(x̄,ȳ)|
};

struct AsymptoticsReport {
  std::vector<AsymptoticsRow> rows;
  double slope = 0.0;       // least-squares slope of log deviation against log r
  double grad_slope = 0.0;
  bool bounded = false;     // slope >= -0.1
};

/// ȳ = P - r e_2 below and x̄ = P + r e_2 above the link's marked point P, one
/// corrector per radius. Radii must be positive and below r0/2.
AsymptoticsReport asymptotics_check(const Partition& p, const Chain& c, const DirichletSolver& solver, int link,
                                    const std::vector<double>& radii);

/// Free two-phase medium (no corrector) about P = 0: the cross-interface branch
/// against 2/(γ+δ)Γ.
AsymptoticsReport asymptotics_free_space(const TwoPhaseCoeffs& coeffs, const std::vector<double>& radii);

/// S_k(y,z) = ∫_{U_k} (γ1 - γ2) ∇G_1(x,y)·∇G_2(x,z) dx (no conjugation), with
/// quadrature graded towards y and z.
cplx s_k_evaluate(const Partition& p, const Chain& c, const Admittivity& a1, const Admittivity& a2,
                  const SingularSolution& g1, const SingularSolution& g2, int k);

struct RateRow {
  double r = 0.0;
  double abs_s = 0.0;
};

struct RateReport {
  std::vector<RateRow> rows;
  double slope = 0.0;  // least-squares slope of log|S| against log r
};

/// |S(y_r, y_r)| with y_r = P - r e_2 below interface `link`, integrated over
/// every region above the link (the unexplored set whose first region the link enters).
RateReport diagonal_rate(const Partition& p, const Chain& c, std::shared_ptr<const Mesh> mesh,
                         const Admittivity& a1, const Admittivity& a2, int link, const std::vector<double>& radii);

/// Three-dimensional free two-phase medium with interface {x_3 = 0}: the
/// quadrature of ∫_{B_ρ0 ∩ {x_3 > 0}} (γ1 - γ2)_upper ∇Γ_l·∇Γ'_l at
/// y = z = (0, 0, -r), with Γ_l from `first` and Γ'_l from `second`.
RateReport half_space_probe(const TwoPhaseCoeffs& first, const TwoPhaseCoeffs& second, double rho0,
                            const std::vector<double>& radii);

struct IdentityPair {
  cplx lhs;
  cplx rhs;

  double relative_gap() const;
};

/// lhs = ∫ (γ1 - γ2) ∇u1·∇u2 over the mesh, rhs = f1ᵀ (Λ1 - Λ2) f2.
IdentityPair alessandrini_pair(const DirichletSolver& s1, const DirichletSolver& s2, const Eigen::VectorXcd& f1,
                               const Eigen::VectorXcd& f2);
IdentityPair alessandrini_pair(std::shared_ptr<const Mesh> mesh, const Admittivity& a1, const Admittivity& a2,
                               const Eigen::VectorXcd& f1, const Eigen::VectorXcd& f2);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace lipstab
