#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lipstab/dtn.hpp"
#include "lipstab/forward.hpp"
#include "lipstab/geometry.hpp"

namespace lipstab {

// ---------------------------------------------------------------------------
// Modulus of continuity and the chain recursion

/// ω(t) = |ln t|^{-(n-2)/4} for t <= e^{-n}, n^{-(n-2)/4} above. Needs t > 0, n >= 3.
double omega(double t, int n);
/// exp(-y^{-4/(n-2)}), the inverse of the increasing branch; y in (0, n^{-(n-2)/4}).
double omega_inverse(double y, int n);
/// ω composed k times with itself (k = 0 is the identity).
double omega_iterate(double t, int n, int k);

struct DeltaRecursion {
  std::vector<double> delta;  // δ_0 .. δ_M
  double final_bound = 0.0;   // (C+1)^M (E+ε) ω_M(ε/(ε+E))
};

/// δ_k = C (ε + δ_{k-1} + E) ω((ε + δ_{k-1}) / (ε + δ_{k-1} + E)), δ_0 = 0, with
/// ω(0) read as its limit 0.
DeltaRecursion delta_recursion(double eps, double E, double C, int M, int n);

// ---------------------------------------------------------------------------
// Iterated exponentials

/// exp applied `level` times to `top`. Canonical form keeps `level` minimal, so
/// level >= 1 implies top >= ln(DBL_MAX) and values compare lexicographically.
/// Additive constants below the top level are dropped once level >= 2.
struct IteratedExp {
  int level = 0;
  double top = 0.0;

  static IteratedExp from(double v) { return {0, v}; }
  IteratedExp normalized() const;
  /// Natural logarithm (needs a positive value).
  IteratedExp log() const;
  IteratedExp scaled(double a) const;  // a * value, a > 0
  IteratedExp exp() const;
  IteratedExp plus(double c) const;    // value + c
  /// The plain value when representable, +inf otherwise.
  double value() const;
  std::string str() const;

  friend bool operator<(const IteratedExp& a, const IteratedExp& b);
  friend bool operator==(const IteratedExp& a, const IteratedExp& b) = default;
};

struct ConstantBound {
  IteratedExp log_bound;  // ln of 1/(2 ω_N^{-1}(1/(2(C+1)^N)))

  /// log10 of the bound, +inf when even the logarithm overflows.
  double log10() const;
};

// ---------------------------------------------------------------------------
// Constant tracker

struct ConstantTracker {
  int n = 3;
  double c_base = 1.0;
  double n1 = 1.0;      // number of balls in a sphere chain
  double delta1 = 0.5;  // exponent of the propagation-of-smallness step
  double tau = 0.0;     // ln(4/3)/ln 4
  double tau_r = 0.0;   // ln((3r1-r)/(3r1-2r)) / ln((3r1-r)/r1)
  double r1 = 0.0;
  double r = 0.0;
  double r0 = 0.0;

  /// N1 defaults to |Ω|/(c_n r1^n) + 1 with c_n the unit-ball volume.
  static ConstantTracker make(const Partition& p, int n, double c_base, double r1, double r,
                              std::optional<double> n1 = std::nullopt, double delta1 = 0.5);
  void validate() const;
  /// ln μ_k with μ_k = τ^{(k+1)N1} δ1^{k+1} τ_r.
  double log_mu(int k) const;
};

double three_sphere_exponent();
double radius_exponent(double r1, double r);
double unit_ball_volume(int n);

/// 1/(2 ω_N^{-1}(1/(2(C+1)^N))) in iterated-log form.
ConstantBound constant_bound(int N, const ConstantTracker& tracker);

// ---------------------------------------------------------------------------
// Three-sphere checker

/// max |u| on the circle of radius rho, which is the sup over the disk for harmonic u.
double circle_sup(const std::function<double(const Vec2&)>& u, const Vec2& center, double rho, int samples = 4096);

struct ThreeSphereResult {
  double ratio = 0.0;
  bool skipped = false;  // u vanishes on the inner disk
};

/// ‖u‖_{B_3r} / (‖u‖_{B_r}^τ ‖u‖_{B_4r}^{1-τ}) with sup norms.
ThreeSphereResult three_sphere_check(const std::function<double(const Vec2&)>& u, const Vec2& center, double r,
                                     int samples = 4096);

struct ThreeSphereSuite {
  double max_ratio = 0.0;
  int evaluated = 0;
  int skipped = 0;
};
ThreeSphereSuite three_sphere_suite(int count, int max_degree, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Sensitivity, reconstruction, sweeps

inline constexpr int kDefaultModes = 17;

struct Sensitivity {
  DtNMap dtn;                            // Λ at the linearization point
  std::vector<Eigen::MatrixXcd> columns;  // ∂Λ/∂γ_j in the trace basis
  ModalBasis basis;
  Eigen::MatrixXcd jacobian;             // vec(vᵀ ∂Λ/∂γ_j v), one column per region
  Eigen::VectorXd singular_values;
  Eigen::MatrixXcd left;                 // left singular vectors
  double sigma_min = 0.0;
  bool rank_deficient = false;
};

/// Exact derivative of the Schur complement: ∂Λ/∂γ_j = Uᵀ K^{(j)} U with U the
/// discrete harmonic extension of the boundary hats. Metric: Frobenius norm of the
/// projection onto `modes` W_{1/2}-orthonormal boundary modes (0 = all).
Sensitivity sensitivity_jacobian(std::shared_ptr<const Mesh> mesh, const Admittivity& a0, int modes = kDefaultModes);

/// Euclidean projection of z onto {Re z >= 1/λ, |z| <= λ}.
cplx project_admissible(cplx z, double lambda);
Admittivity project_admissible(const Admittivity& a);

struct ReconstructOptions {
  int max_iterations = 30;
  int modes = kDefaultModes;
  double misfit_tolerance = 1e-12;  // relative to the projected target norm
  double step_tolerance = 1e-12;    // relative to |γ|
};

struct ReconstructStep {
  int iter = 0;
  double misfit = 0.0;
  double err_inf = 0.0;  // NaN without a known truth
};

struct Reconstruction {
  Admittivity estimate;
  std::vector<ReconstructStep> history;
  int iterations = 0;
  double misfit = 0.0;
  bool converged = false;
};

/// Gauss–Newton on the 2N real parameters (Re γ_j, Im γ_j), minimizing the
/// projected misfit ‖vᵀ(Λ(γ) - target)v‖_F with backtracking and projection onto
/// the ellipticity set after every step.
Reconstruction gauss_newton_reconstruct(const DtNMap& target, std::shared_ptr<const Mesh> mesh,
                                        const Admittivity& guess, const ReconstructOptions& options = {},
                                        const Admittivity* truth = nullptr);

/// Perturbation of a DtN matrix whose projected size is exactly eta: the worst
/// singular direction of the Jacobian mixed with a seeded random symmetric part.
Eigen::MatrixXcd structured_noise(const Sensitivity& s, double eta, std::uint64_t seed, double random_weight = 0.5);

struct SweepScenario {
  std::string id;
  Admittivity first;
  Admittivity second;
};

struct SweepRecord {
  std::string id;
  int n = 0;
  double E = 0.0;
  double eps = 0.0;
  double ratio = 0.0;  // NaN when eps = 0
  double h = 0.0;
};

enum class SweepData { full_boundary, bottom_edge };

struct SweepOptions {
  int modes = kDefaultModes;  // 0: full discrete operator norm
  SweepData data = SweepData::full_boundary;
};

std::vector<SweepRecord> stability_sweep(const std::vector<SweepScenario>& scenarios, std::shared_ptr<const Mesh> mesh,
                                         const SweepOptions& options = {});
std::map<int, double> max_ratio_per_n(const std::vector<SweepRecord>& records);

}  // namespace lipstab
