#pragma once

#include <array>
#include <functional>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "lipstab/geometry.hpp"
#include "lipstab/types.hpp"

namespace lipstab {

using SparseC = Eigen::SparseMatrix<cplx>;
using SparseR = Eigen::SparseMatrix<double>;

/// Piecewise-constant complex admittivity γ_1..γ_N; the extension strip (region 0)
/// always carries γ_0 = 1.
struct Admittivity {
  std::vector<cplx> values;
  double lambda = 1.0;

  int count() const { return static_cast<int>(values.size()); }
  cplx at(int region) const;
  /// Checks Re γ_j >= 1/λ and |γ_j| <= λ; throws a validation error naming the offending entry.
  void validate() const;
  /// max_j |γ_j - other_j|.
  double max_difference(const Admittivity& other) const;

  static Admittivity uniform(int n, cplx value, double lambda);
};

/// Laplace stiffness of the triangles tagged `region` (all triangles if region < 0).
SparseR region_stiffness(const Mesh& m, int region = -1);
/// Consistent P1 mass matrix.
SparseR mass_matrix(const Mesh& m);

/// Complex stiffness Σ_T γ(T) K_T, which equals its plain transpose.
struct LinearSystem {
  std::shared_ptr<const Mesh> mesh;
  Admittivity admittivity;
  SparseC stiffness;
};

LinearSystem assemble(std::shared_ptr<const Mesh> mesh, const Admittivity& a);

struct FieldSolution {
  std::shared_ptr<const Mesh> mesh;
  Admittivity admittivity;
  Eigen::VectorXcd trace;   // boundary datum in trace-basis order
  Eigen::VectorXcd values;  // nodal values
  double residual = 0.0;    // relative interior residual

  /// Constant gradient on triangle t.
  CVec2 gradient(int t) const;
};

/// Factorization of the interior block, reused across boundary data.
class DirichletSolver {
 public:
  explicit DirichletSolver(const LinearSystem& system);

  FieldSolution solve(const Eigen::VectorXcd& trace) const;
  /// Solves K_ii u_i = load_i - K_ib f, where `load` is indexed by mesh node.
  FieldSolution solve(const Eigen::VectorXcd& trace, const Eigen::VectorXcd& load) const;
  /// K_ii^{-1} rhs for a block of interior right-hand sides (parallel over columns).
  Eigen::MatrixXcd solve_interior(const Eigen::MatrixXcd& rhs) const;

  const std::vector<int>& interior_nodes() const { return interior_; }
  const std::vector<int>& boundary_nodes() const { return mesh_->boundary_nodes; }
  const SparseC& k_ii() const { return kii_; }
  const SparseC& k_ib() const { return kib_; }
  const SparseC& k_bi() const { return kbi_; }
  const SparseC& k_bb() const { return kbb_; }
  const LinearSystem& system() const { return system_; }

 private:
  LinearSystem system_;
  std::shared_ptr<const Mesh> mesh_;
  std::vector<int> interior_;
  SparseC kii_, kib_, kbi_, kbb_;
  Eigen::SparseLU<SparseC, Eigen::COLAMDOrdering<int>> lu_;
};

FieldSolution solve_dirichlet(const LinearSystem& system, const Eigen::VectorXcd& trace);

/// Solves the equivalent real 2×2 system for (Re u, Im u) with coefficient tensor
/// c_{lj}^{hk} = σ δ_hk δ_lj - ε δ_hk (δ_l1 δ_j2 - δ_l2 δ_j1).
FieldSolution solve_real_system(std::shared_ptr<const Mesh> mesh, const Admittivity& a,
                                const Eigen::VectorXcd& trace);

/// c_{lj}^{hk} indexed as [l][j][h][k] (zero-based) for one admittivity value.
using RealTensor = std::array<std::array<std::array<std::array<double, 2>, 2>, 2>, 2>;
RealTensor real_system_tensor(cplx gamma);
/// Σ c_{lj}^{hk} ξ_h^l ξ_k^j for ξ(l, h).
double real_system_form(const RealTensor& c, const Eigen::Matrix2d& xi);

Eigen::VectorXcd trace_of(const Mesh& m, const std::function<cplx(const Vec2&)>& f);

/// (R-ρ)² ∫_{B_ρ}|∇u|² / ∫_{B_R}|u|² by clipped seven-point quadrature. The ball
/// B_R(x0) must lie inside the mesh and inside a single region.
double caccioppoli_ratio(const FieldSolution& u, const Vec2& x0, double rho, double R);

/// Re Σ_m c_m (z - center)^m, harmonic in the plane.
struct HarmonicPolynomial {
  Vec2 center{0.0, 0.0};
  std::vector<cplx> coeffs;

  double operator()(const Vec2& x) const;

  static HarmonicPolynomial monomial(int m, const Vec2& center = {0.0, 0.0});
  /// Standard complex normal coefficients up to `degree`, the constant term included.
  static HarmonicPolynomial random(int degree, std::mt19937_64& rng, const Vec2& center = {0.0, 0.0});
};

struct CaccioppoliSuite {
  double max_ratio = 0.0;
  int count = 0;
};

/// Discrete solutions with random harmonic-polynomial data (degree <= `degree`);
/// the largest caccioppoli_ratio over the suite.
CaccioppoliSuite caccioppoli_suite(std::shared_ptr<const Mesh> mesh, const Admittivity& a, const Vec2& x0, double rho,
                                   double R, int count, int degree, std::uint64_t seed);

/// Discrete H¹ norm √(uᴴ M u + uᴴ K u).
double h1_norm(const Mesh& m, const Eigen::VectorXcd& values);

}  // namespace lipstab
