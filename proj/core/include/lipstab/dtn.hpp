#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "lipstab/forward.hpp"

namespace lipstab {

/// Discrete Dirichlet-to-Neumann map in the boundary hat-function basis, with the
/// boundary mass M, the boundary Laplace–Beltrami stiffness B and the Gram
/// matrix W_{1/2} of the discrete H^{1/2} norm.
struct DtNMap {
  Eigen::MatrixXcd matrix;
  Eigen::MatrixXd mass;
  Eigen::MatrixXd stiffness;
  Eigen::MatrixXd w_half;
  std::vector<int> nodes;  // mesh node ids, in trace order
  std::uint64_t mesh_hash = 0;
  double h = 0.0;

  int size() const { return static_cast<int>(matrix.rows()); }
};

/// Schur complement Λ = K_bb - K_bi K_ii^{-1} K_ib together with the discrete
/// harmonic extension X = -K_ii^{-1} K_ib of the boundary hats.
struct SchurComplement {
  Eigen::MatrixXcd lambda;
  Eigen::MatrixXcd extension;
};
SchurComplement schur_complement(const DirichletSolver& solver);

/// P1 mass and stiffness of the closed boundary polygon, in trace order.
void boundary_matrices(const Mesh& m, Eigen::MatrixXd& mass, Eigen::MatrixXd& stiffness);

DtNMap dtn_matrix(std::shared_ptr<const Mesh> mesh, const Admittivity& a);
DtNMap dtn_matrix(const DirichletSolver& solver);

/// W_s = M V (I + D)^s V^{-1} where B V = M V D; W_0 = M and W_1 = M + B.
Eigen::MatrixXd h_half_gram(const Eigen::MatrixXd& mass, const Eigen::MatrixXd& stiffness, double s);

/// L^{-1} A L^{-T} with W = L Lᵀ.
Eigen::MatrixXcd whiten(const Eigen::MatrixXcd& a, const Eigen::LLT<Eigen::MatrixXd>& w);
/// L Ã Lᵀ, the inverse of whiten.
Eigen::MatrixXcd unwhiten(const Eigen::MatrixXcd& a, const Eigen::LLT<Eigen::MatrixXd>& w);
Eigen::LLT<Eigen::MatrixXd> gram_factor(const Eigen::MatrixXd& w);

/// sup |ψᴴ Δ f| / (‖f‖_W ‖ψ‖_W): the largest singular value of L^{-1} Δ L^{-T}.
double operator_norm(const Eigen::MatrixXcd& delta, const Eigen::MatrixXd& w_half);

/// The lowest `modes` eigenvectors of W_{1/2} v = μ M v, scaled to be
/// W_{1/2}-orthonormal. On a closed boundary these are the Laplace–Beltrami
/// modes. modes <= 0 keeps the whole space.
struct ModalBasis {
  Eigen::MatrixXd v;

  int modes() const { return static_cast<int>(v.cols()); }
  /// vᵀ A v: coordinates of a boundary operator in the orthonormal modal frame.
  Eigen::MatrixXcd project(const Eigen::MatrixXcd& a) const;
  /// A with vᵀ A v = c and no component outside the span: W v c vᵀ W.
  Eigen::MatrixXcd lift(const Eigen::MatrixXcd& c, const Eigen::MatrixXd& w_half) const;
};
ModalBasis modal_basis(const Eigen::MatrixXd& w_half, const Eigen::MatrixXd& mass, int modes);
ModalBasis modal_basis(const DtNMap& d, int modes);

/// Operator norm restricted to the span of the basis: σ_max(vᵀ Δ v). With the
/// full basis this equals operator_norm.
double band_norm(const Eigen::MatrixXcd& delta, const ModalBasis& basis);

/// Restriction to the hat functions supported inside a contiguous boundary arc.
/// `sigma` lists trace positions along the arc; its two end nodes are dropped
/// unless the arc is the whole boundary. The Gram is the principal submatrix of
/// the global W_{1/2}, so norms are those of the global space.
DtNMap local_dtn(const DtNMap& d, std::span<const int> sigma);

/// Trace positions of boundary nodes satisfying `pred`, as one contiguous arc in
/// counterclockwise order. Throws empty-subset if none match, geometry if the
/// matching nodes are not contiguous.
std::vector<int> boundary_arc(const Mesh& m, const std::function<bool(const Vec2&)>& pred);

/// CSV exports: the DtN matrix with re/im interleaved columns, and M, B.
void write_dtn_csv(std::ostream& out, const DtNMap& d);
void write_real_matrix_csv(std::ostream& out, const Eigen::MatrixXd& a, const std::string& label,
                           std::uint64_t mesh_hash);

}  // namespace lipstab
