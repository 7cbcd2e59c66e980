#include "lipstab/dtn.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "lipstab/csv.hpp"
#include "lipstab/error.hpp"

namespace lipstab {

namespace {

std::string hash_hex(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

}  // namespace

SchurComplement schur_complement(const DirichletSolver& solver) {
  const Eigen::MatrixXcd kib = Eigen::MatrixXcd(solver.k_ib());
  SchurComplement out;
  out.extension = -solver.solve_interior(kib);
  out.lambda = Eigen::MatrixXcd(solver.k_bb()) + solver.k_bi() * out.extension;
  return out;
}

void boundary_matrices(const Mesh& m, Eigen::MatrixXd& mass, Eigen::MatrixXd& stiffness) {
  const int nb = m.boundary_count();
  const auto pos = m.boundary_position();
  mass = Eigen::MatrixXd::Zero(nb, nb);
  stiffness = Eigen::MatrixXd::Zero(nb, nb);
  for (const auto& e : m.boundary_edges) {
    const int i = pos[static_cast<std::size_t>(e[0])], j = pos[static_cast<std::size_t>(e[1])];
    if (i < 0 || j < 0) throw Error(ErrorKind::geometry, "boundary edge touches an interior node");
    const double len = (m.nodes[static_cast<std::size_t>(e[0])] - m.nodes[static_cast<std::size_t>(e[1])]).norm();
    mass(i, i) += len / 3.0;
    mass(j, j) += len / 3.0;
    mass(i, j) += len / 6.0;
    mass(j, i) += len / 6.0;
    stiffness(i, i) += 1.0 / len;
    stiffness(j, j) += 1.0 / len;
    stiffness(i, j) -= 1.0 / len;
    stiffness(j, i) -= 1.0 / len;
  }
}

DtNMap dtn_matrix(const DirichletSolver& solver) {
  const Mesh& m = *solver.system().mesh;
  DtNMap d;
  d.matrix = schur_complement(solver).lambda;
  boundary_matrices(m, d.mass, d.stiffness);
  d.w_half = h_half_gram(d.mass, d.stiffness, 0.5);
  d.nodes = m.boundary_nodes;
  d.mesh_hash = m.hash();
  d.h = m.h;
  return d;
}

DtNMap dtn_matrix(std::shared_ptr<const Mesh> mesh, const Admittivity& a) {
  return dtn_matrix(DirichletSolver(assemble(std::move(mesh), a)));
}

Eigen::MatrixXd h_half_gram(const Eigen::MatrixXd& mass, const Eigen::MatrixXd& stiffness, double s) {
  if (mass.rows() != mass.cols() || stiffness.rows() != mass.rows() || stiffness.cols() != mass.cols()) {
    throw Error(ErrorKind::mismatch, "mass and stiffness must be square and of equal size");
  }
  if (s == 0.0) return mass;
  Eigen::LLT<Eigen::MatrixXd> llt(mass);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::non_spd, "boundary mass matrix is not positive definite");
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(stiffness, mass);
  if (ges.info() != Eigen::Success) throw Error(ErrorKind::eigen_failure, "generalized eigenproblem (B, M) failed");
  const Eigen::MatrixXd& v = ges.eigenvectors();  // Vᵀ M V = I, so V^{-1} = Vᵀ M
  Eigen::VectorXd scale = ges.eigenvalues();
  for (Eigen::Index i = 0; i < scale.size(); ++i) {
    if (scale[i] < -1e-8 * std::max(1.0, scale.cwiseAbs().maxCoeff())) {
      throw Error(ErrorKind::non_spd, "boundary stiffness has a negative eigenvalue");
    }
    scale[i] = std::pow(1.0 + std::max(scale[i], 0.0), s);
  }
  const Eigen::MatrixXd mv = mass * v;
  Eigen::MatrixXd w = mv * scale.asDiagonal() * mv.transpose();
  return 0.5 * (w + w.transpose());
}

Eigen::LLT<Eigen::MatrixXd> gram_factor(const Eigen::MatrixXd& w) {
  Eigen::LLT<Eigen::MatrixXd> llt(w);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::non_spd, "Gram matrix is not positive definite");
  return llt;
}

Eigen::MatrixXcd whiten(const Eigen::MatrixXcd& a, const Eigen::LLT<Eigen::MatrixXd>& w) {
  const Eigen::MatrixXcd l = w.matrixL().toDenseMatrix().cast<cplx>();
  const Eigen::MatrixXcd y = l.triangularView<Eigen::Lower>().solve(a);
  return l.triangularView<Eigen::Lower>().solve(y.transpose()).transpose();
}

Eigen::MatrixXcd unwhiten(const Eigen::MatrixXcd& a, const Eigen::LLT<Eigen::MatrixXd>& w) {
  const Eigen::MatrixXcd l = w.matrixL().toDenseMatrix().cast<cplx>();
  return l * a * l.transpose();
}

double operator_norm(const Eigen::MatrixXcd& delta, const Eigen::MatrixXd& w_half) {
  if (delta.rows() != w_half.rows() || delta.cols() != w_half.cols()) {
    throw Error(ErrorKind::mismatch, "operator and Gram sizes differ");
  }
  if (delta.size() == 0 || delta.cwiseAbs().maxCoeff() == 0.0) {
    gram_factor(w_half);
    return 0.0;
  }
  const Eigen::MatrixXcd a = whiten(delta, gram_factor(w_half));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a.adjoint() * a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::eigen_failure, "singular value computation failed");
  return std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0));
}

ModalBasis modal_basis(const Eigen::MatrixXd& w_half, const Eigen::MatrixXd& mass, int modes) {
  if (w_half.rows() != mass.rows() || w_half.cols() != mass.cols()) {
    throw Error(ErrorKind::mismatch, "Gram and mass sizes differ");
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(w_half, mass);
  if (ges.info() != Eigen::Success) throw Error(ErrorKind::eigen_failure, "generalized eigenproblem (W, M) failed");
  const Eigen::Index n = w_half.rows();
  const Eigen::Index k = modes <= 0 ? n : std::min<Eigen::Index>(modes, n);
  ModalBasis b;
  b.v = ges.eigenvectors().leftCols(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double mu = ges.eigenvalues()[j];
    if (!(mu > 0.0)) throw Error(ErrorKind::non_spd, "Gram matrix is not positive definite");
    b.v.col(j) /= std::sqrt(mu);
  }
  return b;
}

ModalBasis modal_basis(const DtNMap& d, int modes) { return modal_basis(d.w_half, d.mass, modes); }

Eigen::MatrixXcd ModalBasis::project(const Eigen::MatrixXcd& a) const {
  if (a.rows() != v.rows() || a.cols() != v.rows()) throw Error(ErrorKind::mismatch, "operator and basis sizes differ");
  return v.transpose().cast<cplx>() * a * v.cast<cplx>();
}

Eigen::MatrixXcd ModalBasis::lift(const Eigen::MatrixXcd& c, const Eigen::MatrixXd& w_half) const {
  const Eigen::MatrixXcd wv = (w_half * v).cast<cplx>();
  return wv * c * wv.transpose();
}

double band_norm(const Eigen::MatrixXcd& delta, const ModalBasis& basis) {
  const Eigen::MatrixXcd a = basis.project(delta);
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a.adjoint() * a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::eigen_failure, "singular value computation failed");
  return std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0));
}

DtNMap local_dtn(const DtNMap& d, std::span<const int> sigma) {
  std::vector<int> keep;
  if (static_cast<int>(sigma.size()) >= d.size()) {
    keep.assign(sigma.begin(), sigma.end());
  } else if (sigma.size() > 2) {
    keep.assign(sigma.begin() + 1, sigma.end() - 1);
  }
  if (keep.empty()) throw Error(ErrorKind::empty_subset, "boundary arc has no interior nodes");
  for (int k : keep) {
    if (k < 0 || k >= d.size()) throw Error(ErrorKind::range, "trace position out of range");
  }
  const auto n = static_cast<Eigen::Index>(keep.size());
  DtNMap out;
  out.matrix.resize(n, n);
  out.mass.resize(n, n);
  out.stiffness.resize(n, n);
  out.w_half.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto a = keep[static_cast<std::size_t>(i)], b = keep[static_cast<std::size_t>(j)];
      out.matrix(i, j) = d.matrix(a, b);
      out.mass(i, j) = d.mass(a, b);
      out.stiffness(i, j) = d.stiffness(a, b);
      out.w_half(i, j) = d.w_half(a, b);
    }
    out.nodes.push_back(d.nodes[static_cast<std::size_t>(keep[static_cast<std::size_t>(i)])]);
  }
  out.mesh_hash = d.mesh_hash;
  out.h = d.h;
  return out;
}

std::vector<int> boundary_arc(const Mesh& m, const std::function<bool(const Vec2&)>& pred) {
  const int nb = m.boundary_count();
  std::vector<char> hit(static_cast<std::size_t>(nb));
  int count = 0;
  for (int k = 0; k < nb; ++k) {
    hit[static_cast<std::size_t>(k)] = pred(m.nodes[static_cast<std::size_t>(m.boundary_nodes[static_cast<std::size_t>(k)])]);
    count += hit[static_cast<std::size_t>(k)];
  }
  if (count == 0) throw Error(ErrorKind::empty_subset, "no boundary node matches the arc predicate");
  std::vector<int> arc;
  if (count == nb) {
    for (int k = 0; k < nb; ++k) arc.push_back(k);
    return arc;
  }
  int start = 0;
  while (!(hit[static_cast<std::size_t>(start)] && !hit[static_cast<std::size_t>((start + nb - 1) % nb)])) ++start;
  for (int k = 0; k < nb; ++k) {
    const int p = (start + k) % nb;
    if (!hit[static_cast<std::size_t>(p)]) break;
    arc.push_back(p);
  }
  if (static_cast<int>(arc.size()) != count) throw Error(ErrorKind::geometry, "boundary subset is not one contiguous arc");
  return arc;
}

void write_dtn_csv(std::ostream& out, const DtNMap& d) {
  out << "# lipstab dtn v1 mesh_hash=" << hash_hex(d.mesh_hash) << " n=" << d.size() << '\n';
  std::vector<std::string> header{"row"};
  for (int j = 0; j < d.size(); ++j) {
    header.push_back("c" + std::to_string(j) + "_re");
    header.push_back("c" + std::to_string(j) + "_im");
  }
  CsvWriter csv(out, header);
  for (int i = 0; i < d.size(); ++i) {
    csv.cell(i);
    for (int j = 0; j < d.size(); ++j) csv.cell(d.matrix(i, j).real()).cell(d.matrix(i, j).imag());
    csv.end_row();
  }
}

void write_real_matrix_csv(std::ostream& out, const Eigen::MatrixXd& a, const std::string& label,
                           std::uint64_t mesh_hash) {
  out << "# lipstab " << label << " v1 mesh_hash=" << hash_hex(mesh_hash) << " n=" << a.rows() << '\n';
  std::vector<std::string> header{"row"};
  for (Eigen::Index j = 0; j < a.cols(); ++j) header.push_back("c" + std::to_string(j));
  CsvWriter csv(out, header);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    csv.cell(static_cast<long long>(i));
    for (Eigen::Index j = 0; j < a.cols(); ++j) csv.cell(a(i, j));
    csv.end_row();
  }
}

}  // namespace lipstab
