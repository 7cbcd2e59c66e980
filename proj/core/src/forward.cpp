#include "lipstab/forward.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lipstab/error.hpp"
#include "lipstab/parallel.hpp"
#include "lipstab/quadrature.hpp"

namespace lipstab {

namespace {

constexpr double kResidualLimit = 1e-8;

std::string format_cplx(cplx z) {
  std::ostringstream os;
  os << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i";
  return os.str();
}

void check_tags(const Mesh& m, const Admittivity& a) {
  for (const auto& t : m.triangles) {
    if (t.region < 0 || t.region > a.count()) {
      throw Error(ErrorKind::tagging, "triangle tagged with region " + std::to_string(t.region) +
                                          " but admittivity has " + std::to_string(a.count()) + " values");
    }
  }
}

template <class Scalar>
Eigen::SparseMatrix<Scalar> assemble_weighted(const Mesh& m, const std::function<Scalar(int)>& weight) {
  std::vector<Eigen::Triplet<Scalar>> trip;
  trip.reserve(m.triangles.size() * 9);
  for (int t = 0; t < m.triangle_count(); ++t) {
    const Scalar w = weight(m.triangles[static_cast<std::size_t>(t)].region);
    if (w == Scalar(0)) continue;
    const auto g = m.barycentric_gradients(t);
    const double area = std::abs(m.signed_area(t));
    const auto& v = m.triangles[static_cast<std::size_t>(t)].v;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        trip.emplace_back(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)],
                          w * (area * g[static_cast<std::size_t>(i)].dot(g[static_cast<std::size_t>(j)])));
      }
    }
  }
  Eigen::SparseMatrix<Scalar> k(m.node_count(), m.node_count());
  k.setFromTriplets(trip.begin(), trip.end());
  return k;
}

}  // namespace

cplx Admittivity::at(int region) const {
  if (region == 0) return cplx{1.0, 0.0};
  if (region < 1 || region > count()) {
    throw Error(ErrorKind::tagging, "no admittivity value for region " + std::to_string(region));
  }
  return values[static_cast<std::size_t>(region - 1)];
}

void Admittivity::validate() const {
  if (values.empty()) throw Error(ErrorKind::validation, "admittivity has no values");
  if (!(lambda >= 1.0)) {
    throw Error(ErrorKind::validation, "ellipticity bound lambda must be >= 1, got " + std::to_string(lambda));
  }
  for (int j = 1; j <= count(); ++j) {
    const cplx g = at(j);
    if (!(g.real() >= 1.0 / lambda) || !(std::abs(g) <= lambda)) {
      throw Error(ErrorKind::validation,
                  "gamma_" + std::to_string(j) + " = " + format_cplx(g) +
                      " violates the ellipticity condition Re(gamma) >= 1/lambda, |gamma| <= lambda (lambda = " +
                      std::to_string(lambda) + ")");
    }
  }
}

double Admittivity::max_difference(const Admittivity& other) const {
  if (other.count() != count()) throw Error(ErrorKind::mismatch, "admittivities differ in region count");
  double e = 0.0;
  for (int j = 1; j <= count(); ++j) e = std::max(e, std::abs(at(j) - other.at(j)));
  return e;
}

Admittivity Admittivity::uniform(int n, cplx value, double lambda) {
  return Admittivity{std::vector<cplx>(static_cast<std::size_t>(n), value), lambda};
}

SparseR region_stiffness(const Mesh& m, int region) {
  return assemble_weighted<double>(m, [region](int r) { return region < 0 || r == region ? 1.0 : 0.0; });
}

SparseR mass_matrix(const Mesh& m) {
  std::vector<Eigen::Triplet<double>> trip;
  for (int t = 0; t < m.triangle_count(); ++t) {
    const double area = std::abs(m.signed_area(t));
    const auto& v = m.triangles[static_cast<std::size_t>(t)].v;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) trip.emplace_back(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)], area / (i == j ? 6.0 : 12.0));
    }
  }
  SparseR mm(m.node_count(), m.node_count());
  mm.setFromTriplets(trip.begin(), trip.end());
  return mm;
}

LinearSystem assemble(std::shared_ptr<const Mesh> mesh, const Admittivity& a) {
  check_tags(*mesh, a);
  LinearSystem sys;
  sys.admittivity = a;
  sys.stiffness = assemble_weighted<cplx>(*mesh, [&a](int r) { return a.at(r); });
  sys.mesh = std::move(mesh);
  return sys;
}

CVec2 FieldSolution::gradient(int t) const {
  const auto g = mesh->barycentric_gradients(t);
  const auto& v = mesh->triangles[static_cast<std::size_t>(t)].v;
  CVec2 out = CVec2::Zero();
  for (int i = 0; i < 3; ++i) {
    out += values[v[static_cast<std::size_t>(i)]] * g[static_cast<std::size_t>(i)].cast<cplx>();
  }
  return out;
}

DirichletSolver::DirichletSolver(const LinearSystem& system) : system_(system), mesh_(system.mesh) {
  const auto pos = mesh_->boundary_position();
  std::vector<int> local(pos.size(), -1);
  for (int n = 0; n < mesh_->node_count(); ++n) {
    if (pos[static_cast<std::size_t>(n)] < 0) {
      local[static_cast<std::size_t>(n)] = static_cast<int>(interior_.size());
      interior_.push_back(n);
    }
  }
  const int ni = static_cast<int>(interior_.size());
  const int nb = mesh_->boundary_count();
  std::vector<Eigen::Triplet<cplx>> tii, tib, tbi, tbb;
  const SparseC& k = system_.stiffness;
  for (int col = 0; col < k.outerSize(); ++col) {
    for (SparseC::InnerIterator it(k, col); it; ++it) {
      const auto r = static_cast<std::size_t>(it.row());
      const auto c = static_cast<std::size_t>(it.col());
      const bool rb = pos[r] >= 0, cb = pos[c] >= 0;
      if (!rb && !cb) tii.emplace_back(local[r], local[c], it.value());
      if (!rb && cb) tib.emplace_back(local[r], pos[c], it.value());
      if (rb && !cb) tbi.emplace_back(pos[r], local[c], it.value());
      if (rb && cb) tbb.emplace_back(pos[r], pos[c], it.value());
    }
  }
  kii_.resize(ni, ni);
  kib_.resize(ni, nb);
  kbi_.resize(nb, ni);
  kbb_.resize(nb, nb);
  kii_.setFromTriplets(tii.begin(), tii.end());
  kib_.setFromTriplets(tib.begin(), tib.end());
  kbi_.setFromTriplets(tbi.begin(), tbi.end());
  kbb_.setFromTriplets(tbb.begin(), tbb.end());
  if (ni > 0) {
    lu_.analyzePattern(kii_);
    lu_.factorize(kii_);
    if (lu_.info() != Eigen::Success) {
      throw Error(ErrorKind::solver_breakdown,
                  "sparse LU of the interior stiffness failed (" + lu_.lastErrorMessage() +
                      "); the admittivity is probably not elliptic");
    }
  }
}

Eigen::MatrixXcd DirichletSolver::solve_interior(const Eigen::MatrixXcd& rhs) const {
  Eigen::MatrixXcd out(rhs.rows(), rhs.cols());
  if (rhs.rows() == 0) return out;
  parallel_for(static_cast<int>(rhs.cols()), [&](int begin, int end) {
    if (begin < end) out.middleCols(begin, end - begin) = lu_.solve(rhs.middleCols(begin, end - begin));
  });
  return out;
}

FieldSolution DirichletSolver::solve(const Eigen::VectorXcd& trace) const {
  return solve(trace, Eigen::VectorXcd::Zero(mesh_->node_count()));
}

FieldSolution DirichletSolver::solve(const Eigen::VectorXcd& trace, const Eigen::VectorXcd& load) const {
  if (trace.size() != mesh_->boundary_count()) {
    throw Error(ErrorKind::mismatch, "trace has " + std::to_string(trace.size()) + " entries, mesh has " +
                                         std::to_string(mesh_->boundary_count()) + " boundary nodes");
  }
  const int ni = static_cast<int>(interior_.size());
  Eigen::VectorXcd rhs(ni);
  for (int i = 0; i < ni; ++i) rhs[i] = load[interior_[static_cast<std::size_t>(i)]];
  rhs -= kib_ * trace;

  FieldSolution sol;
  sol.mesh = mesh_;
  sol.admittivity = system_.admittivity;
  sol.trace = trace;
  sol.values = Eigen::VectorXcd::Zero(mesh_->node_count());
  Eigen::VectorXcd ui;
  if (ni > 0) {
    ui = lu_.solve(rhs);
    const double scale = std::max(rhs.norm(), 1e-300);
    sol.residual = (kii_ * ui - rhs).norm() / scale;
    if (!std::isfinite(sol.residual) || sol.residual > kResidualLimit) {
      throw Error(ErrorKind::solver_breakdown,
                  "relative residual " + std::to_string(sol.residual) + " after direct solve");
    }
    for (int i = 0; i < ni; ++i) sol.values[interior_[static_cast<std::size_t>(i)]] = ui[i];
  }
  for (int k = 0; k < mesh_->boundary_count(); ++k) {
    sol.values[mesh_->boundary_nodes[static_cast<std::size_t>(k)]] = trace[k];
  }
  return sol;
}

FieldSolution solve_dirichlet(const LinearSystem& system, const Eigen::VectorXcd& trace) {
  return DirichletSolver(system).solve(trace);
}

RealTensor real_system_tensor(cplx gamma) {
  const double sigma = gamma.real(), eps = gamma.imag();
  RealTensor c{};
  for (int l = 0; l < 2; ++l) {
    for (int j = 0; j < 2; ++j) {
      for (int h = 0; h < 2; ++h) {
        for (int k = 0; k < 2; ++k) {
          const double dhk = h == k ? 1.0 : 0.0;
          const double dlj = l == j ? 1.0 : 0.0;
          const double anti = (l == 0 && j == 1 ? 1.0 : 0.0) - (l == 1 && j == 0 ? 1.0 : 0.0);
          c[l][j][h][k] = sigma * dhk * dlj - eps * dhk * anti;
        }
      }
    }
  }
  return c;
}

double real_system_form(const RealTensor& c, const Eigen::Matrix2d& xi) {
  double s = 0.0;
  for (int l = 0; l < 2; ++l)
    for (int j = 0; j < 2; ++j)
      for (int h = 0; h < 2; ++h)
        for (int k = 0; k < 2; ++k) s += c[l][j][h][k] * xi(l, h) * xi(j, k);
  return s;
}

FieldSolution solve_real_system(std::shared_ptr<const Mesh> mesh, const Admittivity& a,
                                const Eigen::VectorXcd& trace) {
  check_tags(*mesh, a);
  const int n = mesh->node_count();
  if (trace.size() != mesh->boundary_count()) throw Error(ErrorKind::mismatch, "trace size does not match mesh");
  const auto pos = mesh->boundary_position();

  // Unknown ordering: component l of node p sits at l*n + p.
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * n);
  for (int t = 0; t < mesh->triangle_count(); ++t) {
    const auto& tri = mesh->triangles[static_cast<std::size_t>(t)];
    const RealTensor c = real_system_tensor(a.at(tri.region));
    const auto g = mesh->barycentric_gradients(t);
    const double area = std::abs(mesh->signed_area(t));
    for (int i = 0; i < 3; ++i) {
      const int p = tri.v[static_cast<std::size_t>(i)];
      if (pos[static_cast<std::size_t>(p)] >= 0) continue;
      for (int jn = 0; jn < 3; ++jn) {
        const int q = tri.v[static_cast<std::size_t>(jn)];
        for (int l = 0; l < 2; ++l) {
          for (int j = 0; j < 2; ++j) {
            double v = 0.0;
            for (int h = 0; h < 2; ++h)
              for (int k = 0; k < 2; ++k)
                v += c[l][j][h][k] * g[static_cast<std::size_t>(i)][h] * g[static_cast<std::size_t>(jn)][k];
            v *= area;
            if (v == 0.0) continue;
            const int bq = pos[static_cast<std::size_t>(q)];
            if (bq >= 0) {
              const double fq = j == 0 ? trace[bq].real() : trace[bq].imag();
              rhs[l * n + p] -= v * fq;
            } else {
              trip.emplace_back(l * n + p, j * n + q, v);
            }
          }
        }
      }
    }
  }
  // Boundary rows become identities carrying the datum.
  for (int k = 0; k < mesh->boundary_count(); ++k) {
    const int p = mesh->boundary_nodes[static_cast<std::size_t>(k)];
    trip.emplace_back(p, p, 1.0);
    trip.emplace_back(n + p, n + p, 1.0);
    rhs[p] = trace[k].real();
    rhs[n + p] = trace[k].imag();
  }
  SparseR sys(2 * n, 2 * n);
  sys.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<SparseR, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(sys);
  lu.factorize(sys);
  if (lu.info() != Eigen::Success) {
    throw Error(ErrorKind::solver_breakdown, "sparse LU of the real 2x2 system failed: " + lu.lastErrorMessage());
  }
  const Eigen::VectorXd x = lu.solve(rhs);

  FieldSolution sol;
  sol.mesh = mesh;
  sol.admittivity = a;
  sol.trace = trace;
  sol.values.resize(n);
  for (int p = 0; p < n; ++p) sol.values[p] = cplx{x[p], x[n + p]};
  sol.residual = (sys * x - rhs).norm() / std::max(rhs.norm(), 1e-300);
  if (!std::isfinite(sol.residual) || sol.residual > kResidualLimit) {
    throw Error(ErrorKind::solver_breakdown, "relative residual " + std::to_string(sol.residual));
  }
  return sol;
}

Eigen::VectorXcd trace_of(const Mesh& m, const std::function<cplx(const Vec2&)>& f) {
  Eigen::VectorXcd out(m.boundary_count());
  for (int k = 0; k < m.boundary_count(); ++k) out[k] = f(m.nodes[static_cast<std::size_t>(m.boundary_nodes[static_cast<std::size_t>(k)])]);
  return out;
}

double caccioppoli_ratio(const FieldSolution& u, const Vec2& x0, double rho, double R) {
  const Mesh& m = *u.mesh;
  if (!(rho > 0.0) || !(rho < R)) throw Error(ErrorKind::range, "need 0 < rho < R");
  if (!m.contains_ball(x0, R)) throw Error(ErrorKind::geometry, "ball B_R(x0) is not contained in the domain");

  constexpr int kDepth = 7;
  int region = -1;
  double grad_energy = 0.0, mass = 0.0;
  for (int t = 0; t < m.triangle_count(); ++t) {
    const auto& tri = m.triangles[static_cast<std::size_t>(t)];
    const Vec2& a = m.nodes[static_cast<std::size_t>(tri.v[0])];
    const Vec2& b = m.nodes[static_cast<std::size_t>(tri.v[1])];
    const Vec2& c = m.nodes[static_cast<std::size_t>(tri.v[2])];
    const auto g = m.barycentric_gradients(t);
    auto value = [&](const Vec2& x) {
      const double l1 = g[1].dot(x - a), l2 = g[2].dot(x - a);
      return (1.0 - l1 - l2) * u.values[tri.v[0]] + l1 * u.values[tri.v[1]] + l2 * u.values[tri.v[2]];
    };
    const double outer = quad::integrate_clipped(a, b, c, x0, R, quad::BallPart::inside, kDepth,
                                                 [&](const Vec2& x) { return std::norm(value(x)); });
    if (outer == 0.0) continue;
    if (region < 0) region = tri.region;
    if (tri.region != region) throw Error(ErrorKind::geometry, "ball B_R(x0) crosses a region interface");
    mass += outer;
    const double grad2 = u.gradient(t).squaredNorm();
    grad_energy += quad::integrate_clipped(a, b, c, x0, rho, quad::BallPart::inside, kDepth,
                                           [&](const Vec2&) { return grad2; });
  }
  if (mass == 0.0) return 0.0;
  return (R - rho) * (R - rho) * grad_energy / mass;
}

double h1_norm(const Mesh& m, const Eigen::VectorXcd& values) {
  const SparseR mm = mass_matrix(m);
  const SparseR kk = region_stiffness(m);
  const Eigen::VectorXd re = values.real(), im = values.imag();
  const double s = re.dot(mm * re) + im.dot(mm * im) + re.dot(kk * re) + im.dot(kk * im);
  return std::sqrt(std::max(s, 0.0));
}

double HarmonicPolynomial::operator()(const Vec2& x) const {
  const cplx z{x.x() - center.x(), x.y() - center.y()};
  cplx acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * z + *it;
  return acc.real();
}

HarmonicPolynomial HarmonicPolynomial::monomial(int m, const Vec2& center) {
  HarmonicPolynomial p;
  p.center = center;
  p.coeffs.assign(static_cast<std::size_t>(m + 1), cplx{0.0, 0.0});
  p.coeffs.back() = 1.0;
  return p;
}

HarmonicPolynomial HarmonicPolynomial::random(int degree, std::mt19937_64& rng, const Vec2& center) {
  std::normal_distribution<double> normal;
  HarmonicPolynomial p;
  p.center = center;
  for (int m = 0; m <= degree; ++m) {
    const double re = normal(rng);
    const double im = normal(rng);
    p.coeffs.emplace_back(re, im);
  }
  return p;
}

CaccioppoliSuite caccioppoli_suite(std::shared_ptr<const Mesh> mesh, const Admittivity& a, const Vec2& x0, double rho,
                                   double R, int count, int degree, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const DirichletSolver solver(assemble(mesh, a));
  CaccioppoliSuite out;
  for (int i = 0; i < count; ++i) {
    const auto poly = HarmonicPolynomial::random(degree, rng, x0);
    const FieldSolution u = solver.solve(trace_of(*mesh, [&](const Vec2& x) { return cplx{poly(x), 0.0}; }));
    out.max_ratio = std::max(out.max_ratio, caccioppoli_ratio(u, x0, rho, R));
    ++out.count;
  }
  return out;
}

}  // namespace lipstab
