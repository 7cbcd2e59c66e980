#include "lipstab/stability.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "lipstab/csv.hpp"
#include "lipstab/error.hpp"

namespace lipstab {

namespace {

const double kMaxLog = std::log(DBL_MAX);

void require_dimension(int n) {
  if (n < 3) {
    throw Error(ErrorKind::unsupported_dimension,
                "the modulus is degenerate for n = " + std::to_string(n) + "; n >= 3 is required");
  }
}

double omega_cap(int n) { return std::pow(static_cast<double>(n), -(n - 2) / 4.0); }

}  // namespace

double omega(double t, int n) {
  require_dimension(n);
  if (!(t > 0.0)) throw Error(ErrorKind::domain, "omega needs t > 0");
  if (t <= std::exp(-static_cast<double>(n))) return std::pow(std::abs(std::log(t)), -(n - 2) / 4.0);
  return omega_cap(n);
}

double omega_inverse(double y, int n) {
  require_dimension(n);
  if (!(y > 0.0) || y > omega_cap(n)) {
    throw Error(ErrorKind::domain, "omega_inverse needs 0 < y <= n^{-(n-2)/4}");
  }
  return std::exp(-std::pow(y, -4.0 / (n - 2)));
}

double omega_iterate(double t, int n, int k) {
  if (k < 0) throw Error(ErrorKind::range, "iterate count must be nonnegative");
  for (int i = 0; i < k; ++i) t = omega(t, n);
  return t;
}

DeltaRecursion delta_recursion(double eps, double E, double C, int M, int n) {
  require_dimension(n);
  if (!(eps >= 0.0) || !(E >= 0.0)) throw Error(ErrorKind::domain, "eps and E must be nonnegative");
  if (!(C > 0.0)) throw Error(ErrorKind::domain, "base constant C must be positive");
  if (M < 0) throw Error(ErrorKind::range, "chain length must be nonnegative");
  auto w = [n](double t) { return t == 0.0 ? 0.0 : omega(t, n); };
  DeltaRecursion out;
  out.delta.push_back(0.0);
  for (int k = 1; k <= M; ++k) {
    const double num = eps + out.delta.back();
    const double den = num + E;
    out.delta.push_back(den == 0.0 ? 0.0 : C * den * w(num / den));
  }
  if (eps + E > 0.0) {
    double t = eps / (eps + E);
    for (int k = 0; k < M; ++k) t = w(t);
    out.final_bound = std::pow(C + 1.0, M) * (E + eps) * t;
  }
  return out;
}

IteratedExp IteratedExp::normalized() const {
  IteratedExp v = *this;
  while (v.level > 0 && v.top < kMaxLog) {
    v.top = std::exp(v.top);
    --v.level;
  }
  return v;
}

IteratedExp IteratedExp::log() const {
  const IteratedExp v = normalized();
  if (v.level > 0) return IteratedExp{v.level - 1, v.top}.normalized();
  if (!(v.top > 0.0)) throw Error(ErrorKind::domain, "logarithm of a nonpositive value");
  return {0, std::log(v.top)};
}

IteratedExp IteratedExp::scaled(double a) const {
  if (!(a > 0.0)) throw Error(ErrorKind::domain, "scale factor must be positive");
  const IteratedExp v = normalized();
  if (v.level == 0) {
    const double s = a * v.top;
    if (std::isfinite(s)) return {0, s};
    return {1, std::log(a) + std::log(v.top)};
  }
  if (v.level == 1) return {1, v.top + std::log(a)};
  return v;
}

IteratedExp IteratedExp::exp() const {
  const IteratedExp v = normalized();
  if (v.level == 0) return v.top < kMaxLog ? IteratedExp{0, std::exp(v.top)} : IteratedExp{1, v.top};
  return {v.level + 1, v.top};
}

IteratedExp IteratedExp::plus(double c) const {
  const IteratedExp v = normalized();
  if (v.level == 0) return {0, v.top + c};
  return v;
}

double IteratedExp::value() const {
  const IteratedExp v = normalized();
  return v.level == 0 ? v.top : std::numeric_limits<double>::infinity();
}

std::string IteratedExp::str() const {
  const IteratedExp v = normalized();
  if (v.level == 0) return format_number(v.top);
  return "exp^" + std::to_string(v.level) + "(" + format_number(v.top) + ")";
}

bool operator<(const IteratedExp& a, const IteratedExp& b) {
  const IteratedExp x = a.normalized(), y = b.normalized();
  if (x.level != y.level) return x.level < y.level;
  return x.top < y.top;
}

double ConstantBound::log10() const {
  const IteratedExp v = log_bound.normalized();
  if (v.level > 0) return std::numeric_limits<double>::infinity();
  return v.top / std::log(10.0);
}

double three_sphere_exponent() { return std::log(4.0 / 3.0) / std::log(4.0); }

double radius_exponent(double r1, double r) {
  if (!(r1 > 0.0) || !(r > 0.0) || !(r < r1)) throw Error(ErrorKind::domain, "radius exponent needs 0 < r < r1");
  return std::log((3.0 * r1 - r) / (3.0 * r1 - 2.0 * r)) / std::log((3.0 * r1 - r) / r1);
}

double unit_ball_volume(int n) {
  if (n < 1) throw Error(ErrorKind::unsupported_dimension, "dimension must be positive");
  return std::pow(kPi, n / 2.0) / std::tgamma(n / 2.0 + 1.0);
}

ConstantTracker ConstantTracker::make(const Partition& p, int n, double c_base, double r1, double r,
                                      std::optional<double> n1, double delta1) {
  ConstantTracker t;
  t.n = n;
  t.c_base = c_base;
  t.r1 = r1;
  t.r = r;
  t.r0 = p.r0;
  t.delta1 = delta1;
  t.tau = three_sphere_exponent();
  t.tau_r = radius_exponent(r1, r);
  if (!(r1 > 0.0)) throw Error(ErrorKind::domain, "r1 must be positive");
  t.n1 = n1 ? *n1 : p.domain.area() / (unit_ball_volume(n) * std::pow(r1, n)) + 1.0;
  t.validate();
  return t;
}

void ConstantTracker::validate() const {
  require_dimension(n);
  auto open_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!(c_base > 0.0)) throw Error(ErrorKind::validation, "tracker base constant C must be positive");
  if (!open_unit(tau) || !open_unit(delta1) || !open_unit(tau_r)) {
    throw Error(ErrorKind::validation, "tracker exponents tau, delta1, tau_r must lie in (0, 1)");
  }
  if (!(n1 >= 1.0)) throw Error(ErrorKind::validation, "tracker N1 must be at least 1");
}

double ConstantTracker::log_mu(int k) const {
  if (k < 0) throw Error(ErrorKind::range, "chain index must be nonnegative");
  return (k + 1) * n1 * std::log(tau) + (k + 1) * std::log(delta1) + std::log(tau_r);
}

ConstantBound constant_bound(int N, const ConstantTracker& tracker) {
  tracker.validate();
  if (N < 1) throw Error(ErrorKind::range, "region count must be at least 1");
  const int n = tracker.n;
  // x_k = ω^{-1}(x_{k-1}) with P_k = -ln x_k satisfies P_k = exp(a P_{k-1}).
  const double a = 4.0 / (n - 2);
  const double p0 = std::log(2.0) + N * std::log(tracker.c_base + 1.0);
  if (std::exp(-p0) > omega_cap(n)) {
    throw Error(ErrorKind::domain, "1/(2(C+1)^N) lies outside the invertible branch of omega");
  }
  IteratedExp p = IteratedExp::from(p0);
  for (int k = 0; k < N; ++k) p = p.scaled(a).exp();
  return ConstantBound{p.plus(-std::log(2.0))};
}

double circle_sup(const std::function<double(const Vec2&)>& u, const Vec2& center, double rho, int samples) {
  if (samples < 1) throw Error(ErrorKind::range, "sample count must be positive");
  double best = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double th = 2.0 * kPi * i / samples;
    best = std::max(best, std::abs(u(center + rho * Vec2{std::cos(th), std::sin(th)})));
  }
  return best;
}

ThreeSphereResult three_sphere_check(const std::function<double(const Vec2&)>& u, const Vec2& center, double r,
                                     int samples) {
  if (!(r > 0.0)) throw Error(ErrorKind::range, "base radius must be positive");
  const double m1 = circle_sup(u, center, r, samples);
  const double m3 = circle_sup(u, center, 3.0 * r, samples);
  const double m4 = circle_sup(u, center, 4.0 * r, samples);
  if (m1 == 0.0 || m4 == 0.0) return {0.0, true};
  const double tau = three_sphere_exponent();
  return {std::exp(std::log(m3) - tau * std::log(m1) - (1.0 - tau) * std::log(m4)), false};
}

ThreeSphereSuite three_sphere_suite(int count, int max_degree, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> degree(1, std::max(1, max_degree));
  ThreeSphereSuite out;
  for (int i = 0; i < count; ++i) {
    const auto poly = HarmonicPolynomial::random(degree(rng), rng);
    const auto res = three_sphere_check(poly, Vec2::Zero(), 1.0);
    if (res.skipped) {
      ++out.skipped;
      continue;
    }
    ++out.evaluated;
    out.max_ratio = std::max(out.max_ratio, res.ratio);
  }
  return out;
}

namespace {

DtNMap dtn_with_extension(const DirichletSolver& solver, Eigen::MatrixXcd& u_full) {
  const Mesh& m = *solver.system().mesh;
  SchurComplement sc = schur_complement(solver);
  DtNMap d;
  d.matrix = std::move(sc.lambda);
  boundary_matrices(m, d.mass, d.stiffness);
  d.w_half = h_half_gram(d.mass, d.stiffness, 0.5);
  d.nodes = m.boundary_nodes;
  d.mesh_hash = m.hash();
  d.h = m.h;
  const int nb = m.boundary_count();
  u_full = Eigen::MatrixXcd::Zero(m.node_count(), nb);
  const auto& interior = solver.interior_nodes();
  for (std::size_t i = 0; i < interior.size(); ++i) u_full.row(interior[i]) = sc.extension.row(static_cast<Eigen::Index>(i));
  for (int k = 0; k < nb; ++k) u_full(m.boundary_nodes[static_cast<std::size_t>(k)], k) = 1.0;
  return d;
}

Eigen::VectorXcd vec(const Eigen::MatrixXcd& a) { return Eigen::Map<const Eigen::VectorXcd>(a.data(), a.size()); }

}  // namespace

Sensitivity sensitivity_jacobian(std::shared_ptr<const Mesh> mesh, const Admittivity& a0, int modes) {
  a0.validate();
  const DirichletSolver solver(assemble(mesh, a0));
  Eigen::MatrixXcd u;
  Sensitivity s;
  s.dtn = dtn_with_extension(solver, u);
  s.basis = modal_basis(s.dtn, modes);
  const int k = s.basis.modes();
  s.jacobian.resize(static_cast<Eigen::Index>(k) * k, a0.count());
  for (int j = 1; j <= a0.count(); ++j) {
    const SparseC kj = region_stiffness(*mesh, j).cast<cplx>();
    Eigen::MatrixXcd col = u.transpose() * (kj * u);
    s.jacobian.col(j - 1) = vec(s.basis.project(col));
    s.columns.push_back(std::move(col));
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(s.jacobian, Eigen::ComputeThinU);
  s.singular_values = svd.singularValues();
  s.left = svd.matrixU();
  s.sigma_min = s.singular_values.size() ? s.singular_values[s.singular_values.size() - 1] : 0.0;
  s.rank_deficient = !(s.sigma_min > 1e-10 * std::max(s.singular_values[0], 1e-300));
  return s;
}

cplx project_admissible(cplx z, double lambda) {
  if (!(lambda >= 1.0)) throw Error(ErrorKind::validation, "ellipticity bound lambda must be >= 1");
  const double lo = 1.0 / lambda;
  auto feasible = [&](cplx w) { return w.real() >= lo - 1e-15 && std::abs(w) <= lambda * (1.0 + 1e-15); };
  if (feasible(z)) return z;
  std::vector<cplx> cand;
  if (std::abs(z) > 0.0) cand.push_back(z * (lambda / std::abs(z)));
  cand.emplace_back(std::max(z.real(), lo), z.imag());
  const double edge = std::sqrt(std::max(lambda * lambda - lo * lo, 0.0));
  cand.emplace_back(lo, edge);
  cand.emplace_back(lo, -edge);
  cplx best = cand.back();
  double best_d = std::numeric_limits<double>::infinity();
  for (const cplx& w : cand) {
    if (feasible(w) && std::abs(w - z) < best_d) {
      best_d = std::abs(w - z);
      best = w;
    }
  }
  return best;
}

Admittivity project_admissible(const Admittivity& a) {
  Admittivity out = a;
  for (auto& g : out.values) g = project_admissible(g, a.lambda);
  return out;
}

namespace {

Eigen::MatrixXcd projected_dtn(std::shared_ptr<const Mesh> mesh, const Admittivity& a, const ModalBasis& basis) {
  return basis.project(dtn_matrix(DirichletSolver(assemble(std::move(mesh), a))).matrix);
}

}  // namespace

Reconstruction gauss_newton_reconstruct(const DtNMap& target, std::shared_ptr<const Mesh> mesh,
                                        const Admittivity& guess, const ReconstructOptions& options,
                                        const Admittivity* truth) {
  if (target.mesh_hash != mesh->hash()) throw Error(ErrorKind::mismatch, "target DtN map was built on another mesh");
  const ModalBasis basis = modal_basis(target, options.modes);
  const Eigen::MatrixXcd pt = basis.project(target.matrix);
  const double scale = std::max(pt.norm(), 1e-300);
  const int n = guess.count();

  Reconstruction rec;
  rec.estimate = project_admissible(guess);
  auto err = [&](const Admittivity& a) {
    return truth ? a.max_difference(*truth) : std::numeric_limits<double>::quiet_NaN();
  };
  Eigen::MatrixXcd resid = projected_dtn(mesh, rec.estimate, basis) - pt;
  rec.misfit = resid.norm();
  rec.history.push_back({0, rec.misfit, err(rec.estimate)});

  for (int it = 1; it <= options.max_iterations; ++it) {
    if (rec.misfit <= options.misfit_tolerance * scale) {
      rec.converged = true;
      break;
    }
    const Sensitivity s = sensitivity_jacobian(mesh, rec.estimate, options.modes);
    const Eigen::Index rows = s.jacobian.rows();
    // Real Jacobian of (Re r, Im r) with respect to (Re γ_j, Im γ_j).
    Eigen::MatrixXd a(2 * rows, 2 * n);
    for (int j = 0; j < n; ++j) {
      const Eigen::VectorXcd c = s.jacobian.col(j);
      a.col(2 * j) << c.real(), c.imag();
      a.col(2 * j + 1) << -c.imag(), c.real();
    }
    const Eigen::VectorXcd rv = vec(resid);
    Eigen::VectorXd b(2 * rows);
    b << rv.real(), rv.imag();
    const Eigen::VectorXd step = a.colPivHouseholderQr().solve(-b);

    bool accepted = false;
    double t = 1.0;
    Admittivity next;
    Eigen::MatrixXcd next_resid;
    for (int halving = 0; halving < 30; ++halving, t *= 0.5) {
      next = rec.estimate;
      for (int j = 0; j < n; ++j) {
        next.values[static_cast<std::size_t>(j)] += t * cplx{step[2 * j], step[2 * j + 1]};
      }
      next = project_admissible(next);
      next_resid = projected_dtn(mesh, next, basis) - pt;
      if (next_resid.norm() < rec.misfit) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No descent along the Gauss–Newton direction: a stationary point.
      rec.converged = true;
      break;
    }
    double moved = 0.0, size = 0.0;
    for (int j = 0; j < n; ++j) {
      moved += std::norm(next.values[static_cast<std::size_t>(j)] - rec.estimate.values[static_cast<std::size_t>(j)]);
      size += std::norm(next.values[static_cast<std::size_t>(j)]);
    }
    rec.estimate = next;
    resid = next_resid;
    rec.misfit = resid.norm();
    rec.iterations = it;
    rec.history.push_back({it, rec.misfit, err(rec.estimate)});
    if (std::sqrt(moved) <= options.step_tolerance * std::sqrt(size)) {
      rec.converged = true;
      break;
    }
  }
  if (!rec.converged && rec.misfit <= options.misfit_tolerance * scale) rec.converged = true;
  return rec;
}

Eigen::MatrixXcd structured_noise(const Sensitivity& s, double eta, std::uint64_t seed, double random_weight) {
  if (!(eta >= 0.0)) throw Error(ErrorKind::domain, "noise level must be nonnegative");
  const int k = s.basis.modes();
  const Eigen::VectorXcd worst = s.left.col(s.left.cols() - 1);
  Eigen::MatrixXcd dir = Eigen::Map<const Eigen::MatrixXcd>(worst.data(), k, k);
  dir = 0.5 * (dir + dir.transpose()).eval();
  dir /= std::max(dir.norm(), 1e-300);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXcd r(k, k);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < k; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      r(i, j) = cplx{re, im};
    }
  }
  r = 0.5 * (r + r.transpose()).eval();
  r /= std::max(r.norm(), 1e-300);

  Eigen::MatrixXcd c = dir + random_weight * r;
  c *= eta / std::max(c.norm(), 1e-300);
  return s.basis.lift(c, s.dtn.w_half);
}

namespace {

std::string admittivity_key(const Admittivity& a) {
  std::string key;
  char buf[64];
  for (const cplx& g : a.values) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g;", g.real(), g.imag());
    key += buf;
  }
  return key;
}

}  // namespace

std::vector<SweepRecord> stability_sweep(const std::vector<SweepScenario>& scenarios, std::shared_ptr<const Mesh> mesh,
                                         const SweepOptions& options) {
  std::map<std::string, DtNMap> cache;
  auto dtn_of = [&](const Admittivity& a) -> const DtNMap& {
    const std::string key = admittivity_key(a);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, dtn_matrix(mesh, a)).first;
    return it->second;
  };
  std::vector<int> arc;
  if (options.data == SweepData::bottom_edge) {
    if (mesh->shape != MeshShape::rectangle) throw Error(ErrorKind::geometry, "bottom-edge data needs a rectangle mesh");
    const double y0 = mesh->box.y0;
    arc = boundary_arc(*mesh, [y0](const Vec2& x) { return std::abs(x.y() - y0) <= 1e-12; });
  }

  std::vector<SweepRecord> out;
  for (const auto& sc : scenarios) {
    sc.first.validate();
    sc.second.validate();
    const DtNMap& d1 = dtn_of(sc.first);
    const DtNMap& d2 = dtn_of(sc.second);
    SweepRecord rec;
    rec.id = sc.id;
    rec.n = sc.first.count();
    rec.h = mesh->h;
    rec.E = sc.first.max_difference(sc.second);
    DtNMap diff = d1;
    diff.matrix = d1.matrix - d2.matrix;
    if (options.data == SweepData::bottom_edge) diff = local_dtn(diff, arc);
    rec.eps = options.modes > 0 ? band_norm(diff.matrix, modal_basis(diff, options.modes))
                                : operator_norm(diff.matrix, diff.w_half);
    rec.ratio = rec.eps > 0.0 ? rec.E / rec.eps : std::numeric_limits<double>::quiet_NaN();
    out.push_back(rec);
  }
  return out;
}

std::map<int, double> max_ratio_per_n(const std::vector<SweepRecord>& records) {
  std::map<int, double> out;
  for (const auto& r : records) {
    if (std::isnan(r.ratio)) continue;
    auto [it, fresh] = out.emplace(r.n, r.ratio);
    if (!fresh) it->second = std::max(it->second, r.ratio);
  }
  return out;
}

}  // namespace lipstab
