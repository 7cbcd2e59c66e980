#include <doctest.h>

#include <random>

#include "lipstab/forward.hpp"
#include "support.hpp"

using namespace lipstab;

namespace {

std::shared_ptr<const Mesh> unit_triangle() {
  auto m = std::make_shared<Mesh>();
  m->nodes = {Vec2{0.0, 0.0}, Vec2{1.0, 0.0}, Vec2{0.0, 1.0}};
  m->triangles = {Triangle{{0, 1, 2}, 1}};
  m->boundary_edges = {{0, 1}, {1, 2}, {2, 0}};
  m->boundary_nodes = {0, 1, 2};
  m->h = 1.0;
  return m;
}

// Layered profile on [0,1] with thickness-1/2 strips: u(0) = 0, u(1) = 1 and
// flux gamma_j u' continuous, so u' = q / gamma_j.
struct Layered {
  cplx g1, g2, q;
  Layered(cplx a, cplx b) : g1(a), g2(b), q(1.0 / (0.5 / a + 0.5 / b)) {}
  cplx operator()(double y) const { return y <= 0.5 ? q / g1 * y : q / g1 * 0.5 + q / g2 * (y - 0.5); }
};

double max_layered_error(const Layered& u, double h) {
  const auto mesh = generate_mesh(build_partition(2, Rect{}, false), h);
  const Admittivity a{{u.g1, u.g2}, 10.0};
  const auto f = trace_of(*mesh, [&](const Vec2& x) { return u(x.y()); });
  const auto sol = solve_dirichlet(assemble(mesh, a), f);
  double err = 0.0;
  for (int i = 0; i < mesh->node_count(); ++i) {
    err = std::max(err, std::abs(sol.values[i] - u(mesh->nodes[static_cast<std::size_t>(i)].y())));
  }
  return err;
}

}  // namespace

TEST_CASE("element stiffness of the reference triangle") {
  const auto sys = assemble(unit_triangle(), Admittivity{{1.0}, 10.0});
  Eigen::Matrix3d k;
  k << 1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5;
  CHECK((Eigen::MatrixXcd(sys.stiffness) - k.cast<cplx>()).cwiseAbs().maxCoeff() < 1e-15);
  const auto twice = assemble(unit_triangle(), Admittivity{{2.0}, 10.0});
  CHECK((Eigen::MatrixXcd(twice.stiffness) - 2.0 * Eigen::MatrixXcd(sys.stiffness)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("stiffness is affine in each strip value") {
  const auto mesh = generate_mesh(build_partition(2, Rect{}, false), 0.125);
  const Admittivity a{{1.0, cplx{1.0, 1.0}}, 10.0};
  const Admittivity b{{cplx{2.0, -0.5}, 3.0}, 10.0};
  const Eigen::MatrixXcd diff = Eigen::MatrixXcd(assemble(mesh, a).stiffness) - Eigen::MatrixXcd(assemble(mesh, b).stiffness);
  const Eigen::MatrixXcd model = (a.at(1) - b.at(1)) * Eigen::MatrixXd(region_stiffness(*mesh, 1)).cast<cplx>() +
                                 (a.at(2) - b.at(2)) * Eigen::MatrixXd(region_stiffness(*mesh, 2)).cast<cplx>();
  CHECK((diff - model).cwiseAbs().maxCoeff() < 1e-13);
  const Eigen::MatrixXcd k(assemble(mesh, a).stiffness);
  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("linear data is reproduced exactly") {
  const auto mesh = generate_mesh(build_partition(3, Rect{}, false), 1.0 / 16);
  const auto f = trace_of(*mesh, [](const Vec2& x) { return cplx{x.x(), 0.0}; });
  const auto u = solve_dirichlet(assemble(mesh, Admittivity::uniform(3, 1.0, 10.0)), f);
  double err = 0.0;
  for (int i = 0; i < mesh->node_count(); ++i) err = std::max(err, std::abs(u.values[i] - mesh->nodes[static_cast<std::size_t>(i)].x()));
  CHECK(err < 1e-12);
  CHECK(u.residual < 1e-12);
}

TEST_CASE("layered medium oracle") {
  const Layered real(1.0, 3.0);
  CHECK(std::abs(real(0.5) - 0.75) < 1e-15);
  CHECK(std::abs(real.q - 1.5) < 1e-15);
  CHECK(max_layered_error(real, 1.0 / 16) < 1e-10);
  CHECK(max_layered_error(Layered(1.0, cplx{1.0, 1.0}), 1.0 / 16) < 1e-10);
}

TEST_CASE("real two-by-two system") {
  const auto mesh = generate_mesh(build_partition(2, Rect{}, false), 1.0 / 16);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  Eigen::VectorXcd f(mesh->boundary_count());
  for (int i = 0; i < f.size(); ++i) f[i] = cplx{normal(rng), normal(rng)};

  const Admittivity a{{1.0, cplx{1.0, 1.0}}, 10.0};
  const auto uc = solve_dirichlet(assemble(mesh, a), f);
  const auto ur = solve_real_system(mesh, a, f);
  CHECK((uc.values - ur.values).cwiseAbs().maxCoeff() < 1e-10);

  // without permittivity the imaginary part solves its own conductivity problem
  const Admittivity s{{1.0, 2.5}, 10.0};
  const auto both = solve_real_system(mesh, s, f);
  const auto im = solve_dirichlet(assemble(mesh, s), f.imag().cast<cplx>());
  CHECK((both.values.imag() - im.values.real()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("strong ellipticity of the real coefficient tensor") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  const double lambda = 10.0;
  for (const cplx g : {cplx{1.0, 0.0}, cplx{1.0, 1.0}, cplx{0.1, 9.9}, cplx{7.0, -7.0}}) {
    const auto c = real_system_tensor(g);
    for (int i = 0; i < 20; ++i) {
      Eigen::Matrix2d xi;
      xi << normal(rng), normal(rng), normal(rng), normal(rng);
      const double q = real_system_form(c, xi);
      CHECK(q >= xi.squaredNorm() / lambda - 1e-12);
      CHECK(q <= lambda * xi.squaredNorm() + 1e-12);
    }
  }
}

TEST_CASE("Caccioppoli ratio") {
  const auto mesh = generate_disk_mesh(2.0, 1.0 / 16);
  const DirichletSolver solver(assemble(mesh, Admittivity{{1.0}, 10.0}));
  const auto one = solver.solve(trace_of(*mesh, [](const Vec2&) { return cplx{1.0, 0.0}; }));
  CHECK(caccioppoli_ratio(one, Vec2::Zero(), 0.5, 1.0) < 1e-20);
  const auto x1 = solver.solve(trace_of(*mesh, [](const Vec2& x) { return cplx{x.x(), 0.0}; }));
  // (R-rho)^2 * |B_rho| / (int_{B_1} x^2 = pi/4)
  CHECK(caccioppoli_ratio(x1, Vec2::Zero(), 0.5, 1.0) == doctest::Approx(0.25).epsilon(1e-3));

  const auto suite = caccioppoli_suite(mesh, Admittivity{{cplx{2.0, 1.0}}, 10.0}, Vec2::Zero(), 0.5, 1.0, 10, 4, 9);
  CHECK(suite.count == 10);
  CHECK(std::isfinite(suite.max_ratio));
  CHECK(suite.max_ratio > 0.0);
}

TEST_CASE("harmonic polynomials") {
  const auto p = HarmonicPolynomial::monomial(3);
  CHECK(p(Vec2{2.0, 0.0}) == doctest::Approx(8.0));
  CHECK(p(Vec2{0.0, 1.0}) == doctest::Approx(0.0));
  std::mt19937_64 a(5), b(5);
  CHECK(HarmonicPolynomial::random(4, a)(Vec2{0.3, 0.2}) == HarmonicPolynomial::random(4, b)(Vec2{0.3, 0.2}));
}

TEST_CASE("admittivity validation") {
  CHECK(lipstab::test::throws_kind([] { Admittivity{{1.0, cplx{0.0, 1.0}}, 10.0}.validate(); }, ErrorKind::validation));
  CHECK(lipstab::test::throws_kind([] { Admittivity{{cplx{20.0, 0.0}}, 10.0}.validate(); }, ErrorKind::validation));
}
