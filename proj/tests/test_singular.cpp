#include <doctest.h>

#include "lipstab/singular.hpp"
#include "support.hpp"

using namespace lipstab;
using lipstab::test::throws_kind;

namespace {

struct Strips {
  Partition p;
  Chain chain;
  Admittivity a;
  std::shared_ptr<const Mesh> mesh;
  DirichletSolver solver;

  Strips(int n, Admittivity adm, double h)
      : p(build_partition(n, Rect{}, false)),
        chain(build_chain(p, n)),
        a(std::move(adm)),
        mesh(generate_mesh(p, h)),
        solver(assemble(mesh, a)) {}
};

// Largest and smallest increment of a sequence sampled at halving radii.
std::pair<double, double> increments(const std::vector<double>& v) {
  double lo = 1e300, hi = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    lo = std::min(lo, v[i] - v[i - 1]);
    hi = std::max(hi, v[i] - v[i - 1]);
  }
  return {lo, hi};
}

}  // namespace

TEST_CASE("disk Green function by images") {
  const auto mesh = generate_disk_mesh(1.0, 1.0 / 32);
  const cplx g{2.0, 1.0};
  const DirichletSolver solver(assemble(mesh, Admittivity{{g}, 10.0}));
  const Vec2 y{0.3, 0.1};
  const auto G = singular_solution(solver, TwoPhaseField{TwoPhaseCoeffs::make(g, g), 0.0}, y);
  const double ny = y.norm();
  const Vec2 star = y / (ny * ny);
  for (const Vec2& x : {Vec2{-0.4, 0.2}, Vec2{0.1, -0.5}, Vec2{0.5, 0.5}}) {
    const cplx exact = (laplace_gamma<2>(x, y) - laplace_gamma<2>(Vec2(ny * (x - star)), Vec2::Zero())) / g;
    CHECK(std::abs(G.value(x) - exact) < 1.0 / 32 * std::abs(exact));
  }
}

TEST_CASE("symmetry and energy of the singular solution") {
  const Strips s(3, Admittivity{{1.0, cplx{2.0, 1.0}, 1.5}, 10.0}, 1.0 / 64);
  const Vec2 ya{0.45, 0.25}, yb{0.55, 0.6};
  const auto ga = green_correction(s.p, s.chain, s.solver, ya, 2);
  const auto gb = green_correction(s.p, s.chain, s.solver, yb, 2);
  CHECK(std::abs(ga.value(yb) - gb.value(ya)) <= 1e-3 * std::abs(ga.value(yb)));

  // two dimensions: the squared energy outside B_r grows like |log r|
  std::vector<double> e2;
  for (int k = 2; k <= 6; ++k) {
    const double e = energy_outside(ga, s.p.r0 * std::ldexp(1.0, -k));
    e2.push_back(e * e);
  }
  const auto [lo, hi] = increments(e2);
  CHECK(lo > 0.0);
  CHECK(hi <= 1.2 * lo);
}

TEST_CASE("placement of source points") {
  const Strips s(3, Admittivity{{1.0, 2.0, 3.0}, 10.0}, 1.0 / 16);
  CHECK(throws_kind([&] { green_correction(s.p, s.chain, s.solver, Vec2{0.5, 1.0 / 3.0}, 2); }, ErrorKind::placement));
  CHECK(throws_kind([&] { green_correction(s.p, s.chain, s.solver, Vec2{0.1, 0.25}, 2); }, ErrorKind::placement));
  CHECK(throws_kind([&] { green_correction(s.p, s.chain, s.solver, Vec2{0.5, 0.9}, 2); }, ErrorKind::placement));
}

TEST_CASE("interface asymptotics") {
  std::vector<double> radii;
  for (int k = 2; k <= 6; ++k) radii.push_back(std::ldexp(1.0, -k));
  const auto free = asymptotics_free_space(TwoPhaseCoeffs::make(cplx{2.0, 1.0}, 1.0), radii);
  for (const auto& row : free.rows) CHECK(row.deviation == 0.0);
  const auto same = asymptotics_free_space(TwoPhaseCoeffs::make(1.5, 1.5), radii);
  for (const auto& row : same.rows) CHECK(row.deviation == 0.0);

  const Strips s(2, Admittivity{{1.0, cplx{2.0, 1.0}}, 10.0}, 1.0 / 32);
  std::vector<double> r0;
  for (int k = 2; k <= 6; ++k) r0.push_back(s.p.r0 * std::ldexp(1.0, -k));
  const auto rep = asymptotics_check(s.p, s.chain, s.solver, 2, r0);
  CHECK(rep.rows.size() == 5);
  CHECK(rep.slope >= -0.1);
  CHECK(rep.bounded);
  CHECK(throws_kind([&] { asymptotics_check(s.p, s.chain, s.solver, 2, {s.p.r0}); }, ErrorKind::range));
}

TEST_CASE("probe integrals") {
  const Strips s(3, Admittivity{{1.0, cplx{2.0, 1.0}, 1.5}, 10.0}, 1.0 / 32);
  const Vec2 y{0.5, 0.6};
  const auto g = green_correction(s.p, s.chain, s.solver, y, 3);
  CHECK(std::abs(s_k_evaluate(s.p, s.chain, s.a, s.a, g, g, 2)) == 0.0);

  // two dimensions: |S(y_r, y_r)| grows at most logarithmically in 1/r
  const Admittivity other{{1.0, cplx{2.0, 1.0}, 2.5}, 10.0};
  std::vector<double> radii;
  for (int k = 2; k <= 6; ++k) radii.push_back(s.p.r0 * std::ldexp(1.0, -k));
  const auto rate = diagonal_rate(s.p, s.chain, s.mesh, s.a, other, 3, radii);
  std::vector<double> abs_s;
  for (const auto& row : rate.rows) abs_s.push_back(row.abs_s);
  const auto [lo, hi] = increments(abs_s);
  CHECK(lo > 0.0);
  CHECK(hi <= 1.2 * lo);
}

TEST_CASE("three-dimensional half-space rate") {
  std::vector<double> radii;
  for (int k = 3; k <= 7; ++k) radii.push_back(std::ldexp(1.0, -k));
  const auto rep = half_space_probe(TwoPhaseCoeffs::make(2.0, 1.0), TwoPhaseCoeffs::make(3.0, 1.0), 1.0, radii);
  CHECK(rep.slope == doctest::Approx(-1.0).epsilon(0.1));
  const auto none = half_space_probe(TwoPhaseCoeffs::make(2.0, 1.0), TwoPhaseCoeffs::make(2.0, 1.0), 1.0, radii);
  for (const auto& row : none.rows) CHECK(row.abs_s == 0.0);
}

TEST_CASE("boundary identity") {
  const auto mesh = generate_mesh(build_partition(2, Rect{}, false), 1.0 / 32);
  const Admittivity a1{{1.0, 2.0}, 10.0}, a2{{1.0, 3.0}, 10.0};
  const auto x1 = trace_of(*mesh, [](const Vec2& x) { return cplx{x.x(), 0.0}; });
  const auto id = alessandrini_pair(mesh, a1, a2, x1, x1);
  CHECK(id.relative_gap() <= 1e-10);

  const auto zero = alessandrini_pair(mesh, a1, a1, x1, x1);
  CHECK(zero.lhs == cplx{0.0, 0.0});
  CHECK(zero.rhs == cplx{0.0, 0.0});

  const auto f2 = trace_of(*mesh, [](const Vec2& x) { return cplx{x.x() * x.y(), x.y()}; });
  const Admittivity c1{{cplx{1.0, 0.5}, 2.0}, 10.0}, c2{{1.0, cplx{3.0, -1.0}}, 10.0};
  const auto ab = alessandrini_pair(mesh, c1, c2, x1, f2);
  const auto ba = alessandrini_pair(mesh, c1, c2, f2, x1);
  CHECK(std::abs(ab.lhs - ba.lhs) <= 1e-12 * std::abs(ab.lhs));
  CHECK(std::abs(ab.rhs - ba.rhs) <= 1e-10 * std::abs(ab.rhs));
  CHECK(ab.relative_gap() <= 1e-10);
}

TEST_CASE("log-log slope") {
  CHECK(loglog_slope({1.0, 2.0, 4.0}, {3.0, 12.0, 48.0}) == doctest::Approx(2.0));
}
