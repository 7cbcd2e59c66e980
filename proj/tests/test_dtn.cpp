#include <doctest.h>

#include <map>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "lipstab/dtn.hpp"
#include "support.hpp"

using namespace lipstab;
using lipstab::test::throws_kind;

namespace {

const DtNMap& disk_unit(double h) {
  static std::map<double, DtNMap> cache;
  auto it = cache.find(h);
  if (it == cache.end()) it = cache.emplace(h, dtn_matrix(generate_disk_mesh(1.0, h), Admittivity{{1.0}, 10.0})).first;
  return it->second;
}

Eigen::VectorXcd fourier_mode(const Mesh& m, int k) {
  Eigen::VectorXcd f(m.boundary_count());
  for (int i = 0; i < f.size(); ++i) {
    const Vec2& p = m.nodes[static_cast<std::size_t>(m.boundary_nodes[static_cast<std::size_t>(i)])];
    f[i] = std::polar(1.0, k * std::atan2(p.y(), p.x()));
  }
  return f;
}

}  // namespace

TEST_CASE("constants are in the kernel and the map is complex symmetric") {
  const auto mesh = generate_mesh(build_partition(3, Rect{}, false), 1.0 / 16);
  const auto d = dtn_matrix(mesh, Admittivity{{1.0, cplx{2.0, 1.0}, cplx{0.5, -0.2}}, 10.0});
  CHECK((d.matrix * Eigen::VectorXcd::Ones(d.size())).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((d.matrix - d.matrix.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(d.mesh_hash == mesh->hash());
}

TEST_CASE("Steklov eigenvalues of the disk") {
  const auto& d = disk_unit(1.0 / 64);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(d.matrix.real(), d.mass, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  CHECK(std::abs(ev[0]) < 1e-10);
  for (int k = 1; k <= 8; ++k) {
    CHECK(ev[2 * k - 1] == doctest::Approx(k).epsilon(0.02));
    CHECK(ev[2 * k] == doctest::Approx(k).epsilon(0.02));
  }
}

TEST_CASE("fractional Gram") {
  const auto& d = disk_unit(1.0 / 16);
  CHECK((h_half_gram(d.mass, d.stiffness, 0.0) - d.mass).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((h_half_gram(d.mass, d.stiffness, 1.0) - (d.mass + d.stiffness)).cwiseAbs().maxCoeff() < 1e-10);
  const Eigen::MatrixXd w = h_half_gram(d.mass, d.stiffness, 0.5);
  CHECK((w - w.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("H^1/2 norms of boundary Fourier modes") {
  const auto& d = disk_unit(1.0 / 64);
  const auto mesh = generate_disk_mesh(1.0, 1.0 / 64);
  for (int k = 0; k <= 8; ++k) {
    const auto f = fourier_mode(*mesh, k);
    const double n2 = (f.adjoint() * d.w_half.cast<cplx>() * f).value().real();
    CHECK(n2 == doctest::Approx(std::sqrt(1.0 + k * k) * 2 * kPi).epsilon(0.05));
  }
}

TEST_CASE("operator norm") {
  const auto& d1 = disk_unit(1.0 / 16);
  CHECK(operator_norm(Eigen::MatrixXcd::Zero(d1.size(), d1.size()), d1.w_half) == 0.0);
  // constant admittivities scale the map
  const Eigen::MatrixXcd delta = cplx{2.0, 0.0} * d1.matrix - d1.matrix;
  const double n = operator_norm(delta, d1.w_half);
  CHECK(operator_norm(3.0 * delta, d1.w_half) == doctest::Approx(3.0 * n).epsilon(1e-12));
  CHECK(throws_kind([&] { operator_norm(delta.topLeftCorner(3, 3), d1.w_half); }, ErrorKind::mismatch));
}

TEST_CASE("disk with constant admittivities") {
  const auto& d = disk_unit(1.0 / 64);
  const Eigen::MatrixXcd delta = d.matrix;  // |gamma1 - gamma2| = 1
  CHECK(operator_norm(delta, d.w_half) >= 0.9);
  const double band = band_norm(delta, modal_basis(d, 17));
  CHECK(band >= 0.9);
  // the continuous band-limited value is 8/sqrt(65)
  CHECK(band == doctest::Approx(8.0 / std::sqrt(65.0)).epsilon(0.02));
}

TEST_CASE("modal basis") {
  const auto& d = disk_unit(1.0 / 16);
  const auto basis = modal_basis(d, 9);
  CHECK(basis.modes() == 9);
  const Eigen::MatrixXd g = basis.v.transpose() * d.w_half * basis.v;
  CHECK((g - Eigen::MatrixXd::Identity(9, 9)).cwiseAbs().maxCoeff() < 1e-10);
  const Eigen::MatrixXcd c = Eigen::MatrixXcd::Random(9, 9);
  CHECK((basis.project(basis.lift(c, d.w_half)) - c).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(modal_basis(d, 0).modes() == d.size());
}

TEST_CASE("local maps") {
  const auto p = build_partition(2, Rect{}, false);
  const auto mesh = generate_mesh(p, 1.0 / 16);
  const auto d1 = dtn_matrix(mesh, Admittivity{{1.0, 2.0}, 10.0});
  const auto d2 = dtn_matrix(mesh, Admittivity{{cplx{1.0, 0.5}, 3.0}, 10.0});
  std::vector<int> all(static_cast<std::size_t>(d1.size()));
  std::iota(all.begin(), all.end(), 0);
  const auto whole = local_dtn(d1, all);
  CHECK((whole.matrix - d1.matrix).cwiseAbs().maxCoeff() == 0.0);

  DtNMap diff = d1;
  diff.matrix -= d2.matrix;
  const auto bottom = boundary_arc(*mesh, [](const Vec2& x) { return x.y() == 0.0; });
  CHECK(bottom.size() == 17);
  const auto local = local_dtn(diff, bottom);
  CHECK(local.size() == 15);
  CHECK(operator_norm(local.matrix, local.w_half) <= operator_norm(diff.matrix, diff.w_half) * (1 + 1e-12));

  const std::vector<int> ends = {bottom[0], bottom[1]};
  CHECK(throws_kind([&] { local_dtn(d1, ends); }, ErrorKind::empty_subset));
  CHECK(throws_kind([&] { boundary_arc(*mesh, [](const Vec2& x) { return x.y() > 5.0; }); }, ErrorKind::empty_subset));
}
