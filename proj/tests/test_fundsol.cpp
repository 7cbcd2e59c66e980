#include <doctest.h>

#include <random>

#include "lipstab/fundsol.hpp"
#include "support.hpp"

using namespace lipstab;
using lipstab::test::throws_kind;

TEST_CASE("Laplace fundamental solution") {
  using P3 = Point<3>;
  using P2 = Point<2>;
  CHECK(laplace_gamma<3>(P3{1.0, 0.0, 0.0}, P3::Zero()) == doctest::Approx(0.0795774715459477).epsilon(1e-14));
  CHECK(laplace_gamma<2>(P2{0.0, 1.0}, P2::Zero()) == 0.0);
  const double a = laplace_gamma<2>(P2{0.3, 0.4}, P2::Zero());
  const double b = laplace_gamma<2>(P2{0.5, 0.0}, P2::Zero());
  CHECK(a == doctest::Approx(b).epsilon(1e-15));
  CHECK(a == doctest::Approx(-std::log(0.5) / (2 * kPi)));
  const double x[] = {0.0, 0.0, 2.0}, y[] = {0.0, 0.0, 0.0};
  CHECK(laplace_gamma(x, y, 3) == doctest::Approx(1.0 / (8 * kPi)));
  CHECK(throws_kind([] { laplace_gamma<2>(P2::Zero(), P2::Zero()); }, ErrorKind::singular_point));
  CHECK(throws_kind([&] { laplace_gamma(x, y, 4); }, ErrorKind::unsupported_dimension));
}

TEST_CASE("reflection weights") {
  const auto real = TwoPhaseCoeffs::make(2.0, 1.0);
  CHECK(std::abs(real.s - 1.0 / 6.0) < 1e-15);
  CHECK(std::abs(real.cross - 2.0 / 3.0) < 1e-15);
  CHECK(std::abs(1.0 / real.gamma_plus + real.s - real.cross) < 1e-15);
  const auto cx = TwoPhaseCoeffs::make(cplx{1.0, 1.0}, 1.0);
  CHECK(std::abs(cx.s - cplx{0.3, 0.1}) < 1e-15);
  CHECK(std::abs(1.0 / cx.gamma_minus + cx.t - cx.cross) < 1e-15);
}

TEST_CASE("equal phases reduce to the scaled Laplace solution") {
  const cplx c{1.5, 0.7};
  const auto k = TwoPhaseCoeffs::make(c, c);
  const Point<2> y{0.1, -0.2};
  for (const Point<2>& x : {Point<2>{0.4, 0.3}, Point<2>{-0.2, -0.5}, Point<2>{0.0, 0.0}}) {
    CHECK(std::abs(two_phase_gamma<2>(x, y, k) - laplace_gamma<2>(x, y) / c) < 1e-15);
  }
  const Point<3> y3{0.0, 0.1, 0.2};
  const Point<3> x3{0.3, 0.0, -0.4};
  CHECK(std::abs(two_phase_gamma<3>(x3, y3, k) - laplace_gamma<3>(x3, y3) / c) < 1e-15);
}

TEST_CASE("transmission conditions") {
  std::vector<Point<2>> samples;
  for (int i = 0; i < 100; ++i) samples.push_back(Point<2>{-1.0 + 0.02 * i + 0.0037, 0.0});
  const Point<2> y{0.0, -0.3};

  auto r = transmission_residual<2>(TwoPhaseCoeffs::make(2.0, 1.0), y, samples);
  CHECK(r.value_jump <= 1e-12);
  CHECK(r.flux_jump <= 1e-12);

  r = transmission_residual<2>(TwoPhaseCoeffs::make(1.7, 1.7), y, samples);
  CHECK(r.value_jump == 0.0);
  CHECK(r.flux_jump == 0.0);

  r = transmission_residual<2>(TwoPhaseCoeffs::make(cplx{1.0, 2.0}, 3.0), y, samples);
  CHECK(r.value_jump <= 1e-12);
  CHECK(r.flux_jump <= 1e-12);

  std::vector<Point<3>> s3;
  for (int i = 0; i < 50; ++i) s3.push_back(Point<3>{0.03 * i - 0.7, 0.5 - 0.02 * i, 0.0});
  const auto r3 = transmission_residual<3>(TwoPhaseCoeffs::make(cplx{2.0, -1.0}, cplx{0.5, 0.5}), Point<3>{0.1, 0.0, 0.4}, s3);
  CHECK(r3.value_jump <= 1e-12);
  CHECK(r3.flux_jump <= 1e-12);
}

TEST_CASE("gradient matches central differences") {
  const auto k = TwoPhaseCoeffs::make(cplx{2.0, 1.0}, cplx{1.0, -0.3});
  const Point<2> y{0.2, -0.3};
  const double step = 1e-6;
  for (const Point<2>& x : {Point<2>{0.5, 0.4}, Point<2>{-0.3, -0.6}}) {
    const auto g = two_phase_gradient<2>(x, y, k);
    for (int d = 0; d < 2; ++d) {
      Point<2> e = Point<2>::Zero();
      e[d] = step;
      const cplx fd = (two_phase_gamma<2>(x + e, y, k) - two_phase_gamma<2>(x - e, y, k)) / (2 * step);
      CHECK(std::abs(fd - g[d]) < 1e-8);
    }
  }
}
