#include "lipstab/singular.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include "lipstab/error.hpp"
#include "lipstab/parallel.hpp"
#include "lipstab/quadrature.hpp"

namespace lipstab {

namespace {

constexpr double kPlaceTol = 1e-12;

Vec2 centroid(const Mesh& m, int t) {
  const auto& v = m.triangles[static_cast<std::size_t>(t)].v;
  return (m.nodes[static_cast<std::size_t>(v[0])] + m.nodes[static_cast<std::size_t>(v[1])] +
          m.nodes[static_cast<std::size_t>(v[2])]) /
         3.0;
}

Side triangle_side(const Mesh& m, int t, double height) {
  return centroid(m, t).y() >= height ? Side::upper : Side::lower;
}

// Weights (direct, mirror) of Γ(x - y) and Γ(x - y*) in the two-phase solution for
// x on side `x_up`, matching two_phase_gamma.
std::pair<cplx, cplx> branch_weights(const TwoPhaseCoeffs& c, bool x_up, double y_rel) {
  const bool y_up = y_rel >= 0.0;
  if (y_rel == 0.0 || x_up != y_up) return {c.cross, 0.0};
  return y_up ? std::pair<cplx, cplx>{1.0 / c.gamma_plus, c.s} : std::pair<cplx, cplx>{1.0 / c.gamma_minus, c.t};
}

double point_triangle_distance(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
  const double cross = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
  auto side = [&](const Vec2& u, const Vec2& v) {
    return ((v.x() - u.x()) * (p.y() - u.y()) - (p.x() - u.x()) * (v.y() - u.y())) * cross >= 0.0;
  };
  if (side(a, b) && side(b, c) && side(c, a)) return 0.0;
  auto seg = [&](const Vec2& u, const Vec2& v) {
    const Vec2 d = v - u;
    const double t = std::clamp((p - u).dot(d) / d.squaredNorm(), 0.0, 1.0);
    return (u + t * d - p).norm();
  };
  return std::min({seg(a, b), seg(b, c), seg(c, a)});
}

// ∫ f over triangle minus B_r(center), refined until sub-triangles are small
// compared with their distance to the center.
template <class F>
double integrate_outside(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& center, double r, int depth,
                         const F& f) {
  const double far = std::max({(a - center).norm(), (b - center).norm(), (c - center).norm()});
  if (far <= r) return 0.0;
  const double dist = point_triangle_distance(a, b, c, center);
  const double diam = std::max({(a - b).norm(), (b - c).norm(), (c - a).norm()});
  if (dist >= r && diam <= 0.5 * dist) return quad::integrate_triangle(a, b, c, f);
  if (depth <= 0) {
    return quad::integrate_triangle(a, b, c, [&](const Vec2& x) { return (x - center).norm() > r ? f(x) : 0.0; });
  }
  const Vec2 ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
  return integrate_outside(a, ab, ca, center, r, depth - 1, f) + integrate_outside(ab, b, bc, center, r, depth - 1, f) +
         integrate_outside(ca, bc, c, center, r, depth - 1, f) + integrate_outside(ab, bc, ca, center, r, depth - 1, f);
}

double fit_slope(const std::vector<double>& lx, const std::vector<double>& ly) {
  const auto n = static_cast<double>(lx.size());
  if (lx.size() < 2) return 0.0;
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

void check_radii(const std::vector<double>& radii, double limit) {
  if (radii.empty()) throw Error(ErrorKind::range, "radius list is empty");
  for (double r : radii) {
    if (!(r > 0.0) || !(r < limit)) {
      throw Error(ErrorKind::range, "radius " + std::to_string(r) + " outside (0, " + std::to_string(limit) + ")");
    }
  }
}

}  // namespace

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(ErrorKind::mismatch, "slope fit needs equal-length samples");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw Error(ErrorKind::domain, "log-log fit needs positive samples");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_slope(lx, ly);
}

cplx SingularSolution::value_in(int t, const Vec2& x) const {
  const Mesh& m = mesh();
  const auto g = m.barycentric_gradients(t);
  const auto& v = m.triangles[static_cast<std::size_t>(t)].v;
  const Vec2 c = centroid(m, t);
  cplx w = 0.0;
  for (int i = 0; i < 3; ++i) {
    w += (1.0 / 3.0 + g[static_cast<std::size_t>(i)].dot(x - c)) * corrector.values[v[static_cast<std::size_t>(i)]];
  }
  return field.value(x, y, triangle_side(m, t, field.height)) + w;
}

CVec2 SingularSolution::gradient_in(int t, const Vec2& x) const {
  return field.gradient(x, y, triangle_side(mesh(), t, field.height)) + corrector.gradient(t);
}

cplx SingularSolution::value(const Vec2& x) const {
  const auto hit = locator->locate(x);
  if (!hit) throw Error(ErrorKind::geometry, "evaluation point outside the mesh");
  return value_in(hit->triangle, x);
}

CVec2 SingularSolution::gradient(const Vec2& x) const {
  const auto hit = locator->locate(x);
  if (!hit) throw Error(ErrorKind::geometry, "evaluation point outside the mesh");
  return gradient_in(hit->triangle, x);
}

SingularSolution singular_solution(const DirichletSolver& solver, const TwoPhaseField& field, const Vec2& y) {
  const LinearSystem& sys = solver.system();
  const Mesh& m = *sys.mesh;
  const double y_rel = y.y() - field.height;
  const Vec2 mirror{y.x(), field.height - y_rel};

  // load_i = -Σ_T γ̃_T ∇φ_i · ∫_T ∇Γ_l, with ∫_T ∇Γ_l = ∮_{∂T} Γ_l n ds done exactly.
  Eigen::VectorXcd load = Eigen::VectorXcd::Zero(m.node_count());
  for (int t = 0; t < m.triangle_count(); ++t) {
    const auto& tri = m.triangles[static_cast<std::size_t>(t)];
    const Vec2 ct = centroid(m, t);
    const cplx tilde = sys.admittivity.at(tri.region) - field.coefficient(ct);
    if (std::abs(tilde) == 0.0) continue;
    std::array<Vec2, 3> p;
    for (int i = 0; i < 3; ++i) p[static_cast<std::size_t>(i)] = m.nodes[static_cast<std::size_t>(tri.v[static_cast<std::size_t>(i)])];
    if (point_triangle_distance(p[0], p[1], p[2], y) <= kPlaceTol) {
      throw Error(ErrorKind::placement, "source point lies in a triangle where the reference medium differs from γ");
    }
    const auto [wd, wm] = branch_weights(field.coeffs, ct.y() >= field.height, y_rel);
    const double orient = m.signed_area(t) > 0.0 ? 1.0 : -1.0;
    CVec2 integral = CVec2::Zero();
    for (int e = 0; e < 3; ++e) {
      const Vec2& a = p[static_cast<std::size_t>(e)];
      const Vec2& b = p[static_cast<std::size_t>((e + 1) % 3)];
      const Vec2 d = b - a;
      const Vec2 normal_len = orient * Vec2{d.y(), -d.x()};  // outward normal times edge length
      const double len = d.norm();
      cplx mean = -wd * quad::segment_log_integral(a, b, y) / (2.0 * kPi * len);
      if (wm != 0.0) mean += -wm * quad::segment_log_integral(a, b, mirror) / (2.0 * kPi * len);
      integral += mean * normal_len.cast<cplx>();
    }
    const auto g = m.barycentric_gradients(t);
    for (int i = 0; i < 3; ++i) {
      load[tri.v[static_cast<std::size_t>(i)]] -= tilde * g[static_cast<std::size_t>(i)].cast<cplx>().dot(integral);
    }
  }

  Eigen::VectorXcd trace(m.boundary_count());
  for (int k = 0; k < m.boundary_count(); ++k) {
    trace[k] = -field.value(m.nodes[static_cast<std::size_t>(m.boundary_nodes[static_cast<std::size_t>(k)])], y);
  }

  SingularSolution s;
  s.y = y;
  s.field = field;
  s.corrector = solver.solve(trace, load);
  s.locator = std::make_shared<PointLocator>(sys.mesh);
  return s;
}

TwoPhaseField link_field(const Partition& p, const Admittivity& a, int link) {
  const Interface& iface = p.interface(link);
  const cplx below = iface.below >= 0 ? a.at(iface.below) : cplx{1.0, 0.0};
  return TwoPhaseField{TwoPhaseCoeffs::make(a.at(iface.above), below), iface.height};
}

namespace {

void check_placement(const Partition& p, const Chain& c, const Vec2& y, int link) {
  if (!in_source_set(p, c, y)) {
    throw Error(ErrorKind::placement, "source point (" + std::to_string(y.x()) + ", " + std::to_string(y.y()) +
                                          ") is outside the source set K");
  }
  for (const auto& iface : p.interfaces) {
    if (std::abs(y.y() - iface.height) <= kPlaceTol) {
      throw Error(ErrorKind::placement, "source point lies on interface " + std::to_string(iface.index));
    }
  }
  const Interface& iface = p.interface(link);
  const int r = p.region_of(y);
  if (r != iface.below && r != iface.above) {
    throw Error(ErrorKind::placement, "source point is in region " + std::to_string(r) +
                                          ", not adjacent to interface " + std::to_string(link));
  }
}

}  // namespace

SingularSolution green_correction(const Partition& p, const Chain& c, const DirichletSolver& solver, const Vec2& y,
                                  int link) {
  check_placement(p, c, y, link);
  SingularSolution s = singular_solution(solver, link_field(p, solver.system().admittivity, link), y);
  s.link = link;
  return s;
}

std::vector<SingularSolution> green_corrections(const Partition& p, const Chain& c, const DirichletSolver& solver,
                                                const std::vector<Vec2>& ys, int link) {
  for (const auto& y : ys) check_placement(p, c, y, link);
  std::vector<SingularSolution> out(ys.size());
  parallel_for(static_cast<int>(ys.size()), [&](int begin, int end) {
    for (int i = begin; i < end; ++i) out[static_cast<std::size_t>(i)] = green_correction(p, c, solver, ys[static_cast<std::size_t>(i)], link);
  });
  return out;
}

double energy_outside(const SingularSolution& g, double r) {
  if (!(r > 0.0)) throw Error(ErrorKind::range, "excluded radius must be positive");
  const Mesh& m = g.mesh();
  std::mutex mu;
  double total = 0.0;
  parallel_for(m.triangle_count(), [&](int begin, int end) {
    double part = 0.0;
    for (int t = begin; t < end; ++t) {
      const auto& v = m.triangles[static_cast<std::size_t>(t)].v;
      part += integrate_outside(m.nodes[static_cast<std::size_t>(v[0])], m.nodes[static_cast<std::size_t>(v[1])],
                                m.nodes[static_cast<std::size_t>(v[2])], g.y, r, 14, [&](const Vec2& x) {
                                  return std::norm(g.value_in(t, x)) + g.gradient_in(t, x).squaredNorm();
                                });
    }
    std::lock_guard lock(mu);
    total += part;
  });
  return std::sqrt(total);
}

namespace {

void finish_report(AsymptoticsReport& rep) {
  std::vector<double> r, d, gd;
  for (const auto& row : rep.rows) {
    r.push_back(row.r);
    d.push_back(row.deviation);
    gd.push_back(row.grad_deviation);
  }
  const bool all_pos = std::all_of(d.begin(), d.end(), [](double v) { return v > 0.0; });
  const bool all_gpos = std::all_of(gd.begin(), gd.end(), [](double v) { return v > 0.0; });
  rep.slope = all_pos ? loglog_slope(r, d) : 0.0;
  rep.grad_slope = all_gpos ? loglog_slope(r, gd) : 0.0;
  rep.bounded = rep.slope >= -0.1;
}

}  // namespace

AsymptoticsReport asymptotics_check(const Partition& p, const Chain& c, const DirichletSolver& solver, int link,
                                    const std::vector<double>& radii) {
  check_radii(radii, 0.5 * p.r0);
  const Interface& iface = p.interface(link);
  const Vec2 up{0.0, 1.0};
  AsymptoticsReport rep;
  for (double r : radii) {
    const Vec2 ybar = iface.marked - r * up;
    const Vec2 xbar = iface.marked + r * up;
    const SingularSolution g = green_correction(p, c, solver, ybar, link);
    const auto hit = g.locator->locate(xbar);
    if (!hit) throw Error(ErrorKind::geometry, "far-side point outside the mesh");
    // x̄ and ȳ sit on opposite sides, where Γ_l is exactly the cross branch.
    const cplx cross = g.field.coeffs.cross;
    const cplx dev = g.value_in(hit->triangle, xbar) - cross * laplace_gamma<2>(xbar, ybar);
    const CVec2 gdev = g.gradient_in(hit->triangle, xbar) - cross * laplace_gradient<2>(xbar, ybar).cast<cplx>();
    rep.rows.push_back({r, std::abs(dev), gdev.norm()});
  }
  finish_report(rep);
  return rep;
}

AsymptoticsReport asymptotics_free_space(const TwoPhaseCoeffs& coeffs, const std::vector<double>& radii) {
  check_radii(radii, std::numeric_limits<double>::infinity());
  AsymptoticsReport rep;
  for (double r : radii) {
    const Point<2> ybar{0.0, -r};
    const Point<2> xbar{0.0, r};
    const cplx dev = two_phase_gamma<2>(xbar, ybar, coeffs) - coeffs.cross * laplace_gamma<2>(xbar, ybar);
    const CVec2 gdev =
        two_phase_gradient<2>(xbar, ybar, coeffs) - coeffs.cross * laplace_gradient<2>(xbar, ybar).cast<cplx>();
    rep.rows.push_back({r, std::abs(dev), gdev.norm()});
  }
  finish_report(rep);
  return rep;
}

cplx s_k_evaluate(const Partition& p, const Chain& c, const Admittivity& a1, const Admittivity& a2,
                  const SingularSolution& g1, const SingularSolution& g2, int k) {
  if (g1.corrector.mesh != g2.corrector.mesh && g1.mesh().hash() != g2.mesh().hash()) {
    throw Error(ErrorKind::mismatch, "singular solutions live on different meshes");
  }
  const auto split = split_chain(p, c, k);
  std::vector<char> in_u(p.regions.size() + 1, 0);
  for (int r : split.unexplored) in_u[static_cast<std::size_t>(r)] = 1;
  for (const Vec2* y : {&g1.y, &g2.y}) {
    const int r = p.region_of(*y);
    if (r >= 0 && in_u[static_cast<std::size_t>(r)]) {
      throw Error(ErrorKind::placement, "source point lies inside the integration set U_k");
    }
  }

  const Mesh& m = g1.mesh();
  const std::array<Vec2, 2> singular{g1.y, g2.y};
  std::mutex mu;
  cplx total = 0.0;
  parallel_for(m.triangle_count(), [&](int begin, int end) {
    cplx part = 0.0;
    for (int t = begin; t < end; ++t) {
      const auto& tri = m.triangles[static_cast<std::size_t>(t)];
      if (!in_u[static_cast<std::size_t>(tri.region)]) continue;
      const cplx jump = a1.at(tri.region) - a2.at(tri.region);
      if (jump == 0.0) continue;
      part += jump * quad::integrate_graded(m.nodes[static_cast<std::size_t>(tri.v[0])],
                                            m.nodes[static_cast<std::size_t>(tri.v[1])],
                                            m.nodes[static_cast<std::size_t>(tri.v[2])], singular, 0.5, 14,
                                            [&](const Vec2& x) {
                                              return (g1.gradient_in(t, x).transpose() * g2.gradient_in(t, x)).value();
                                            });
    }
    std::lock_guard lock(mu);
    total += part;
  });
  return total;
}

RateReport diagonal_rate(const Partition& p, const Chain& c, std::shared_ptr<const Mesh> mesh, const Admittivity& a1,
                         const Admittivity& a2, int link, const std::vector<double>& radii) {
  check_radii(radii, 0.5 * p.r0);
  const Interface& iface = p.interface(link);
  // Explored set: the chain up to and including the region below the link.
  int k = -1;
  int physical = 0;
  for (int r : c.regions) {
    if (r != 0) ++physical;
    if (r == iface.below) {
      k = physical;
      break;
    }
  }
  if (k < 0) throw Error(ErrorKind::no_chain, "interface " + std::to_string(link) + " is not a link of the chain");
  const DirichletSolver s1(assemble(mesh, a1));
  const DirichletSolver s2(assemble(mesh, a2));
  RateReport rep;
  std::vector<double> rs, vals;
  for (double r : radii) {
    const Vec2 y = iface.marked - Vec2{0.0, r};
    const auto g1 = green_correction(p, c, s1, y, link);
    const auto g2 = green_correction(p, c, s2, y, link);
    const double v = std::abs(s_k_evaluate(p, c, a1, a2, g1, g2, k));
    rep.rows.push_back({r, v});
    rs.push_back(r);
    vals.push_back(v);
  }
  const bool all_pos = std::all_of(vals.begin(), vals.end(), [](double v) { return v > 0.0; });
  rep.slope = all_pos ? loglog_slope(rs, vals) : 0.0;
  return rep;
}

RateReport half_space_probe(const TwoPhaseCoeffs& first, const TwoPhaseCoeffs& second, double rho0,
                            const std::vector<double>& radii) {
  check_radii(radii, rho0);
  const cplx jump = first.gamma_plus - second.gamma_plus;
  std::vector<double> gx, gw;
  quad::gauss_legendre(20, gx, gw);
  constexpr int kPanels = 4;
  constexpr int kAzimuth = 8;

  RateReport rep;
  std::vector<double> rs, vals;
  for (double r : radii) {
    const Point<3> y{0.0, 0.0, -r};
    // Spherical coordinates about y with c = cos θ and u = 1/ρ; the upper half of
    // B_ρ0 is c ∈ [c_min, 1], u ∈ [1/ρ_max(c), c/r], and dx = ρ⁴ du dc dφ.
    const double c_min = r / std::sqrt(rho0 * rho0 + r * r);
    cplx total = 0.0;
    for (int panel = 0; panel < kPanels; ++panel) {
      const double ca = c_min + (1.0 - c_min) * panel / kPanels;
      const double cb = c_min + (1.0 - c_min) * (panel + 1) / kPanels;
      for (std::size_t i = 0; i < gx.size(); ++i) {
        const double cth = 0.5 * (ca + cb) + 0.5 * (cb - ca) * gx[i];
        const double wc = 0.5 * (cb - ca) * gw[i];
        const double sth = std::sqrt(std::max(0.0, 1.0 - cth * cth));
        const double rho_max = r * cth + std::sqrt(rho0 * rho0 - r * r * (1.0 - cth * cth));
        const double ua = 1.0 / rho_max, ub = cth / r;
        if (ub <= ua) continue;
        for (std::size_t j = 0; j < gx.size(); ++j) {
          const double u = 0.5 * (ua + ub) + 0.5 * (ub - ua) * gx[j];
          const double wu = 0.5 * (ub - ua) * gw[j];
          const double rho = 1.0 / u;
          for (int a = 0; a < kAzimuth; ++a) {
            const double phi = 2.0 * kPi * (a + 0.5) / kAzimuth;
            const Point<3> x = y + rho * Point<3>{sth * std::cos(phi), sth * std::sin(phi), cth};
            const cplx f = two_phase_gradient<3>(x, y, first, Side::upper)
                               .cwiseProduct(two_phase_gradient<3>(x, y, second, Side::upper)).sum();
            total += wc * wu * (2.0 * kPi / kAzimuth) * std::pow(rho, 4) * f;
          }
        }
      }
    }
    const double v = std::abs(jump * total);
    rep.rows.push_back({r, v});
    rs.push_back(r);
    vals.push_back(v);
  }
  const bool all_pos = std::all_of(vals.begin(), vals.end(), [](double v) { return v > 0.0; });
  rep.slope = all_pos ? loglog_slope(rs, vals) : 0.0;
  return rep;
}

double IdentityPair::relative_gap() const {
  const double gap = std::abs(lhs - rhs);
  if (gap == 0.0) return 0.0;
  return gap / std::max(std::abs(lhs), 1e-300);
}

namespace {

// Λ f = K_bb f + K_bi u_i for the discrete extension u of f.
Eigen::VectorXcd apply_dtn(const DirichletSolver& s, const FieldSolution& u) {
  const auto& interior = s.interior_nodes();
  Eigen::VectorXcd ui(static_cast<Eigen::Index>(interior.size()));
  for (std::size_t i = 0; i < interior.size(); ++i) ui[static_cast<Eigen::Index>(i)] = u.values[interior[i]];
  return s.k_bb() * u.trace + s.k_bi() * ui;
}

}  // namespace

IdentityPair alessandrini_pair(const DirichletSolver& s1, const DirichletSolver& s2, const Eigen::VectorXcd& f1,
                               const Eigen::VectorXcd& f2) {
  const auto& m1 = s1.system().mesh;
  const auto& m2 = s2.system().mesh;
  if (m1 != m2 && m1->hash() != m2->hash()) throw Error(ErrorKind::mismatch, "solvers use different meshes");
  const Mesh& m = *m1;
  const FieldSolution u1 = s1.solve(f1);
  const FieldSolution u2 = s2.solve(f2);
  const FieldSolution u2_in_1 = s1.solve(f2);

  IdentityPair out;
  out.lhs = 0.0;
  const Admittivity& a1 = s1.system().admittivity;
  const Admittivity& a2 = s2.system().admittivity;
  for (int t = 0; t < m.triangle_count(); ++t) {
    const int reg = m.triangles[static_cast<std::size_t>(t)].region;
    const cplx jump = a1.at(reg) - a2.at(reg);
    if (jump == 0.0) continue;
    out.lhs += jump * std::abs(m.signed_area(t)) * (u1.gradient(t).transpose() * u2.gradient(t)).value();
  }
  out.rhs = (f1.transpose() * (apply_dtn(s1, u2_in_1) - apply_dtn(s2, u2))).value();
  return out;
}

IdentityPair alessandrini_pair(std::shared_ptr<const Mesh> mesh, const Admittivity& a1, const Admittivity& a2,
                               const Eigen::VectorXcd& f1, const Eigen::VectorXcd& f2) {
  const DirichletSolver s1(assemble(mesh, a1));
  const DirichletSolver s2(assemble(mesh, a2));
  return alessandrini_pair(s1, s2, f1, f2);
}

}  // namespace lipstab
