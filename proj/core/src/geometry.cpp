#include "lipstab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <limits>

#include "lipstab/error.hpp"

namespace lipstab {

namespace {

constexpr double kGeomTol = 1e-12;

int layers_for(double thickness, double h) {
  return std::max(1, static_cast<int>(std::ceil(thickness / h - 1e-9)));
}

}  // namespace

const Region& Partition::region(int index) const {
  for (const auto& r : regions) {
    if (r.index == index) return r;
  }
  throw Error(ErrorKind::invalid_spec, "no region with index " + std::to_string(index));
}

const Interface& Partition::interface(int index) const {
  if (index < 1 || index > strip_count()) {
    throw Error(ErrorKind::invalid_spec, "no interface with index " + std::to_string(index));
  }
  return interfaces[static_cast<std::size_t>(index - 1)];
}

Rect Partition::mesh_box() const {
  Rect b = domain;
  if (has_extension) b.y0 = regions.front().box.y0;
  return b;
}

int Partition::region_of(const Vec2& p) const {
  // Top-down so that interface points land in the region above.
  for (auto it = regions.rbegin(); it != regions.rend(); ++it) {
    if (it->box.contains(p, kGeomTol) && p.y() >= it->box.y0 - kGeomTol) return it->index;
  }
  return -1;
}

std::vector<std::array<int, 2>> Partition::adjacency() const {
  std::vector<std::array<int, 2>> out;
  for (const auto& s : interfaces) {
    if (s.below >= 0) out.push_back({s.below, s.above});
  }
  return out;
}

std::optional<Rect> Partition::k0() const {
  if (!has_extension) return std::nullopt;
  const Rect& ext = regions.front().box;
  const double w = domain.width();
  return Rect{domain.x0 + w / 3.0, ext.y0, domain.x0 + 2.0 * w / 3.0, domain.y0 - r0 / 2.0};
}

Partition build_partition(int strips, const Rect& domain, bool with_extension) {
  if (strips < 1) throw Error(ErrorKind::invalid_spec, "strip count must be at least 1");
  if (!(domain.width() > 0.0) || !(domain.height() > 0.0)) {
    throw Error(ErrorKind::invalid_spec, "domain rectangle must have positive width and height");
  }

  Partition p;
  p.domain = domain;
  p.has_extension = with_extension;
  const double t = domain.height() / strips;
  p.r0 = t;
  p.lipschitz_L = 0.0;
  p.area_A = domain.area() / (t * t);

  if (domain.width() / 2.0 < p.r0 / 3.0) {
    throw Error(ErrorKind::invalid_spec,
                "domain too narrow: interfaces cannot contain a disc of radius r0/3 around P_k");
  }

  if (with_extension) {
    p.regions.push_back(Region{0, Rect{domain.x0, domain.y0 - t, domain.x1, domain.y0}});
  }
  for (int j = 1; j <= strips; ++j) {
    const double lo = domain.y0 + (j - 1) * t;
    const double hi = (j == strips) ? domain.y1 : domain.y0 + j * t;
    p.regions.push_back(Region{j, Rect{domain.x0, lo, domain.x1, hi}});
  }
  const double xm = 0.5 * (domain.x0 + domain.x1);
  for (int k = 1; k <= strips; ++k) {
    Interface s;
    s.index = k;
    s.below = (k == 1) ? (with_extension ? 0 : -1) : k - 1;
    s.above = k;
    s.height = domain.y0 + (k - 1) * t;
    s.x0 = domain.x0;
    s.x1 = domain.x1;
    s.marked = Vec2{xm, s.height};
    p.interfaces.push_back(s);
  }
  return p;
}

Chain build_chain(const Partition& p, int target) {
  const int first = p.first_region();
  const int last = p.strip_count();
  if (target < first || target > last) {
    throw Error(ErrorKind::no_chain, "target region " + std::to_string(target) + " out of range");
  }
  const int n = last + 1;
  std::vector<int> prev(static_cast<std::size_t>(n), -2);
  std::vector<int> via(static_cast<std::size_t>(n), -1);
  std::deque<int> queue{first};
  prev[static_cast<std::size_t>(first)] = -1;
  while (!queue.empty()) {
    const int cur = queue.front();
    queue.pop_front();
    if (cur == target) break;
    for (const auto& s : p.interfaces) {
      if (s.below < 0) continue;
      int next = -1;
      if (s.below == cur) next = s.above;
      if (s.above == cur) next = s.below;
      if (next < 0 || prev[static_cast<std::size_t>(next)] != -2) continue;
      prev[static_cast<std::size_t>(next)] = cur;
      via[static_cast<std::size_t>(next)] = s.index;
      queue.push_back(next);
    }
  }
  if (prev[static_cast<std::size_t>(target)] == -2) {
    throw Error(ErrorKind::no_chain, "region " + std::to_string(target) + " is not reachable");
  }
  Chain c;
  for (int cur = target; cur != -1; cur = prev[static_cast<std::size_t>(cur)]) {
    c.regions.push_back(cur);
    if (prev[static_cast<std::size_t>(cur)] != -1) c.links.push_back(via[static_cast<std::size_t>(cur)]);
  }
  std::reverse(c.regions.begin(), c.regions.end());
  std::reverse(c.links.begin(), c.links.end());
  return c;
}

ChainSplit split_chain(const Partition& p, const Chain& c, int k) {
  std::vector<int> physical;
  for (int r : c.regions) {
    if (r != 0) physical.push_back(r);
  }
  if (k < 0 || k > static_cast<int>(physical.size())) {
    throw Error(ErrorKind::range, "chain depth " + std::to_string(k) + " out of range");
  }
  ChainSplit split;
  if (p.has_extension) split.explored.push_back(0);
  split.explored.insert(split.explored.end(), physical.begin(), physical.begin() + k);
  for (const auto& r : p.regions) {
    if (std::find(split.explored.begin(), split.explored.end(), r.index) == split.explored.end()) {
      split.unexplored.push_back(r.index);
    }
  }
  return split;
}

bool in_source_set(const Partition& p, const Chain& c, const Vec2& x) {
  const double w = p.domain.width();
  const double xa = p.domain.x0 + w / 3.0;
  const double xb = p.domain.x0 + 2.0 * w / 3.0;
  if (x.x() < xa - kGeomTol || x.x() > xb + kGeomTol) return false;
  if (auto k0 = p.k0(); k0 && k0->contains(x, kGeomTol)) return true;
  for (int r : c.regions) {
    if (r == 0) continue;
    if (p.region(r).box.contains(x, kGeomTol)) return true;
  }
  return false;
}

double Mesh::signed_area(int t) const {
  const auto& tri = triangles[static_cast<std::size_t>(t)];
  const Vec2& a = nodes[static_cast<std::size_t>(tri.v[0])];
  const Vec2& b = nodes[static_cast<std::size_t>(tri.v[1])];
  const Vec2& c = nodes[static_cast<std::size_t>(tri.v[2])];
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

std::array<Vec2, 3> Mesh::barycentric_gradients(int t) const {
  const auto& tri = triangles[static_cast<std::size_t>(t)];
  const Vec2& a = nodes[static_cast<std::size_t>(tri.v[0])];
  const Vec2& b = nodes[static_cast<std::size_t>(tri.v[1])];
  const Vec2& c = nodes[static_cast<std::size_t>(tri.v[2])];
  const double twice = 2.0 * signed_area(t);
  return {Vec2{(b.y() - c.y()) / twice, (c.x() - b.x()) / twice},
          Vec2{(c.y() - a.y()) / twice, (a.x() - c.x()) / twice},
          Vec2{(a.y() - b.y()) / twice, (b.x() - a.x()) / twice}};
}

double Mesh::min_angle_deg() const {
  double best = 180.0;
  for (const auto& tri : triangles) {
    for (int i = 0; i < 3; ++i) {
      const Vec2& p = nodes[static_cast<std::size_t>(tri.v[static_cast<std::size_t>(i)])];
      const Vec2& q = nodes[static_cast<std::size_t>(tri.v[static_cast<std::size_t>((i + 1) % 3)])];
      const Vec2& r = nodes[static_cast<std::size_t>(tri.v[static_cast<std::size_t>((i + 2) % 3)])];
      const Vec2 u = q - p;
      const Vec2 v = r - p;
      const double cosang = u.dot(v) / (u.norm() * v.norm());
      best = std::min(best, std::acos(std::clamp(cosang, -1.0, 1.0)) * 180.0 / kPi);
    }
  }
  return best;
}

std::vector<int> Mesh::boundary_position() const {
  std::vector<int> pos(nodes.size(), -1);
  for (std::size_t k = 0; k < boundary_nodes.size(); ++k) {
    pos[static_cast<std::size_t>(boundary_nodes[k])] = static_cast<int>(k);
  }
  return pos;
}

bool Mesh::contains_ball(const Vec2& c, double r) const {
  if (shape == MeshShape::rectangle) {
    return c.x() - r >= box.x0 - kGeomTol && c.x() + r <= box.x1 + kGeomTol &&
           c.y() - r >= box.y0 - kGeomTol && c.y() + r <= box.y1 + kGeomTol;
  }
  // Inscribed radius of the boundary polygon.
  const double inner = radius * std::cos(kPi / static_cast<double>(boundary_nodes.size()));
  return (c - center).norm() + r <= inner + kGeomTol;
}

std::uint64_t Mesh::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& p : nodes) {
    const double xy[2] = {p.x(), p.y()};
    mix(xy, sizeof xy);
  }
  for (const auto& t : triangles) {
    const std::int32_t v[4] = {t.v[0], t.v[1], t.v[2], t.region};
    mix(v, sizeof v);
  }
  for (int b : boundary_nodes) {
    const std::int32_t v = b;
    mix(&v, sizeof v);
  }
  return h;
}

std::shared_ptr<const Mesh> generate_mesh(const Partition& p, double h) {
  if (!(h > 0.0)) throw Error(ErrorKind::too_coarse, "mesh size must be positive");
  for (const auto& r : p.regions) {
    if (h > r.box.height() * (1.0 + 1e-12)) {
      throw Error(ErrorKind::too_coarse, "mesh size " + std::to_string(h) +
                                             " exceeds strip thickness " +
                                             std::to_string(r.box.height()));
    }
  }

  auto m = std::make_shared<Mesh>();
  m->h = h;
  m->shape = MeshShape::rectangle;
  m->box = p.mesh_box();

  const Rect& box = m->box;
  const int nx = layers_for(box.width(), h);
  std::vector<double> ys{box.y0};
  std::vector<int> layer_region;
  std::vector<int> level_sigma{-1};  // interface index at each y level, -1 if none
  for (const auto& r : p.regions) {
    const int n = layers_for(r.box.height(), h);
    level_sigma.back() = -1;
    for (const auto& s : p.interfaces) {
      if (s.above == r.index) level_sigma.back() = s.index;
    }
    for (int j = 1; j <= n; ++j) {
      ys.push_back(j == n ? r.box.y1 : r.box.y0 + r.box.height() * j / n);
      layer_region.push_back(r.index);
      level_sigma.push_back(-1);
    }
  }
  const int ny = static_cast<int>(layer_region.size());

  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  m->nodes.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      const double x = (i == nx) ? box.x1 : box.x0 + box.width() * i / nx;
      m->nodes.emplace_back(x, ys[static_cast<std::size_t>(j)]);
    }
  }
  for (int j = 0; j < ny; ++j) {
    const int reg = layer_region[static_cast<std::size_t>(j)];
    for (int i = 0; i < nx; ++i) {
      m->triangles.push_back(Triangle{{id(i, j), id(i + 1, j), id(i + 1, j + 1)}, reg});
      m->triangles.push_back(Triangle{{id(i, j), id(i + 1, j + 1), id(i, j + 1)}, reg});
    }
  }
  for (int i = 0; i < nx; ++i) m->boundary_nodes.push_back(id(i, 0));
  for (int j = 0; j < ny; ++j) m->boundary_nodes.push_back(id(nx, j));
  for (int i = nx; i > 0; --i) m->boundary_nodes.push_back(id(i, ny));
  for (int j = ny; j > 0; --j) m->boundary_nodes.push_back(id(0, j));
  const std::size_t nb = m->boundary_nodes.size();
  for (std::size_t k = 0; k < nb; ++k) {
    m->boundary_edges.push_back({m->boundary_nodes[k], m->boundary_nodes[(k + 1) % nb]});
  }
  for (int j = 0; j <= ny; ++j) {
    const int sigma = level_sigma[static_cast<std::size_t>(j)];
    if (sigma < 0) continue;
    for (int i = 0; i < nx; ++i) m->interface_edges.push_back(InterfaceEdge{id(i, j), id(i + 1, j), sigma});
  }
  return m;
}

std::shared_ptr<const Mesh> generate_disk_mesh(double radius, double h, Vec2 center) {
  if (!(radius > 0.0)) throw Error(ErrorKind::invalid_spec, "disk radius must be positive");
  if (!(h > 0.0) || h > radius) throw Error(ErrorKind::too_coarse, "mesh size must lie in (0, radius]");
  const int rings = layers_for(radius, h);

  auto m = std::make_shared<Mesh>();
  m->h = h;
  m->shape = MeshShape::disk;
  m->center = center;
  m->radius = radius;
  m->box = Rect{center.x() - radius, center.y() - radius, center.x() + radius, center.y() + radius};

  m->nodes.push_back(center);
  auto ring_start = [](int i) { return i == 0 ? 0 : 1 + 3 * i * (i - 1); };
  for (int i = 1; i <= rings; ++i) {
    const double rad = radius * i / rings;
    for (int k = 0; k < 6 * i; ++k) {
      const double th = 2.0 * kPi * k / (6.0 * i);
      m->nodes.emplace_back(center.x() + rad * std::cos(th), center.y() + rad * std::sin(th));
    }
  }
  auto add = [&m](int a, int b, int c) {
    Triangle t{{a, b, c}, 1};
    m->triangles.push_back(t);
    if (m->signed_area(m->triangle_count() - 1) < 0.0) std::swap(m->triangles.back().v[1], m->triangles.back().v[2]);
  };
  for (int k = 0; k < 6; ++k) add(0, 1 + k, 1 + (k + 1) % 6);
  for (int i = 2; i <= rings; ++i) {
    const int os = ring_start(i), on = 6 * i;
    const int is = ring_start(i - 1), in = 6 * (i - 1);
    for (int s = 0; s < 6; ++s) {
      auto outer = [&](int mm) { return os + (s * i + mm) % on; };
      auto inner = [&](int mm) { return is + (s * (i - 1) + mm) % in; };
      for (int mm = 0; mm < i; ++mm) add(inner(mm), outer(mm), outer(mm + 1));
      for (int mm = 0; mm + 1 < i; ++mm) add(inner(mm), outer(mm + 1), inner(mm + 1));
    }
  }
  const int bs = ring_start(rings);
  for (int k = 0; k < 6 * rings; ++k) m->boundary_nodes.push_back(bs + k);
  const std::size_t nb = m->boundary_nodes.size();
  for (std::size_t k = 0; k < nb; ++k) {
    m->boundary_edges.push_back({m->boundary_nodes[k], m->boundary_nodes[(k + 1) % nb]});
  }
  return m;
}

PointLocator::PointLocator(std::shared_ptr<const Mesh> mesh) : mesh_(std::move(mesh)) {
  lo_ = Vec2::Constant(std::numeric_limits<double>::max());
  hi_ = Vec2::Constant(std::numeric_limits<double>::lowest());
  for (const auto& p : mesh_->nodes) {
    lo_ = lo_.cwiseMin(p);
    hi_ = hi_.cwiseMax(p);
  }
  const int side = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(mesh_->triangle_count()) / 2.0)));
  nx_ = ny_ = side;
  buckets_.assign(static_cast<std::size_t>(nx_ * ny_), {});
  const Vec2 span = (hi_ - lo_).cwiseMax(Vec2::Constant(1e-300));
  auto cell = [&](double v, double lo, double w, int n) {
    return std::clamp(static_cast<int>((v - lo) / w * n), 0, n - 1);
  };
  for (int t = 0; t < mesh_->triangle_count(); ++t) {
    Vec2 tlo = Vec2::Constant(std::numeric_limits<double>::max());
    Vec2 thi = Vec2::Constant(std::numeric_limits<double>::lowest());
    for (int v : mesh_->triangles[static_cast<std::size_t>(t)].v) {
      tlo = tlo.cwiseMin(mesh_->nodes[static_cast<std::size_t>(v)]);
      thi = thi.cwiseMax(mesh_->nodes[static_cast<std::size_t>(v)]);
    }
    const int i0 = cell(tlo.x(), lo_.x(), span.x(), nx_), i1 = cell(thi.x(), lo_.x(), span.x(), nx_);
    const int j0 = cell(tlo.y(), lo_.y(), span.y(), ny_), j1 = cell(thi.y(), lo_.y(), span.y(), ny_);
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(j * nx_ + i)].push_back(t);
    }
  }
}

std::optional<PointLocator::Hit> PointLocator::locate(const Vec2& x) const {
  const Vec2 span = (hi_ - lo_).cwiseMax(Vec2::Constant(1e-300));
  const double fx = (x.x() - lo_.x()) / span.x();
  const double fy = (x.y() - lo_.y()) / span.y();
  if (fx < -1e-12 || fx > 1.0 + 1e-12 || fy < -1e-12 || fy > 1.0 + 1e-12) return std::nullopt;
  const int i = std::clamp(static_cast<int>(fx * nx_), 0, nx_ - 1);
  const int j = std::clamp(static_cast<int>(fy * ny_), 0, ny_ - 1);
  Hit best;
  double best_min = -std::numeric_limits<double>::infinity();
  for (int t : buckets_[static_cast<std::size_t>(j * nx_ + i)]) {
    const auto& tri = mesh_->triangles[static_cast<std::size_t>(t)];
    const Vec2& a = mesh_->nodes[static_cast<std::size_t>(tri.v[0])];
    const auto g = mesh_->barycentric_gradients(t);
    const double l1 = g[1].dot(x - a);
    const double l2 = g[2].dot(x - a);
    const double l0 = 1.0 - l1 - l2;
    const double mn = std::min({l0, l1, l2});
    if (mn > best_min) {
      best_min = mn;
      best.triangle = t;
      best.bary = {l0, l1, l2};
    }
    if (mn >= 0.0) return best;
  }
  if (best.triangle >= 0 && best_min > -1e-9) return best;
  return std::nullopt;
}

}  // namespace lipstab
