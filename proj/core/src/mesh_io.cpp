#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "lipstab/error.hpp"
#include "lipstab/geometry.hpp"

namespace lipstab {

void write_mesh(std::ostream& out, const Mesh& m) {
  char buf[96];
  out << "mesh v1 " << m.node_count() << ' ' << m.triangle_count() << ' ' << m.boundary_edges.size() << '\n';
  for (const auto& p : m.nodes) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x(), p.y());
    out << buf;
  }
  for (const auto& t : m.triangles) {
    out << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << ' ' << t.region << '\n';
  }
  for (const auto& e : m.boundary_edges) out << e[0] << ' ' << e[1] << '\n';
}

Mesh read_mesh(std::istream& in) {
  std::string line;
  int lineno = 0;
  auto next = [&]() -> std::istringstream {
    do {
      if (!std::getline(in, line)) {
        throw Error(ErrorKind::parse, "unexpected end of mesh file after line " + std::to_string(lineno));
      }
      ++lineno;
    } while (line.empty());
    return std::istringstream(line);
  };
  auto fail = [&](const std::string& what) {
    return Error(ErrorKind::parse, "mesh line " + std::to_string(lineno) + ": " + what);
  };

  auto header = next();
  std::string tag, version;
  long nn = -1, nt = -1, ne = -1;
  header >> tag >> version >> nn >> nt >> ne;
  if (!header || tag != "mesh" || version != "v1" || nn < 0 || nt < 0 || ne < 0) {
    throw fail("expected header `mesh v1 <nnodes> <ntris> <nbedges>`");
  }

  Mesh m;
  m.nodes.reserve(static_cast<std::size_t>(nn));
  for (long i = 0; i < nn; ++i) {
    auto s = next();
    double x = 0, y = 0;
    if (!(s >> x >> y)) throw fail("expected `x y`");
    m.nodes.emplace_back(x, y);
  }
  for (long i = 0; i < nt; ++i) {
    auto s = next();
    Triangle t;
    if (!(s >> t.v[0] >> t.v[1] >> t.v[2] >> t.region)) throw fail("expected `i j k region`");
    for (int v : t.v) {
      if (v < 0 || v >= nn) throw fail("node index out of range");
    }
    m.triangles.push_back(t);
  }
  for (long i = 0; i < ne; ++i) {
    auto s = next();
    std::array<int, 2> e{};
    if (!(s >> e[0] >> e[1])) throw fail("expected `i j`");
    if (e[0] < 0 || e[0] >= nn || e[1] < 0 || e[1] >= nn) throw fail("node index out of range");
    m.boundary_edges.push_back(e);
    m.boundary_nodes.push_back(e[0]);
  }

  Vec2 lo = m.nodes.empty() ? Vec2::Zero() : m.nodes.front();
  Vec2 hi = lo;
  for (const auto& p : m.nodes) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  m.box = Rect{lo.x(), lo.y(), hi.x(), hi.y()};
  return m;
}

}  // namespace lipstab
