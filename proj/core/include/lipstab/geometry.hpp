#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lipstab/types.hpp"

namespace lipstab {

struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  bool contains(const Vec2& p, double tol = 0.0) const {
    return p.x() >= x0 - tol && p.x() <= x1 + tol && p.y() >= y0 - tol && p.y() <= y1 + tol;
  }
};

/// One strip D_j of the layered partition. Index 0 is the extension strip below
/// the bottom edge; the physical regions are numbered 1..N from the bottom up.
struct Region {
  int index = 0;
  Rect box;

  std::array<Vec2, 4> polygon() const {
    return {Vec2{box.x0, box.y0}, Vec2{box.x1, box.y0}, Vec2{box.x1, box.y1}, Vec2{box.x0, box.y1}};
  }
};

/// A flat horizontal interface Sigma_k. Sigma_1 is the bottom edge of the
/// physical domain; its `below` region is 0 with an extension, -1 without.
struct Interface {
  int index = 0;
  int below = -1;
  int above = 0;
  double height = 0.0;
  double x0 = 0.0, x1 = 1.0;
  Vec2 marked;  // P_k
};

struct Partition {
  Rect domain;  // the physical domain, without the extension strip
  bool has_extension = false;
  std::vector<Region> regions;        // ordered bottom to top; extension first if present
  std::vector<Interface> interfaces;  // Sigma_1..Sigma_N
  double r0 = 0.0;
  double lipschitz_L = 0.0;
  double area_A = 0.0;

  int strip_count() const { return static_cast<int>(interfaces.size()); }
  int first_region() const { return has_extension ? 0 : 1; }
  const Region& region(int index) const;
  const Interface& interface(int index) const;
  /// Rectangle covered by the mesh: the domain plus the extension strip.
  Rect mesh_box() const;
  /// Region index containing p (points on an interface go to the region above); -1 outside.
  int region_of(const Vec2& p) const;
  /// Region pairs sharing an interface.
  std::vector<std::array<int, 2>> adjacency() const;

  /// K_0: the part of the extension strip at distance >= r0/2 from Sigma_1,
  /// restricted to the horizontal middle third. Empty without an extension.
  std::optional<Rect> k0() const;
};

Partition build_partition(int strips, const Rect& domain, bool with_extension);

struct Chain {
  std::vector<int> regions;  // j_1..j_M
  std::vector<int> links;    // interface index joining regions[i] and regions[i+1]

  int length() const { return static_cast<int>(regions.size()); }
};

Chain build_chain(const Partition& p, int target);

/// W_k (explored: extension plus the first k chain regions) and U_k (the rest).
struct ChainSplit {
  std::vector<int> explored;
  std::vector<int> unexplored;
};
ChainSplit split_chain(const Partition& p, const Chain& c, int k);

/// The compact set K used for source points: the horizontal middle third of the
/// domain across every chain strip, plus K_0.
bool in_source_set(const Partition& p, const Chain& c, const Vec2& x);

struct Triangle {
  std::array<int, 3> v{};
  int region = 0;
};

struct InterfaceEdge {
  int a = 0, b = 0;
  int sigma = 0;
};

enum class MeshShape { rectangle, disk };

struct Mesh {
  std::vector<Vec2> nodes;
  std::vector<Triangle> triangles;
  std::vector<std::array<int, 2>> boundary_edges;  // consecutive along the counterclockwise loop
  std::vector<int> boundary_nodes;                 // trace basis order (counterclockwise)
  std::vector<InterfaceEdge> interface_edges;
  double h = 0.0;

  MeshShape shape = MeshShape::rectangle;
  Rect box;                 // rectangle meshes
  Vec2 center{0.0, 0.0};    // disk meshes
  double radius = 0.0;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }
  int boundary_count() const { return static_cast<int>(boundary_nodes.size()); }

  double signed_area(int t) const;
  /// Gradients of the three barycentric coordinates (constant on the triangle).
  std::array<Vec2, 3> barycentric_gradients(int t) const;
  /// Smallest interior angle over the mesh, in degrees.
  double min_angle_deg() const;
  /// Position of every node in the trace basis, -1 for interior nodes.
  std::vector<int> boundary_position() const;
  /// True iff the closed ball B_r(c) lies inside the meshed domain.
  bool contains_ball(const Vec2& c, double r) const;
  /// Stable 64-bit FNV-1a hash of coordinates and connectivity.
  std::uint64_t hash() const;
};

std::shared_ptr<const Mesh> generate_mesh(const Partition& p, double h);

/// Structured ring mesh of a disk: ring i carries 6i nodes; all tagged region 1.
std::shared_ptr<const Mesh> generate_disk_mesh(double radius, double h, Vec2 center = {0.0, 0.0});

/// Plain-text mesh format `mesh v1 <nnodes> <ntris> <nbedges>`.
void write_mesh(std::ostream& out, const Mesh& m);
Mesh read_mesh(std::istream& in);

/// Locates the triangle containing a point with a uniform bucket grid.
class PointLocator {
 public:
  explicit PointLocator(std::shared_ptr<const Mesh> mesh);

  struct Hit {
    int triangle = -1;
    std::array<double, 3> bary{};
  };
  std::optional<Hit> locate(const Vec2& x) const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  Vec2 lo_, hi_;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> buckets_;
};

}  // namespace lipstab
