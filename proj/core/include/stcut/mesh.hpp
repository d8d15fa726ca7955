#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

namespace stcut {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Axis-aligned rectangle [x0, x1] x [y0, y1].
struct Box {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 1.0;
  double y1 = 1.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  bool operator==(const Box&) const = default;
};

/// Structured-grid metadata kept alongside a uniform triangulation. Every
/// mesh in this library descends from a uniform grid, which lets point
/// location and chord clipping work on grid lines instead of searching.
struct UniformGrid {
  Box box;
  int n = 0;  ///< cells per axis

  double dx() const { return box.width() / n; }
  double dy() const { return box.height() / n; }
};

/// An edge of the triangulation. `triangles[0] < triangles[1]` for interior
/// faces; boundary faces have `triangles[1] == -1`. The normal points from
/// `triangles[0]` towards `triangles[1]` (outward for boundary faces).
struct Face {
  std::array<int, 2> vertices{};
  std::array<int, 2> triangles{-1, -1};
  Vec2 normal = Vec2::Zero();

  bool interior() const { return triangles[1] >= 0; }
};

struct BackgroundMesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;  ///< counterclockwise
  std::vector<Face> faces;
  /// Face index of the local edge opposite local vertex e.
  std::vector<std::array<int, 3>> triangle_faces;
  double h = 0.0;  ///< longest edge
  UniformGrid grid;
  /// (lower, upper) triangle of each grid cell, row-major in cell (i, j).
  std::vector<std::array<int, 2>> cell_triangles;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  int num_faces() const { return static_cast<int>(faces.size()); }

  /// Grid cell width, the "h" used for scaling stabilization terms and
  /// reported in convergence tables.
  double cell_width() const { return grid.dx(); }

  double area(int t) const;
  Vec2 centroid(int t) const;
  double diameter(int t) const;
  std::array<Vec2, 3> corners(int t) const;
  bool contains(int t, const Vec2& x, double tol = 1e-12) const;

  /// Triangle containing x, or -1 if x lies outside the box. Points on a
  /// shared edge resolve to one of the adjacent triangles deterministically.
  int locate(const Vec2& x) const;
};

/// Result of one uniform refinement. Children of parent t are
/// `children[t]`; child 3 is the interior (midpoint) triangle.
struct RefinedMesh {
  BackgroundMesh mesh;
  std::vector<int> parent;
  std::vector<std::array<int, 4>> children;
};

/// Splits each of the n x n cells of `box` along its bottom-left to
/// top-right diagonal. Throws std::invalid_argument if n < 2 or the box is
/// degenerate.
BackgroundMesh build_uniform_mesh(const Box& box, int n);

/// Midpoint refinement: 4 children per triangle. The first
/// `mesh.num_vertices()` vertices of the refined mesh coincide with the
/// parent vertices (same indices).
RefinedMesh refine_once(const BackgroundMesh& mesh);

/// Faces whose two adjacent triangles both belong to `element_set`. The
/// flags vector is indexed by triangle.
std::vector<int> internal_faces(const BackgroundMesh& mesh, std::span<const std::uint8_t> element_flags);
std::vector<int> internal_faces(const BackgroundMesh& mesh, std::span<const int> element_set);

/// Triangles sharing an edge with t.
std::array<int, 3> neighbors(const BackgroundMesh& mesh, int t);

}  // namespace stcut
