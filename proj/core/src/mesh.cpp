#include "stcut/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace stcut {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Fills faces, triangle_faces, h and cell_triangles from vertices/triangles/grid.
void build_connectivity(BackgroundMesh& mesh) {
  std::map<std::pair<int, int>, int> edge_index;
  mesh.faces.clear();
  mesh.triangle_faces.assign(mesh.triangles.size(), {-1, -1, -1});
  mesh.h = 0.0;

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int e = 0; e < 3; ++e) {
      const int a = tri[(e + 1) % 3];
      const int b = tri[(e + 2) % 3];
      const auto key = std::minmax(a, b);
      auto [it, inserted] = edge_index.try_emplace({key.first, key.second}, mesh.num_faces());
      if (inserted) {
        Face f;
        f.vertices = {key.first, key.second};
        f.triangles = {t, -1};
        mesh.faces.push_back(f);
        mesh.h = std::max(mesh.h, (mesh.vertices[a] - mesh.vertices[b]).norm());
      } else {
        Face& f = mesh.faces[it->second];
        if (f.triangles[1] >= 0) throw std::logic_error("non-manifold edge in triangulation");
        f.triangles[1] = t;
      }
      mesh.triangle_faces[t][e] = it->second;
    }
  }

  for (Face& f : mesh.faces) {
    if (f.triangles[1] >= 0 && f.triangles[0] > f.triangles[1]) std::swap(f.triangles[0], f.triangles[1]);
    const Vec2 tangent = mesh.vertices[f.vertices[1]] - mesh.vertices[f.vertices[0]];
    Vec2 normal(tangent.y(), -tangent.x());
    normal.normalize();
    // Orient away from triangles[0].
    const Vec2 mid = 0.5 * (mesh.vertices[f.vertices[0]] + mesh.vertices[f.vertices[1]]);
    if (normal.dot(mid - mesh.centroid(f.triangles[0])) < 0.0) normal = -normal;
    f.normal = normal;
  }

  const int n = mesh.grid.n;
  mesh.cell_triangles.assign(static_cast<std::size_t>(n) * n, {-1, -1});
  const double dx = mesh.grid.dx();
  const double dy = mesh.grid.dy();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Vec2 c = mesh.centroid(t);
    const double u = (c.x() - mesh.grid.box.x0) / dx;
    const double v = (c.y() - mesh.grid.box.y0) / dy;
    const int i = std::clamp(static_cast<int>(std::floor(u)), 0, n - 1);
    const int j = std::clamp(static_cast<int>(std::floor(v)), 0, n - 1);
    const bool lower = (u - i) >= (v - j);
    mesh.cell_triangles[static_cast<std::size_t>(j) * n + i][lower ? 0 : 1] = t;
  }
}

}  // namespace

double BackgroundMesh::area(int t) const {
  const auto& tri = triangles[t];
  return 0.5 * cross(vertices[tri[1]] - vertices[tri[0]], vertices[tri[2]] - vertices[tri[0]]);
}

Vec2 BackgroundMesh::centroid(int t) const {
  const auto& tri = triangles[t];
  return (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]) / 3.0;
}

double BackgroundMesh::diameter(int t) const {
  const auto c = corners(t);
  return std::max({(c[0] - c[1]).norm(), (c[1] - c[2]).norm(), (c[2] - c[0]).norm()});
}

std::array<Vec2, 3> BackgroundMesh::corners(int t) const {
  const auto& tri = triangles[t];
  return {vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]};
}

bool BackgroundMesh::contains(int t, const Vec2& x, double tol) const {
  const auto c = corners(t);
  const double scale = 2.0 * area(t);
  for (int e = 0; e < 3; ++e) {
    const Vec2& a = c[(e + 1) % 3];
    const Vec2& b = c[(e + 2) % 3];
    if (cross(b - a, x - a) / scale < -tol) return false;
  }
  return true;
}

int BackgroundMesh::locate(const Vec2& x) const {
  const auto& box = grid.box;
  const double eps = 1e-12 * std::max(box.width(), box.height());
  if (x.x() < box.x0 - eps || x.x() > box.x1 + eps || x.y() < box.y0 - eps || x.y() > box.y1 + eps) return -1;
  const int n = grid.n;
  const double u = (x.x() - box.x0) / grid.dx();
  const double v = (x.y() - box.y0) / grid.dy();
  const int i = std::clamp(static_cast<int>(std::floor(u)), 0, n - 1);
  const int j = std::clamp(static_cast<int>(std::floor(v)), 0, n - 1);
  const bool lower = (u - i) >= (v - j);
  return cell_triangles[static_cast<std::size_t>(j) * n + i][lower ? 0 : 1];
}

BackgroundMesh build_uniform_mesh(const Box& box, int n) {
  if (n < 2) throw std::invalid_argument("build_uniform_mesh: need at least 2 subdivisions per axis");
  if (!(box.width() > 0.0) || !(box.height() > 0.0)) throw std::invalid_argument("build_uniform_mesh: degenerate box");

  BackgroundMesh mesh;
  mesh.grid = UniformGrid{box, n};
  const double dx = box.width() / n;
  const double dy = box.height() / n;
  mesh.vertices.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) mesh.vertices.emplace_back(box.x0 + i * dx, box.y0 + j * dy);

  auto vid = [n](int i, int j) { return j * (n + 1) + i; };
  mesh.triangles.reserve(2 * static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j), v11 = vid(i + 1, j + 1), v01 = vid(i, j + 1);
      mesh.triangles.push_back({v00, v10, v11});
      mesh.triangles.push_back({v00, v11, v01});
    }
  }
  build_connectivity(mesh);
  return mesh;
}

RefinedMesh refine_once(const BackgroundMesh& mesh) {
  RefinedMesh out;
  BackgroundMesh& fine = out.mesh;
  fine.grid = UniformGrid{mesh.grid.box, 2 * mesh.grid.n};
  fine.vertices = mesh.vertices;

  // One midpoint per parent face, numbered after the parent vertices.
  std::vector<int> midpoint(mesh.faces.size());
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const auto& face = mesh.faces[f];
    midpoint[f] = fine.num_vertices();
    fine.vertices.push_back(0.5 * (mesh.vertices[face.vertices[0]] + mesh.vertices[face.vertices[1]]));
  }

  out.parent.reserve(4 * mesh.triangles.size());
  out.children.resize(mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto& tf = mesh.triangle_faces[t];
    // m[e] is the midpoint of the edge opposite local vertex e.
    const int m0 = midpoint[tf[0]], m1 = midpoint[tf[1]], m2 = midpoint[tf[2]];
    const std::array<std::array<int, 3>, 4> kids = {{
        {tri[0], m2, m1},
        {m2, tri[1], m0},
        {m1, m0, tri[2]},
        {m0, m1, m2},
    }};
    for (int c = 0; c < 4; ++c) {
      out.children[t][c] = fine.num_triangles();
      fine.triangles.push_back(kids[c]);
      out.parent.push_back(t);
    }
  }
  build_connectivity(fine);
  return out;
}

std::vector<int> internal_faces(const BackgroundMesh& mesh, std::span<const std::uint8_t> element_flags) {
  std::vector<int> out;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const auto& face = mesh.faces[f];
    if (face.interior() && element_flags[face.triangles[0]] && element_flags[face.triangles[1]]) out.push_back(f);
  }
  return out;
}

std::vector<int> internal_faces(const BackgroundMesh& mesh, std::span<const int> element_set) {
  std::vector<std::uint8_t> flags(mesh.triangles.size(), 0);
  for (int t : element_set) flags[t] = 1;
  return internal_faces(mesh, flags);
}

std::array<int, 3> neighbors(const BackgroundMesh& mesh, int t) {
  std::array<int, 3> out{};
  for (int e = 0; e < 3; ++e) {
    const auto& face = mesh.faces[mesh.triangle_faces[t][e]];
    out[e] = face.triangles[0] == t ? face.triangles[1] : face.triangles[0];
  }
  return out;
}

}  // namespace stcut
