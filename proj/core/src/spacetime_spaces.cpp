#include "stcut/spacetime_spaces.hpp"

#include <cmath>
#include <stdexcept>

namespace stcut {

std::vector<std::uint8_t> swept_elements(const BackgroundMesh& mesh, const std::vector<InterfaceSnapshot>& snapshots) {
  std::vector<std::uint8_t> flag(mesh.num_triangles(), 0);
  for (std::size_t m = 0; m + 1 < snapshots.size(); ++m) {
    const auto& a = snapshots[m].vertex_side;
    const auto& b = snapshots[m + 1].vertex_side;
    for (int t = 0; t < mesh.num_triangles(); ++t)
      for (int v : mesh.triangles[t])
        if (a[v] != b[v]) flag[t] = 1;
  }
  return flag;
}

namespace {

void finish_space(SlabSpace& space, const DofHandler& dofs) {
  const BackgroundMesh& mesh = dofs.mesh();
  space.active_elements.clear();
  for (int t = 0; t < mesh.num_triangles(); ++t)
    if (space.active_flag[t]) space.active_elements.push_back(t);
  if (space.active_elements.empty()) throw std::runtime_error("active mesh is empty");

  space.global_to_local.assign(dofs.num_dofs(), -1);
  std::vector<std::uint8_t> used(dofs.num_dofs(), 0);
  for (int t : space.active_elements)
    for (int d : dofs.element_dofs(t)) used[d] = 1;
  space.local_to_global.clear();
  for (int d = 0; d < dofs.num_dofs(); ++d)
    if (used[d]) {
      space.global_to_local[d] = static_cast<int>(space.local_to_global.size());
      space.local_to_global.push_back(d);
    }
}

SlabSpace base_space(const DofHandler& dofs, std::vector<InterfaceSnapshot> snapshots, const TimeQuadrature& quadrature,
                     int q, int slab) {
  if (snapshots.size() < 2) throw std::invalid_argument("slab space needs at least two snapshots");
  if (static_cast<int>(snapshots.size()) != quadrature.size())
    throw std::invalid_argument("slab space: one snapshot per time quadrature point required");
  SlabSpace space;
  space.slab = slab;
  space.q = q;
  space.quadrature = quadrature;
  space.t0 = quadrature.points.front();
  space.t1 = quadrature.points.back();
  space.snapshots = std::move(snapshots);
  space.dofs = &dofs;
  return space;
}

}  // namespace

SlabSpace build_active_surface_mesh(const DofHandler& dofs, std::vector<InterfaceSnapshot> snapshots,
                                    const TimeQuadrature& quadrature, int q, int slab) {
  SlabSpace space = base_space(dofs, std::move(snapshots), quadrature, q, slab);
  const BackgroundMesh& mesh = dofs.mesh();
  space.active_flag = swept_elements(mesh, space.snapshots);
  for (const auto& snap : space.snapshots)
    for (const auto& s : snap.segments) space.active_flag[s.host] = 1;
  finish_space(space, dofs);
  space.faces = internal_faces(mesh, std::span<const std::uint8_t>(space.active_flag));
  return space;
}

SlabSpace build_active_bulk_mesh(const DofHandler& dofs, std::vector<InterfaceSnapshot> snapshots,
                                 const TimeQuadrature& quadrature, int q, const SlabSpace& surface, int slab) {
  SlabSpace space = base_space(dofs, std::move(snapshots), quadrature, q, slab);
  const BackgroundMesh& mesh = dofs.mesh();
  space.active_flag = swept_elements(mesh, space.snapshots);
  for (const auto& snap : space.snapshots) {
    const auto labels = classify_elements(snap, mesh);
    for (int t = 0; t < mesh.num_triangles(); ++t)
      if (labels[t] != ElementLabel::inner) space.active_flag[t] = 1;
  }
  finish_space(space, dofs);
  for (int f : internal_faces(mesh, std::span<const std::uint8_t>(space.active_flag))) {
    const auto& face = mesh.faces[f];
    if (surface.is_active(face.triangles[0]) || surface.is_active(face.triangles[1])) space.faces.push_back(f);
  }
  return space;
}

int find_active_element(const SlabSpace& space, const Vec2& x, int hint) {
  const BackgroundMesh& mesh = space.mesh();
  if (space.is_active(hint) && mesh.contains(hint, x, 1e-10)) return hint;
  const int t = mesh.locate(x);
  if (space.is_active(t) && mesh.contains(t, x, 1e-10)) return t;
  // Points on element boundaries: look at the surrounding grid cells.
  const UniformGrid& g = mesh.grid;
  const int i0 = static_cast<int>(std::floor((x.x() - g.box.x0) / g.dx()));
  const int j0 = static_cast<int>(std::floor((x.y() - g.box.y0) / g.dy()));
  for (int j = j0 - 1; j <= j0 + 1; ++j)
    for (int i = i0 - 1; i <= i0 + 1; ++i) {
      if (i < 0 || j < 0 || i >= g.n || j >= g.n) continue;
      for (int c : mesh.cell_triangles[static_cast<std::size_t>(j) * g.n + i])
        if (space.is_active(c) && mesh.contains(c, x, 1e-10)) return c;
    }
  return -1;
}

SpacetimeValue evaluate_spacetime(const Eigen::VectorXd& coeffs, const SlabSpace& space, double t, const Vec2& x,
                                  int element, const Vec2& direction, int order) {
  const int K = find_active_element(space, x, element);
  if (K < 0) throw std::out_of_range("evaluate_spacetime: point outside the active mesh");
  const DofHandler& dofs = *space.dofs;
  const LagrangeBasis& basis = dofs.basis();
  const AffineMap map = AffineMap::of(space.mesh(), K);
  const Vec2 xi = map.to_reference(x);
  const int nloc = basis.size();
  std::vector<double> phi(nloc), dir(nloc);
  std::vector<Vec2> grad(nloc);
  basis.values(xi, phi);
  basis.gradients(xi, grad);
  basis.directional(xi, map.reference_direction(direction), order, dir);

  const TimeBasis tb = space.time_basis();
  const auto tv = tb.values(t);
  const auto td = tb.derivatives(t);
  SpacetimeValue out;
  const auto ed = dofs.element_dofs(K);
  for (int a = 0; a < nloc; ++a) {
    const int local = space.global_to_local[ed[a]];
    const Vec2 g = map.physical_gradient(grad[a]);
    for (int j = 0; j <= space.q; ++j) {
      const double c = coeffs[space.column(local, j)];
      out.value += c * tv[j] * phi[a];
      out.gradient += c * tv[j] * g;
      out.time_derivative += c * td[j] * phi[a];
      out.directional += c * tv[j] * dir[a];
    }
  }
  return out;
}

Eigen::VectorXd interpolate(const DofHandler& dofs, const std::function<double(const Vec2&)>& f) {
  Eigen::VectorXd out(dofs.num_dofs());
  for (int d = 0; d < dofs.num_dofs(); ++d) out[d] = f(dofs.point(d));
  return out;
}

Eigen::VectorXd interpolate_on_slab(const SlabSpace& space, const std::function<double(const Vec2&)>& f) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(space.num_columns());
  for (int i = 0; i < space.num_spatial(); ++i) out[space.column(i, 0)] = f(space.dofs->point(space.local_to_global[i]));
  return out;
}

}  // namespace stcut
