#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "stcut/interface_geometry.hpp"
#include "stcut/lagrange.hpp"
#include "stcut/quadrature.hpp"

namespace stcut {

/// Active mesh and tensor-product dof map of one space-time slab.
struct SlabSpace {
  int slab = 0;
  double t0 = 0.0;
  double t1 = 0.0;
  int q = 1;
  TimeQuadrature quadrature;
  std::vector<InterfaceSnapshot> snapshots;  ///< one per quadrature point

  const DofHandler* dofs = nullptr;
  std::vector<int> active_elements;
  std::vector<std::uint8_t> active_flag;  ///< per background triangle
  std::vector<int> faces;                 ///< stabilized faces
  std::vector<int> global_to_local;       ///< -1 for inactive spatial dofs
  std::vector<int> local_to_global;

  int num_spatial() const { return static_cast<int>(local_to_global.size()); }
  int num_columns() const { return (q + 1) * num_spatial(); }
  int column(int local_dof, int mode) const { return mode * num_spatial() + local_dof; }
  double k() const { return t1 - t0; }
  TimeBasis time_basis() const { return {q, t0, t1 - t0}; }
  bool is_active(int element) const { return element >= 0 && active_flag[element] != 0; }
  const BackgroundMesh& mesh() const { return dofs->mesh(); }
};

/// Elements cut at any quadrature time plus the swept band (elements with a
/// vertex changing side between consecutive quadrature times). Faces are the
/// internal faces of that set. Throws if the set is empty.
SlabSpace build_active_surface_mesh(const DofHandler& dofs, std::vector<InterfaceSnapshot> snapshots,
                                    const TimeQuadrature& quadrature, int q, int slab = 0);

/// Elements meeting the outer phase at any quadrature time plus the swept
/// band. Stabilized faces are internal faces of that set with at least one
/// neighbour in the surface active set.
SlabSpace build_active_bulk_mesh(const DofHandler& dofs, std::vector<InterfaceSnapshot> snapshots,
                                 const TimeQuadrature& quadrature, int q, const SlabSpace& surface, int slab = 0);

/// Elements changing side (or cut) between any two consecutive snapshots.
std::vector<std::uint8_t> swept_elements(const BackgroundMesh& mesh, const std::vector<InterfaceSnapshot>& snapshots);

struct SpacetimeValue {
  double value = 0.0;
  Vec2 gradient = Vec2::Zero();
  double time_derivative = 0.0;
  double directional = 0.0;  ///< order-r derivative along the requested direction
};

/// Evaluates the slab function with coefficients laid out as
/// space.column(i, j) at (t, x). `element` may give the host element; when
/// -1 the point is located on the mesh. Throws std::out_of_range if x is not
/// in an active element.
SpacetimeValue evaluate_spacetime(const Eigen::VectorXd& coeffs, const SlabSpace& space, double t, const Vec2& x,
                                  int element = -1, const Vec2& direction = Vec2::UnitX(), int order = 0);

/// Active element containing x, preferring `hint`; -1 if none.
int find_active_element(const SlabSpace& space, const Vec2& x, int hint = -1);

/// Nodal interpolant on the whole background space.
Eigen::VectorXd interpolate(const DofHandler& dofs, const std::function<double(const Vec2&)>& f);

/// Slab coefficients of a time-independent function: mode 0 gets the nodal
/// values on the active dofs, higher modes are zero.
Eigen::VectorXd interpolate_on_slab(const SlabSpace& space, const std::function<double(const Vec2&)>& f);

}  // namespace stcut
