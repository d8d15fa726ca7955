#pragma once

#include <array>
#include <span>
#include <vector>

#include "stcut/mesh.hpp"

namespace stcut {

/// Bivariate polynomial of total degree <= 3 in reference coordinates,
/// stored densely as coefficients of xi^a eta^b.
class Poly2 {
 public:
  static constexpr int kMaxDegree = 3;

  Poly2() { coeffs_.fill(0.0); }
  static Poly2 constant(double c);
  static Poly2 monomial(int a, int b, double c = 1.0);

  double& operator()(int a, int b) { return coeffs_[a * 4 + b]; }
  double operator()(int a, int b) const { return coeffs_[a * 4 + b]; }

  Poly2 operator+(const Poly2& o) const;
  Poly2 operator*(const Poly2& o) const;  ///< terms above degree 3 must vanish
  Poly2 operator*(double s) const;

  Poly2 dxi() const;
  Poly2 deta() const;
  double operator()(const Vec2& xi) const;

 private:
  std::array<double, 16> coeffs_;
};

/// Nodal Lagrange basis of degree p in {1, 2, 3} on the reference triangle
/// with equispaced nodes. Local node order: the three vertices, then p - 1
/// nodes on each edge (0->1, 1->2, 2->0), then the interior node for p = 3.
class LagrangeBasis {
 public:
  explicit LagrangeBasis(int degree);

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<Vec2>& nodes() const { return nodes_; }
  const Poly2& function(int i) const { return polys_[i]; }

  void values(const Vec2& xi, std::span<double> out) const;
  void gradients(const Vec2& xi, std::span<Vec2> out) const;
  /// Order-r derivative along the reference direction e, i.e. the order-r
  /// derivative tensor contracted r times with e. r = 0 gives values.
  void directional(const Vec2& xi, const Vec2& e, int order, std::span<double> out) const;

 private:
  int degree_;
  std::vector<Vec2> nodes_;
  std::vector<Poly2> polys_;
  // partials_[r][a][i]: d^r / dxi^a deta^(r-a) of basis i.
  std::array<std::vector<std::vector<Poly2>>, 4> partials_;
};

/// Affine map from the reference triangle onto a mesh triangle.
struct AffineMap {
  Vec2 origin;
  Mat2 jacobian;
  Mat2 inverse;

  static AffineMap of(const BackgroundMesh& mesh, int t);
  Vec2 to_reference(const Vec2& x) const { return inverse * (x - origin); }
  Vec2 to_physical(const Vec2& xi) const { return origin + jacobian * xi; }
  /// Physical gradient from a reference gradient.
  Vec2 physical_gradient(const Vec2& ref_grad) const { return inverse.transpose() * ref_grad; }
  /// Reference direction whose derivatives equal physical derivatives along d.
  Vec2 reference_direction(const Vec2& d) const { return inverse * d; }
};

/// Global numbering of the continuous P_p space on the whole background mesh.
class DofHandler {
 public:
  DofHandler(const BackgroundMesh& mesh, int degree);

  int degree() const { return basis_.degree(); }
  int num_dofs() const { return static_cast<int>(points_.size()); }
  int dofs_per_element() const { return basis_.size(); }
  std::span<const int> element_dofs(int t) const {
    return {element_dofs_.data() + static_cast<std::size_t>(t) * basis_.size(), static_cast<std::size_t>(basis_.size())};
  }
  const Vec2& point(int dof) const { return points_[dof]; }
  const LagrangeBasis& basis() const { return basis_; }
  const BackgroundMesh& mesh() const { return *mesh_; }

 private:
  const BackgroundMesh* mesh_;
  LagrangeBasis basis_;
  std::vector<int> element_dofs_;
  std::vector<Vec2> points_;
};

/// Monomial time basis ((t - t0) / k)^j, j = 0..q, on one slab.
struct TimeBasis {
  int degree = 1;
  double t0 = 0.0;
  double k = 1.0;

  double s(double t) const { return (t - t0) / k; }
  /// Values of all q + 1 modes at time t.
  std::array<double, 3> values(double t) const;
  /// Time derivatives of all modes at time t.
  std::array<double, 3> derivatives(double t) const;
};

}  // namespace stcut
