#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "stcut/mesh.hpp"

namespace stcut {

/// Thrown when a snapshot would contain no interface at all.
class InterfaceLost : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Closed-form level-set function phi(t, x) with its spatial derivatives.
struct AnalyticLevelSet {
  std::function<double(double, const Vec2&)> value;
  std::function<Vec2(double, const Vec2&)> gradient;
  std::function<Mat2(double, const Vec2&)> hessian;
};

/// Curvature div(grad phi / |grad phi|) from closed-form partials.
/// Throws std::domain_error where |grad phi| <= 1e-10.
double levelset_curvature(const AnalyticLevelSet& phi, const Vec2& x, double t);

/// Continuous piecewise-linear field on the once-refined mesh, positive in
/// the inner phase.
struct LevelSetField {
  std::shared_ptr<const RefinedMesh> mesh;
  Eigen::VectorXd values;

  /// Values with |phi| below the snap tolerance replaced by +snap.
  double effective(int vertex) const;
  double snap_tolerance() const;
};

LevelSetField interpolate_level_set(std::shared_ptr<const RefinedMesh> mesh, const std::function<double(const Vec2&)>& phi);

/// One straight piece of the discrete interface, lying in a single
/// background triangle. The inner phase is on the left of a -> b and the
/// normal points into it.
struct InterfaceSegment {
  Vec2 a;
  Vec2 b;
  Vec2 normal;
  int host = -1;

  double length() const { return (b - a).norm(); }
  Vec2 midpoint() const { return 0.5 * (a + b); }
};

enum class ElementLabel : std::int8_t { outer = -1, cut = 0, inner = 1 };

/// The discrete interface at one instant.
struct InterfaceSnapshot {
  double t = 0.0;
  std::vector<InterfaceSegment> segments;
  /// +1 for background vertices in the inner phase, -1 otherwise.
  std::vector<std::int8_t> vertex_side;
  /// Same test at each background triangle centroid.
  std::vector<std::int8_t> centroid_side;
  /// Present for level-set snapshots; required by cut-cell decomposition.
  std::shared_ptr<const LevelSetField> level_set;

  double length() const;
  /// Signed area enclosed by the polyline (shoelace).
  double enclosed_area() const;
};

/// Marching-triangles extraction on the refined mesh. Each refined triangle
/// with mixed signs contributes one segment; hosts are parent triangles.
/// Throws InterfaceLost if no triangle changes sign.
InterfaceSnapshot extract_zero_contour(const BackgroundMesh& mesh, std::shared_ptr<const LevelSetField> field, double t);

/// Zero-contour pieces of the field without orientation or hosts, for
/// callers that do not need a full snapshot.
std::vector<std::array<Vec2, 2>> contour_pieces(const LevelSetField& field);

/// Cut if the triangle hosts a segment, else the centroid side.
std::vector<ElementLabel> classify_elements(const InterfaceSnapshot& snapshot, const BackgroundMesh& mesh);

/// Sub-triangles of one background triangle on each side of the
/// piecewise-linear zero contour.
struct CutDecomposition {
  std::vector<std::array<Vec2, 3>> outer;
  std::vector<std::array<Vec2, 3>> inner;

  double outer_area() const;
  double inner_area() const;
};

CutDecomposition decompose_cut_cell(const LevelSetField& field, int parent);

/// Periodic C2 cubic spline through closed-curve markers, parametrized by
/// cumulative chord length. Marker l sits at knots[l]; knots[M] closes the
/// curve back onto marker 0.
struct SplineInterface {
  std::vector<Vec2> markers;
  std::vector<double> knots;
  std::vector<Vec2> second_derivatives;  ///< at each marker
  double h_alpha = 0.0;                  ///< mean marker spacing

  int size() const { return static_cast<int>(markers.size()); }
  double period() const { return knots.back(); }
  int interval(double alpha) const;
  double wrap(double alpha) const;

  Vec2 position(double alpha) const;
  Vec2 derivative(double alpha) const;
  Vec2 second_derivative(double alpha) const;
  /// (-X2', X1') / |X'|; points into the enclosed region for a
  /// counterclockwise curve.
  Vec2 normal(double alpha) const;

  /// Arclength between two parameter values (alpha0 <= alpha1 within one
  /// period) by adaptive Gauss-Kronrod quadrature.
  double arclength(double alpha0, double alpha1, double rel_tol = 1e-10) const;
  double total_length(double rel_tol = 1e-10) const;
};

/// Throws std::invalid_argument for fewer than 4 markers or coincident
/// neighbours.
SplineInterface fit_periodic_spline(std::vector<Vec2> markers);

/// Samples the spline at `samples_per_knot` chords per knot interval and
/// clips the chords on mesh lines so each piece has a single host.
InterfaceSnapshot spline_to_snapshot(const SplineInterface& spline, const BackgroundMesh& mesh, double t,
                                     int samples_per_knot = 8);

/// Inside/outside test for a closed polyline via bucketed ray casting.
class PolygonSideOracle {
 public:
  explicit PolygonSideOracle(const std::vector<Vec2>& closed_polyline);
  bool inside(const Vec2& x) const;

 private:
  std::vector<Vec2> pts_;
  double y_min_ = 0.0;
  double y_max_ = 0.0;
  double bin_height_ = 1.0;
  std::vector<std::vector<int>> bins_;
};

/// Closest point on the ellipse (a cos s, sin s) and the unit normal of
/// x1^2 / a^2 + x2^2 - 1 there (pointing outward).
struct Projection {
  Vec2 point;
  Vec2 normal;
  double parameter = 0.0;
};
Projection closest_point_ellipse(const Vec2& x, double a);

/// Closest point on a circle; normal points outward.
Projection closest_point_circle(const Vec2& x, const Vec2& center, double radius);

/// CSV export: t, x1_start, y1_start, x1_end, y1_end, nx, ny, host_element.
void write_snapshot_csv(std::ostream& out, const InterfaceSnapshot& snapshot, bool header = true);

}  // namespace stcut
