#pragma once

#include <vector>

#include "stcut/mesh.hpp"

namespace stcut {

/// Closed Newton-Cotes rule on one time interval.
struct TimeQuadrature {
  std::vector<double> points;
  std::vector<double> weights;
  int precision = 0;  ///< polynomial degree integrated exactly

  int size() const { return static_cast<int>(points.size()); }
};

/// Trapezoid (2), Simpson (3) or five-point Boole rule (5) on [t0, t1].
/// Throws std::invalid_argument for any other point count.
TimeQuadrature newton_cotes(int num_points, double t0, double t1);

/// Smallest supported Newton-Cotes rule with enough precision for time
/// polynomials of degree q: Simpson for q = 1, five points for q = 2.
int newton_cotes_points_for(int q);

struct QuadraturePoint {
  Vec2 x;
  double weight;
};

/// Gauss-Legendre points on the segment [a, b], exact for polynomials of
/// the given degree along the segment (degree <= 13).
std::vector<QuadraturePoint> gauss_on_segment(const Vec2& a, const Vec2& b, int degree);

/// Reference rule on the unit interval [0, 1].
struct LineRule {
  std::vector<double> points;
  std::vector<double> weights;
};
const LineRule& gauss_legendre_unit(int degree);

/// Symmetric rule on the reference triangle (0,0), (1,0), (0,1); weights sum
/// to 1/2. Degrees 1, 2, 4 and 5 are the classical tabulated rules; other
/// degrees up to 10 use a collapsed Gauss product symmetrized over the six
/// vertex permutations.
struct TriangleRule {
  std::vector<Vec2> points;
  std::vector<double> weights;
};
const TriangleRule& reference_triangle_rule(int degree);

/// Rule mapped to the physical triangle. Throws std::invalid_argument for a
/// degenerate triangle or degree > 10.
std::vector<QuadraturePoint> gauss_on_triangle(const Vec2& a, const Vec2& b, const Vec2& c, int degree);

}  // namespace stcut
