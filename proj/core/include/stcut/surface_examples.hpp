#pragma once

#include <memory>
#include <string>

#include "stcut/surface_solver.hpp"

namespace stcut {

enum class Representation { levelset, spline };

std::string to_string(Representation r);
Representation parse_representation(const std::string& text);

/// Oscillating ellipse x1^2 / a(t)^2 + x2^2 = 1, a(t) = 1 + 0.25 sin(2 pi t),
/// carried by beta = (pi / 2) cos(2 pi t) / a(t) (x1, 0).
double ellipse_semi_axis(double t);
VelocityField ellipse_velocity();
AnalyticLevelSet ellipse_level_set();
Box ellipse_box();  ///< [-1.5, 1.5]^2

/// exp(-4t) x1 x2 + x1^3 x2^2.
ManufacturedSolution example1_solution();
/// exp(-4t) x1 x2.
ManufacturedSolution example2_solution();

/// Manufactured problem on the oscillating ellipse with k_S = 1.
SurfaceProblem ellipse_problem(const ManufacturedSolution& exact);

/// Spline resolution is given as coefficient * h^power with h the cell width,
/// so it can either follow the mesh or stay fixed (power 0). A positive chord
/// length raises samples_per_knot until no chord is longer than it.
struct TrackerSettings {
  Representation representation = Representation::spline;
  double marker_spacing = 0.5;
  double marker_spacing_power = 1.0;
  int samples_per_knot = 8;
  double chord_length = 0.0;
  double chord_power = 0.0;
  int redistribute_every = 1;
  int redistance_every = 1;

  double marker_spacing_for(double h) const;
  int samples_per_knot_for(double h) const;
  bool operator==(const TrackerSettings&) const = default;
};

/// Tracker for the unit circle at t = 0 (the ellipse's initial state).
std::unique_ptr<InterfaceTracker> make_circle_tracker(const BackgroundMesh& mesh, const Vec2& center, double radius,
                                                      const TrackerSettings& settings);

}  // namespace stcut
