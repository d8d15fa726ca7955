#include "stcut/surface_examples.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stcut {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::string to_string(Representation r) { return r == Representation::levelset ? "levelset" : "spline"; }

Representation parse_representation(const std::string& text) {
  if (text == "levelset") return Representation::levelset;
  if (text == "spline") return Representation::spline;
  throw std::invalid_argument("unknown interface representation '" + text + "'");
}

double ellipse_semi_axis(double t) { return 1.0 + 0.25 * std::sin(2.0 * kPi * t); }

VelocityField ellipse_velocity() {
  VelocityField v;
  v.value = [](double t, const Vec2& x) {
    const double c = 0.5 * kPi * std::cos(2.0 * kPi * t) / ellipse_semi_axis(t);
    return Vec2(c * x.x(), 0.0);
  };
  v.jacobian = [](double t, const Vec2&) {
    Mat2 J = Mat2::Zero();
    J(0, 0) = 0.5 * kPi * std::cos(2.0 * kPi * t) / ellipse_semi_axis(t);
    return J;
  };
  v.stationary = false;
  return v;
}

AnalyticLevelSet ellipse_level_set() {
  AnalyticLevelSet phi;
  phi.value = [](double t, const Vec2& x) {
    const double a = ellipse_semi_axis(t);
    return x.x() * x.x() / (a * a) + x.y() * x.y() - 1.0;
  };
  phi.gradient = [](double t, const Vec2& x) {
    const double a = ellipse_semi_axis(t);
    return Vec2(2.0 * x.x() / (a * a), 2.0 * x.y());
  };
  phi.hessian = [](double t, const Vec2&) {
    const double a = ellipse_semi_axis(t);
    Mat2 H = Mat2::Zero();
    H(0, 0) = 2.0 / (a * a);
    H(1, 1) = 2.0;
    return H;
  };
  return phi;
}

Box ellipse_box() { return {-1.5, -1.5, 1.5, 1.5}; }

ManufacturedSolution example1_solution() {
  ManufacturedSolution u;
  u.value = [](double t, const Vec2& x) {
    const double a = x.x(), b = x.y();
    return std::exp(-4.0 * t) * a * b + a * a * a * b * b;
  };
  u.time_derivative = [](double t, const Vec2& x) { return -4.0 * std::exp(-4.0 * t) * x.x() * x.y(); };
  u.gradient = [](double t, const Vec2& x) {
    const double e = std::exp(-4.0 * t), a = x.x(), b = x.y();
    return Vec2(e * b + 3.0 * a * a * b * b, e * a + 2.0 * a * a * a * b);
  };
  u.hessian = [](double t, const Vec2& x) {
    const double e = std::exp(-4.0 * t), a = x.x(), b = x.y();
    Mat2 H;
    H(0, 0) = 6.0 * a * b * b;
    H(0, 1) = H(1, 0) = e + 6.0 * a * a * b;
    H(1, 1) = 2.0 * a * a * a;
    return H;
  };
  return u;
}

ManufacturedSolution example2_solution() {
  ManufacturedSolution u;
  u.value = [](double t, const Vec2& x) { return std::exp(-4.0 * t) * x.x() * x.y(); };
  u.time_derivative = [](double t, const Vec2& x) { return -4.0 * std::exp(-4.0 * t) * x.x() * x.y(); };
  u.gradient = [](double t, const Vec2& x) {
    const double e = std::exp(-4.0 * t);
    return Vec2(e * x.y(), e * x.x());
  };
  u.hessian = [](double t, const Vec2&) {
    Mat2 H = Mat2::Zero();
    H(0, 1) = H(1, 0) = std::exp(-4.0 * t);
    return H;
  };
  return u;
}

SurfaceProblem ellipse_problem(const ManufacturedSolution& exact) {
  SurfaceProblem p;
  p.beta = ellipse_velocity();
  p.k_s = 1.0;
  p.f = manufactured_rhs(exact, p.beta, p.k_s, ellipse_level_set());
  p.u0 = [u = exact.value](const Vec2& x) { return u(0.0, x); };
  p.exact = exact;
  p.projection = [](double t, const Vec2& x) { return closest_point_ellipse(x, ellipse_semi_axis(t)); };
  return p;
}

double TrackerSettings::marker_spacing_for(double h) const { return marker_spacing * std::pow(h, marker_spacing_power); }

int TrackerSettings::samples_per_knot_for(double h) const {
  if (!(chord_length > 0.0)) return samples_per_knot;
  const double chord = chord_length * std::pow(h, chord_power);
  return std::max(samples_per_knot, static_cast<int>(std::ceil(marker_spacing_for(h) / chord)));
}

std::unique_ptr<InterfaceTracker> make_circle_tracker(const BackgroundMesh& mesh, const Vec2& center, double radius,
                                                      const TrackerSettings& settings) {
  if (settings.representation == Representation::levelset) {
    return std::make_unique<LevelSetTracker>(
        mesh, [center, radius](const Vec2& x) { return radius - (x - center).norm(); },
        LevelSetTrackerOptions{settings.redistance_every});
  }
  const double h = mesh.cell_width();
  const int count = std::max(8, static_cast<int>(std::ceil(2.0 * kPi * radius / settings.marker_spacing_for(h))));
  return std::make_unique<SplineTracker>(mesh, circle_markers(center, radius, count),
                                         SplineTrackerOptions{settings.samples_per_knot_for(h), settings.redistribute_every});
}

}  // namespace stcut
