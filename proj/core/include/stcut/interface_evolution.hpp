#pragma once

#include <functional>
#include <memory>
#include <optional>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "stcut/interface_geometry.hpp"

namespace stcut {

/// Velocity beta(t, x) with its spatial Jacobian, J(i, j) = d beta_i / d x_j.
struct VelocityField {
  std::function<Vec2(double, const Vec2&)> value;
  std::function<Mat2(double, const Vec2&)> jacobian;
  bool stationary = false;  ///< value does not depend on t

  double divergence(double t, const Vec2& x) const { return jacobian(t, x).trace(); }
  /// div_Gamma beta = div beta - n^T (grad beta) n.
  double surface_divergence(double t, const Vec2& x, const Vec2& n) const {
    const Mat2 J = jacobian(t, x);
    return J.trace() - n.dot(J * n);
  }
};

VelocityField zero_velocity();
VelocityField constant_velocity(const Vec2& c);
/// Rigid rotation (-y, x) about the origin.
VelocityField rotation_velocity();

/// Crank-Nicolson / streamline-diffusion step for the level-set function on
/// the refined mesh. The factorization is reused while beta is stationary and
/// k is unchanged.
class LevelSetAdvector {
 public:
  LevelSetField step(const LevelSetField& phi, const VelocityField& beta, double t_prev, double k);

 private:
  Eigen::SparseMatrix<double> lhs_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  const RefinedMesh* cached_mesh_ = nullptr;
  double cached_k_ = 0.0;
  bool cached_ = false;
};

LevelSetField advect_levelset_cn_supg(const LevelSetField& phi, const VelocityField& beta, double t_prev, double k);

/// Signed distance of every refined vertex to the zero-contour polyline,
/// keeping the old sign. Vertices within `keep_layers` rings of the
/// sign-changing triangles instead keep their values divided by the mean
/// contour gradient, so the contour itself does not move. Throws
/// InterfaceLost for an empty contour.
LevelSetField redistance_geometric(const LevelSetField& phi, int keep_layers = 1);

/// One RK4 step of dx/dt = beta(t, x) for every marker, then refit. If two
/// markers come closer than 1e-3 h_alpha the result is redistributed.
SplineInterface advect_markers(const SplineInterface& spline, const VelocityField& beta, double t, double k);

/// M markers at equal arclength, the first one kept in place.
SplineInterface redistribute_equal_arclength(const SplineInterface& spline, int M);

/// Owns the evolving interface and hands out snapshots.
class InterfaceTracker {
 public:
  virtual ~InterfaceTracker() = default;
  /// Moves the interface from t to t + dt.
  virtual void advance(const VelocityField& beta, double t, double dt) = 0;
  virtual InterfaceSnapshot snapshot(double t) const = 0;
  /// Current level-set field if this tracker has one.
  virtual std::shared_ptr<const LevelSetField> level_set() const { return nullptr; }
};

struct LevelSetTrackerOptions {
  int redistance_every = 1;  ///< 0 disables redistancing
  int keep_layers = 1;       ///< see redistance_geometric
};

class LevelSetTracker final : public InterfaceTracker {
 public:
  LevelSetTracker(const BackgroundMesh& mesh, const std::function<double(const Vec2&)>& phi0,
                  LevelSetTrackerOptions options = {});

  void advance(const VelocityField& beta, double t, double dt) override;
  InterfaceSnapshot snapshot(double t) const override;
  std::shared_ptr<const LevelSetField> level_set() const override { return field_; }
  std::shared_ptr<const RefinedMesh> refined() const { return refined_; }

 private:
  const BackgroundMesh* mesh_;
  std::shared_ptr<const RefinedMesh> refined_;
  std::shared_ptr<const LevelSetField> field_;
  LevelSetAdvector advector_;
  LevelSetTrackerOptions options_;
  int steps_ = 0;
};

struct SplineTrackerOptions {
  int samples_per_knot = 8;
  int redistribute_every = 1;  ///< 0 disables redistribution
};

class SplineTracker final : public InterfaceTracker {
 public:
  SplineTracker(const BackgroundMesh& mesh, std::vector<Vec2> markers, SplineTrackerOptions options = {});

  void advance(const VelocityField& beta, double t, double dt) override;
  InterfaceSnapshot snapshot(double t) const override;
  const SplineInterface& spline() const { return spline_; }

 private:
  const BackgroundMesh* mesh_;
  SplineInterface spline_;
  SplineTrackerOptions options_;
  int steps_ = 0;
};

/// A fixed interface; advance() is a no-op.
class StaticTracker final : public InterfaceTracker {
 public:
  explicit StaticTracker(InterfaceSnapshot snapshot) : snapshot_(std::move(snapshot)) {}
  void advance(const VelocityField&, double, double) override {}
  InterfaceSnapshot snapshot(double t) const override {
    InterfaceSnapshot s = snapshot_;
    s.t = t;
    return s;
  }
  std::shared_ptr<const LevelSetField> level_set() const override { return snapshot_.level_set; }

 private:
  InterfaceSnapshot snapshot_;
};

/// Markers on the circle |x - c| = r, counterclockwise, starting at angle 0.
std::vector<Vec2> circle_markers(const Vec2& center, double radius, int count);

}  // namespace stcut
