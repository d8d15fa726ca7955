#pragma once

#include <array>
#include <functional>
#include <vector>

#include "stcut/interface_evolution.hpp"
#include "stcut/linalg.hpp"
#include "stcut/spacetime_spaces.hpp"

namespace stcut {

/// Soluble surfactant: bulk concentration u_B in the outer phase, surface
/// concentration u_S on the interface, Langmuir exchange
/// alpha u_B (1 - u_S) - Bi u_S. Linear elements in space and time.
struct CoupledParameters {
  double Pe = 100.0;
  double Pe_s = 100.0;
  double Da = 1.0;
  double Bi = 1.0;
  double alpha = 1.0;
  double tau_b = 1e-2;
  double tau_s = 1e-2;
  bool operator==(const CoupledParameters&) const = default;
};

struct CoupledProblem {
  VelocityField beta;
  CoupledParameters params;
  std::function<double(const Vec2&)> u_b0;
  std::function<double(const Vec2&)> u_s0;
  /// Initial level set, positive inside the interface.
  std::function<double(const Vec2&)> phi0;
  bool use_multiplier = true;   ///< bordered system enforcing total mass
  bool drop_quadratic = false;  ///< omit alpha u_B u_S (linear model)
};

/// (-(1 + cos pi x) sin pi y, (1 + cos pi y) sin pi x) / 2.
VelocityField vortex_velocity();

/// Circle of radius 0.3 centred at (0.1, 0) in [-1, 1]^2.
struct VortexSetup {
  static constexpr double radius = 0.3;
  static Vec2 center() { return {0.1, 0.0}; }
  static Box box() { return {-1.0, -1.0, 1.0, 1.0}; }
};

/// 0.5 (1 - x^2)^2 away from the drop, blended to zero over r0 <= r <= 1.5 r0.
double vortex_bulk_initial(const Vec2& x);

/// Vortex problem with u_S = 0 initially.
CoupledProblem vortex_problem(const CoupledParameters& params = {});

/// One triangle of the outer phase inside a background element.
struct BulkPiece {
  int element = -1;
  std::array<Vec2, 3> triangle;
};

/// Omega_{h,1} at one time: whole outer elements plus the outer parts of cut
/// elements. Requires a snapshot carrying its level-set field.
std::vector<BulkPiece> outer_region(const InterfaceSnapshot& snapshot, const BackgroundMesh& mesh);

/// Geometry and spaces of one slab. Quadrature is Simpson.
struct CoupledSlab {
  SlabSpace surface;
  SlabSpace bulk;
  std::vector<std::vector<BulkPiece>> regions;  ///< one per quadrature time

  int num_bulk() const { return bulk.num_spatial(); }
  int num_surface() const { return surface.num_spatial(); }
  /// Unknowns ordered (B mode 0, S mode 0, B mode 1, S mode 1[, lambda]).
  int bulk_index(int local, int mode) const { return mode * (num_bulk() + num_surface()) + local; }
  int surface_index(int local, int mode) const { return mode * (num_bulk() + num_surface()) + num_bulk() + local; }
  int multiplier_index() const { return 2 * (num_bulk() + num_surface()); }
};

CoupledSlab build_coupled_slab(const DofHandler& dofs, std::vector<InterfaceSnapshot> snapshots,
                               const TimeQuadrature& quadrature, int slab = 0);

/// Coefficients in SlabSpace column layout plus the multiplier.
struct CoupledState {
  Eigen::VectorXd bulk;
  Eigen::VectorXd surface;
  double lambda = 0.0;
};

Eigen::VectorXd pack(const CoupledSlab& slab, const CoupledState& state, bool with_multiplier);
CoupledState unpack(const CoupledSlab& slab, const Eigen::VectorXd& x, bool with_multiplier);

/// Previous slab at its end time; null means the initial data.
struct CoupledTrace {
  const CoupledSlab* slab = nullptr;
  const CoupledState* state = nullptr;
};

/// Residual F and Jacobian DF of one slab. The linear part is assembled once
/// at construction.
class CoupledSlabSystem {
 public:
  CoupledSlabSystem(const CoupledProblem& problem, const CoupledSlab& slab, const CoupledTrace& previous,
                    double total_mass);

  int size() const { return static_cast<int>(linear_.rows()); }
  bool bordered() const { return problem_->use_multiplier; }
  Eigen::VectorXd residual(const Eigen::VectorXd& x) const;
  SpMat jacobian(const Eigen::VectorXd& x) const;
  /// Previous trace held constant in time; dofs outside the previous active
  /// mesh start at zero.
  Eigen::VectorXd initial_guess() const;

  const SpMat& linear_part() const { return linear_; }
  /// (1, v_B) at t_n + Da (1, v_S) at t_n, for every unknown but lambda.
  const Eigen::VectorXd& constraint() const { return constraint_; }

 private:
  const CoupledProblem* problem_;
  const CoupledSlab* slab_;
  CoupledTrace previous_;
  SpMat linear_;
  Eigen::VectorXd rhs_;
  Eigen::VectorXd constraint_;
};

struct NewtonOptions {
  double tol = 1e-10;  ///< on the Euclidean norm of the update
  int max_iterations = 25;
};

struct NewtonResult {
  Eigen::VectorXd x;
  int iterations = 0;  ///< updates larger than tol
  std::vector<double> update_norms;
  SpMat jacobian;  ///< at the converged state
};

class NewtonFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws NewtonFailure with the update history after max_iterations.
NewtonResult newton_solve(const CoupledSlabSystem& system, Eigen::VectorXd x0, const NewtonOptions& options = {});

/// int_{Omega_h1} u_B + Da int_{Gamma_h} u_S for the slab function at its end time.
double total_mass(const CoupledSlab& slab, const CoupledState& state, double Da);

/// Same quantity for the initial data; each bulk piece is split 4^levels times.
double initial_total_mass(const CoupledProblem& problem, const std::vector<BulkPiece>& region,
                          const InterfaceSnapshot& snapshot, int levels = 3);

struct CoupledOptions {
  double k = 0.0;
  double T = 0.0;
  NewtonOptions newton;
  bool compute_condition = true;
  /// Every step needs one estimate, so the iterative estimator is the default.
  int condition_dense_limit = 0;
  std::vector<double> snapshot_times;    ///< keep the fields at these slab end times
  std::vector<double> checkpoint_times;  ///< keep slab and state at these slab end times
  int redistance_every = 1;
};

struct CoupledStep {
  int step = 0;
  double t = 0.0;
  double mass = 0.0;
  double relative_mass_error = 0.0;
  int newton_iterations = 0;
  std::vector<double> update_norms;
  double condition_number = 0.0;
  int unknowns = 0;
};

/// Point clouds of the fields at one time: bulk values at the active vertices
/// in the outer phase, surface values at segment midpoints.
struct FieldSnapshot {
  double t = 0.0;
  std::vector<std::array<double, 3>> bulk;
  std::vector<std::array<double, 3>> surface;
};

struct CoupledCheckpoint {
  double t = 0.0;
  CoupledSlab slab;
  CoupledState state;
};

struct CoupledResult {
  double initial_mass = 0.0;
  std::vector<CoupledStep> steps;
  std::vector<FieldSnapshot> fields;
  std::vector<CoupledCheckpoint> checkpoints;
  CoupledSlab last_slab;
  CoupledState last_state;
};

/// Level-set tracking with redistancing, Simpson rule, one Newton solve per
/// slab. `dofs` must be linear and outlive the result.
CoupledResult march_coupled(const CoupledProblem& problem, const DofHandler& dofs, const CoupledOptions& options);

FieldSnapshot field_snapshot(const CoupledSlab& slab, const CoupledState& state);

struct SelfConvergence {
  double bulk = 0.0;     ///< ||u_B,h - u_B,2h|| on Omega_h1 of the fine run
  double surface = 0.0;  ///< ||u_S,h - u_S,2h|| on Gamma_h of the fine run
};

/// L2 differences at the common end time, integrated on the fine geometry.
/// Coarse values at points outside the coarse active mesh are extrapolated
/// from the nearest active element.
SelfConvergence self_convergence(const CoupledResult& fine, const CoupledResult& coarse);
SelfConvergence self_convergence(const CoupledCheckpoint& fine, const CoupledCheckpoint& coarse);

}  // namespace stcut
