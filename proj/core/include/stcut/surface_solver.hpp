#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stcut/interface_evolution.hpp"
#include "stcut/linalg.hpp"
#include "stcut/spacetime_spaces.hpp"

namespace stcut {

enum class StabilizationMode { combined_new, face_only_legacy };

std::string to_string(StabilizationMode mode);
/// Accepts "new", "combined_new", "legacy" and "face_only_legacy".
StabilizationMode parse_stabilization_mode(const std::string& text);

/// Face and interface normal-derivative penalties up to order p. Entry i-1
/// of each array belongs to derivative order i.
struct StabilizationConfig {
  StabilizationMode mode = StabilizationMode::combined_new;
  std::array<double, 3> c_face{};
  std::array<double, 3> c_interface{};

  int gamma(int order) const { return mode == StabilizationMode::combined_new ? 2 * order : 2 * order - 2; }
  /// c_i = base / i!; the legacy mode has no interface term.
  static StabilizationConfig make(StabilizationMode mode, double base);
  bool operator==(const StabilizationConfig&) const = default;
};

/// Closed-form ambient function with the derivatives needed for a
/// manufactured right-hand side.
struct ManufacturedSolution {
  std::function<double(double, const Vec2&)> value;
  std::function<double(double, const Vec2&)> time_derivative;
  std::function<Vec2(double, const Vec2&)> gradient;
  std::function<Mat2(double, const Vec2&)> hessian;
};

/// f = u_t + beta . grad u + (div beta - n^T grad(beta) n) u
///     - k_S (lap u - n^T hess(u) n - kappa n . grad u),  n = grad phi / |grad phi|.
std::function<double(double, const Vec2&)> manufactured_rhs(const ManufacturedSolution& u, const VelocityField& beta,
                                                            double k_s, const AnalyticLevelSet& phi);

struct SurfaceProblem {
  VelocityField beta;
  double k_s = 1.0;
  std::function<double(double, const Vec2&)> f;  ///< empty means zero
  std::function<double(const Vec2&)> u0;
  std::optional<ManufacturedSolution> exact;
  /// Closest point on the exact interface at time t (for error norms).
  std::function<Projection(double, const Vec2&)> projection;
};

struct SlabSystem {
  SpMat matrix;
  Eigen::VectorXd rhs;
};

/// The previous slab's solution, evaluated at its end time. A null space
/// means "use the initial condition".
struct PreviousTrace {
  const SlabSpace* space = nullptr;
  const Eigen::VectorXd* coeffs = nullptr;
};

/// Spatial building blocks of one slab, kept separately for tests.
struct SlabParts {
  std::vector<SpMat> mass;       ///< (u, v) on Gamma_h(t_m)
  std::vector<SpMat> operator_;  ///< transport, diffusion and interface penalty at t_m
  SpMat face;                    ///< face penalty (time independent)
  std::vector<Eigen::VectorXd> load;  ///< (f, v) on Gamma_h(t_m)
  Eigen::VectorXd jump;          ///< (u_h(t_{n-1}^-), v) on Gamma_h(t_{n-1})
};

SlabParts assemble_slab_parts(const SurfaceProblem& problem, const SlabSpace& space, const StabilizationConfig& stab,
                              const PreviousTrace& previous);

SlabSystem assemble_slab(const SurfaceProblem& problem, const SlabSpace& space, const StabilizationConfig& stab,
                         const PreviousTrace& previous);

/// Face penalty sum_F sum_i c_i h^gamma ([d_n^i u], [d_n^i v])_F for the
/// given faces, in the space's local spatial numbering.
SpMat assemble_face_penalty(const SlabSpace& space, const std::vector<int>& faces, const std::array<double, 3>& c,
                            const std::function<int(int)>& gamma, double h);

/// Sparse direct solve. Throws SingularMatrix with the slab index and the
/// active-set size on failure.
SolveResult solve_slab(const SlabSystem& system, int slab = 0, int active_elements = 0);

struct MarchOptions {
  int p = 1;
  int q = 1;
  double k = 0.0;        ///< target step; the number of slabs is round(T / k)
  double T = 0.0;
  StabilizationConfig stab;
  bool compute_condition = false;
  int condition_slab = 0;          ///< slab whose matrix is measured; -1 for the last
  int condition_dense_limit = 4000;
  bool record_mass = false;        ///< integral of u_h over Gamma_h(t_n) after each slab
};

struct SlabRecord {
  double t = 0.0;
  int dofs = 0;
  double mass = 0.0;
  double relative_residual = 0.0;
};

struct MarchResult {
  SlabSpace last_space;
  Eigen::VectorXd last_coeffs;
  InterfaceSnapshot final_snapshot;
  double condition_number = 0.0;
  int num_slabs = 0;
  int max_dofs = 0;
  double max_relative_residual = 0.0;
  std::vector<SlabRecord> history;
};

/// Marches slab by slab from t = 0 to T. The tracker must hold the interface
/// at t = 0 and is advanced by k / (n_m - 1) between quadrature times.
MarchResult march(const SurfaceProblem& problem, InterfaceTracker& tracker, const DofHandler& dofs,
                  const MarchOptions& options);

struct ErrorNorms {
  double l2 = 0.0;
  double h1 = 0.0;  ///< full norm: sqrt(L2^2 + gradient part^2)
};

/// Errors at the end of the last slab on its final snapshot, against the
/// closest-point extension of the exact solution.
ErrorNorms error_norms(const MarchResult& result, const SurfaceProblem& problem);

/// Integral of the slab function at time t over the snapshot.
double surface_integral(const Eigen::VectorXd& coeffs, const SlabSpace& space, const InterfaceSnapshot& snapshot,
                        double t);

}  // namespace stcut
