#include "stcut/bulk_surface_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "fe_kernel.hpp"
#include "stcut/surface_solver.hpp"

namespace stcut {

namespace {

constexpr double kPi = std::numbers::pi;
using Triplets = std::vector<Eigen::Triplet<double>>;

// Linear elements throughout: mass-type integrands are quadratic.
constexpr int kBulkDegree = 2;
constexpr int kSegmentDegree = 4;
constexpr int kDataDegree = 6;

void local_indices(const SlabSpace& space, std::span<const int> dofs, std::array<int, 3>& out) {
  for (std::size_t a = 0; a < 3; ++a) {
    out[a] = space.global_to_local[dofs[a]];
    if (out[a] < 0) throw std::logic_error("coupled assembly touched an inactive dof");
  }
}

// Value of the slab function at (t, x) from the polynomial on element K; x
// may lie outside K (extrapolation).
double value_on_element(const Eigen::VectorXd& coeffs, const SlabSpace& space, double t, const Vec2& x, int K) {
  detail::ElementEvaluator ev(*space.dofs);
  ev.bind(K);
  ev.at(x);
  const auto tv = space.time_basis().values(t);
  double u = 0.0;
  for (int a = 0; a < ev.n; ++a) {
    const int local = space.global_to_local[ev.dofs[a]];
    if (local < 0) continue;
    for (int j = 0; j <= space.q; ++j) u += coeffs[space.column(local, j)] * tv[j] * ev.phi[a];
  }
  return u;
}

// Active element containing x, or the active element with the nearest
// centroid in the surrounding cells.
int nearest_active_element(const SlabSpace& space, const Vec2& x) {
  const int K = find_active_element(space, x);
  if (K >= 0) return K;
  const BackgroundMesh& mesh = space.mesh();
  const UniformGrid& g = mesh.grid;
  const int i0 = static_cast<int>(std::floor((x.x() - g.box.x0) / g.dx()));
  const int j0 = static_cast<int>(std::floor((x.y() - g.box.y0) / g.dy()));
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int r = 1; r <= 3 && best < 0; ++r)
    for (int j = j0 - r; j <= j0 + r; ++j)
      for (int i = i0 - r; i <= i0 + r; ++i) {
        if (i < 0 || j < 0 || i >= g.n || j >= g.n) continue;
        for (int c : mesh.cell_triangles[static_cast<std::size_t>(j) * g.n + i]) {
          if (!space.is_active(c)) continue;
          const double d = (mesh.centroid(c) - x).squaredNorm();
          if (d < best_d) {
            best_d = d;
            best = c;
          }
        }
      }
  if (best < 0) throw std::out_of_range("no active element near the evaluation point");
  return best;
}

void subdivide(const std::array<Vec2, 3>& T, int levels, std::vector<std::array<Vec2, 3>>& out) {
  if (levels == 0) {
    out.push_back(T);
    return;
  }
  const Vec2 m01 = 0.5 * (T[0] + T[1]), m12 = 0.5 * (T[1] + T[2]), m20 = 0.5 * (T[2] + T[0]);
  subdivide({T[0], m01, m20}, levels - 1, out);
  subdivide({m01, T[1], m12}, levels - 1, out);
  subdivide({m20, m12, T[2]}, levels - 1, out);
  subdivide({m01, m12, m20}, levels - 1, out);
}

}  // namespace

VelocityField vortex_velocity() {
  VelocityField v;
  v.value = [](double, const Vec2& x) {
    const double px = kPi * x.x(), py = kPi * x.y();
    return Vec2(-0.5 * (1.0 + std::cos(px)) * std::sin(py), 0.5 * (1.0 + std::cos(py)) * std::sin(px));
  };
  v.jacobian = [](double, const Vec2& x) {
    const double px = kPi * x.x(), py = kPi * x.y();
    Mat2 J;
    J(0, 0) = 0.5 * kPi * std::sin(px) * std::sin(py);
    J(0, 1) = -0.5 * kPi * (1.0 + std::cos(px)) * std::cos(py);
    J(1, 0) = 0.5 * kPi * (1.0 + std::cos(py)) * std::cos(px);
    J(1, 1) = -0.5 * kPi * std::sin(py) * std::sin(px);
    return J;
  };
  v.stationary = true;
  return v;
}

double vortex_bulk_initial(const Vec2& x) {
  const double r0 = VortexSetup::radius;
  const double r = (x - VortexSetup::center()).norm();
  const double base = 0.5 * std::pow(1.0 - x.x() * x.x(), 2);
  if (r > 1.5 * r0) return base;
  if (r < r0) return 0.0;
  return base * 0.5 * (1.0 - std::cos((r - r0) * kPi / (0.5 * r0)));
}

CoupledProblem vortex_problem(const CoupledParameters& params) {
  CoupledProblem p;
  p.beta = vortex_velocity();
  p.params = params;
  p.u_b0 = vortex_bulk_initial;
  p.u_s0 = [](const Vec2&) { return 0.0; };
  p.phi0 = [](const Vec2& x) { return VortexSetup::radius - (x - VortexSetup::center()).norm(); };
  return p;
}

std::vector<BulkPiece> outer_region(const InterfaceSnapshot& snapshot, const BackgroundMesh& mesh) {
  const auto labels = classify_elements(snapshot, mesh);
  std::vector<BulkPiece> pieces;
  for (int K = 0; K < mesh.num_triangles(); ++K) {
    if (labels[K] == ElementLabel::outer) {
      pieces.push_back({K, mesh.corners(K)});
    } else if (labels[K] == ElementLabel::cut) {
      if (!snapshot.level_set) throw std::invalid_argument("outer_region: snapshot has no level-set field");
      for (const auto& T : decompose_cut_cell(*snapshot.level_set, K).outer) pieces.push_back({K, T});
    }
  }
  return pieces;
}

CoupledSlab build_coupled_slab(const DofHandler& dofs, std::vector<InterfaceSnapshot> snapshots,
                               const TimeQuadrature& quadrature, int slab) {
  if (dofs.degree() != 1) throw std::invalid_argument("coupled problem uses linear elements");
  if (quadrature.size() != 3) throw std::invalid_argument("coupled problem uses Simpson's rule");
  CoupledSlab s;
  for (const auto& snap : snapshots) s.regions.push_back(outer_region(snap, dofs.mesh()));
  s.surface = build_active_surface_mesh(dofs, snapshots, quadrature, 1, slab);
  s.bulk = build_active_bulk_mesh(dofs, std::move(snapshots), quadrature, 1, s.surface, slab);
  return s;
}

Eigen::VectorXd pack(const CoupledSlab& slab, const CoupledState& state, bool with_multiplier) {
  Eigen::VectorXd x(slab.multiplier_index() + (with_multiplier ? 1 : 0));
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < slab.num_bulk(); ++i) x[slab.bulk_index(i, j)] = state.bulk[slab.bulk.column(i, j)];
    for (int i = 0; i < slab.num_surface(); ++i)
      x[slab.surface_index(i, j)] = state.surface[slab.surface.column(i, j)];
  }
  if (with_multiplier) x[slab.multiplier_index()] = state.lambda;
  return x;
}

CoupledState unpack(const CoupledSlab& slab, const Eigen::VectorXd& x, bool with_multiplier) {
  CoupledState s;
  s.bulk.resize(slab.bulk.num_columns());
  s.surface.resize(slab.surface.num_columns());
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < slab.num_bulk(); ++i) s.bulk[slab.bulk.column(i, j)] = x[slab.bulk_index(i, j)];
    for (int i = 0; i < slab.num_surface(); ++i) s.surface[slab.surface.column(i, j)] = x[slab.surface_index(i, j)];
  }
  s.lambda = with_multiplier ? x[slab.multiplier_index()] : 0.0;
  return s;
}

CoupledSlabSystem::CoupledSlabSystem(const CoupledProblem& problem, const CoupledSlab& slab,
                                     const CoupledTrace& previous, double total_mass)
    : problem_(&problem), slab_(&slab), previous_(previous) {
  const CoupledParameters& P = problem.params;
  const SlabSpace& B = slab.bulk;
  const SlabSpace& S = slab.surface;
  const DofHandler& dofs = *B.dofs;
  const double h = B.mesh().cell_width();
  const TimeBasis tb = B.time_basis();
  const TimeQuadrature& quad = B.quadrature;
  const double wb = P.alpha / P.Da;  // bulk equation weight
  const double ws = P.Bi;            // surface equation weight
  const int n = slab.multiplier_index() + (problem.use_multiplier ? 1 : 0);

  Triplets trip;
  rhs_ = Eigen::VectorXd::Zero(n);
  detail::ElementEvaluator ev(dofs);
  std::array<int, 3> ib{}, is{};
  Eigen::Matrix3d M, A;

  // Adds a local 3x3 matrix to every (test mode, trial mode) block with
  // coefficient c[b][j].
  auto scatter = [&](const Eigen::Matrix3d& L, const std::array<int, 3>& rows, bool rows_bulk,
                     const std::array<int, 3>& cols, bool cols_bulk, const double (&c)[2][2]) {
    for (int b = 0; b < 2; ++b)
      for (int j = 0; j < 2; ++j) {
        if (c[b][j] == 0.0) continue;
        for (int a = 0; a < 3; ++a) {
          const int r = rows_bulk ? slab.bulk_index(rows[a], b) : slab.surface_index(rows[a], b);
          for (int e = 0; e < 3; ++e) {
            const int col = cols_bulk ? slab.bulk_index(cols[e], j) : slab.surface_index(cols[e], j);
            trip.emplace_back(r, col, c[b][j] * L(a, e));
          }
        }
      }
  };

  for (int m = 0; m < quad.size(); ++m) {
    const double t = quad.points[m];
    const double w = quad.weights[m];
    const auto v = tb.values(t);
    const auto d = tb.derivatives(t);
    double cm[2][2], ca[2][2];
    for (int b = 0; b < 2; ++b)
      for (int j = 0; j < 2; ++j) {
        cm[b][j] = w * d[j] * v[b];
        ca[b][j] = w * v[j] * v[b];
      }

    for (const BulkPiece& piece : slab.regions[m]) {
      if (!B.is_active(piece.element)) throw std::logic_error("outer region outside the bulk active mesh");
      ev.bind(piece.element);
      local_indices(B, ev.dofs, ib);
      M.setZero();
      A.setZero();
      const auto& T = piece.triangle;
      for (const auto& qp : gauss_on_triangle(T[0], T[1], T[2], kBulkDegree)) {
        ev.at(qp.x);
        const Vec2 beta = problem.beta.value(t, qp.x);
        for (int a = 0; a < 3; ++a)
          for (int e = 0; e < 3; ++e) {
            M(a, e) += qp.weight * ev.phi[a] * ev.phi[e];
            A(a, e) += qp.weight * (beta.dot(ev.grad[e]) * ev.phi[a] + ev.grad[a].dot(ev.grad[e]) / P.Pe);
          }
      }
      double c1[2][2], c2[2][2];
      for (int b = 0; b < 2; ++b)
        for (int j = 0; j < 2; ++j) {
          c1[b][j] = wb * cm[b][j];
          c2[b][j] = wb * ca[b][j];
        }
      scatter(M, ib, true, ib, true, c1);
      scatter(A, ib, true, ib, true, c2);
    }

    for (const auto& seg : S.snapshots[m].segments) {
      if (!S.is_active(seg.host) || !B.is_active(seg.host))
        throw std::logic_error("interface segment outside the active meshes");
      ev.bind(seg.host);
      local_indices(S, ev.dofs, is);
      local_indices(B, ev.dofs, ib);
      M.setZero();
      A.setZero();
      const Vec2& nrm = seg.normal;
      for (const auto& qp : gauss_on_segment(seg.a, seg.b, kSegmentDegree)) {
        ev.at(qp.x);
        const Vec2 beta = problem.beta.value(t, qp.x);
        const double div_gamma = problem.beta.surface_divergence(t, qp.x, nrm);
        for (int a = 0; a < 3; ++a) {
          const Vec2 ga = ev.grad[a] - nrm.dot(ev.grad[a]) * nrm;
          for (int e = 0; e < 3; ++e) {
            M(a, e) += qp.weight * ev.phi[a] * ev.phi[e];
            A(a, e) += qp.weight * ((beta.dot(ev.grad[e]) + div_gamma * ev.phi[e]) * ev.phi[a] +
                                    ga.dot(ev.grad[e]) / P.Pe_s);
          }
        }
      }
      double c1[2][2], c2[2][2], bb[2][2], bs[2][2], ss[2][2];
      for (int b = 0; b < 2; ++b)
        for (int j = 0; j < 2; ++j) {
          c1[b][j] = ws * cm[b][j];
          c2[b][j] = ws * ca[b][j];
          bb[b][j] = P.alpha * P.alpha * ca[b][j];
          bs[b][j] = -P.alpha * P.Bi * ca[b][j];
          ss[b][j] = P.Bi * P.Bi * ca[b][j];
        }
      scatter(M, is, false, is, false, c1);
      scatter(A, is, false, is, false, c2);
      // (alpha u_B - Bi u_S, alpha v_B - Bi v_S)
      scatter(M, ib, true, ib, true, bb);
      scatter(M, ib, true, is, false, bs);
      scatter(M, is, false, ib, true, bs);
      scatter(M, is, false, is, false, ss);
    }
  }

  // Face penalties, constant in time: sum_m w_m v_j v_b J.
  double cf[2][2] = {{0, 0}, {0, 0}};
  for (int m = 0; m < quad.size(); ++m) {
    const auto v = tb.values(quad.points[m]);
    for (int b = 0; b < 2; ++b)
      for (int j = 0; j < 2; ++j) cf[b][j] += quad.weights[m] * v[j] * v[b];
  }
  const SpMat JB = assemble_face_penalty(B, B.faces, {P.tau_b, 0.0, 0.0}, [](int) { return 1; }, h);
  const SpMat JS = assemble_face_penalty(S, S.faces, {P.tau_s, 0.0, 0.0}, [](int) { return 0; }, h);
  for (int b = 0; b < 2; ++b)
    for (int j = 0; j < 2; ++j) {
      for (int o = 0; o < JB.outerSize(); ++o)
        for (SpMat::InnerIterator it(JB, o); it; ++it)
          trip.emplace_back(slab.bulk_index(static_cast<int>(it.row()), b),
                            slab.bulk_index(static_cast<int>(it.col()), j), cf[b][j] * it.value());
      for (int o = 0; o < JS.outerSize(); ++o)
        for (SpMat::InnerIterator it(JS, o); it; ++it)
          trip.emplace_back(slab.surface_index(static_cast<int>(it.row()), b),
                            slab.surface_index(static_cast<int>(it.col()), j), cf[b][j] * it.value());
    }

  // Time jumps at t_{n-1}: only mode 0 is nonzero there.
  const double t_prev = B.t0;
  const double jump[2][2] = {{1.0, 0.0}, {0.0, 0.0}};
  for (const BulkPiece& piece : slab.regions.front()) {
    ev.bind(piece.element);
    local_indices(B, ev.dofs, ib);
    M.setZero();
    const auto& T = piece.triangle;
    for (const auto& qp : gauss_on_triangle(T[0], T[1], T[2], kBulkDegree)) {
      ev.at(qp.x);
      for (int a = 0; a < 3; ++a)
        for (int e = 0; e < 3; ++e) M(a, e) += qp.weight * ev.phi[a] * ev.phi[e];
    }
    double c[2][2] = {{wb * jump[0][0], 0.0}, {0.0, 0.0}};
    scatter(M, ib, true, ib, true, c);
    const int data_degree = previous.slab ? kBulkDegree : kDataDegree;
    for (const auto& qp : gauss_on_triangle(T[0], T[1], T[2], data_degree)) {
      double u_prev;
      if (previous.slab) {
        if (!previous.slab->bulk.is_active(piece.element))
          throw std::logic_error("previous bulk trace requested outside the previous active mesh");
        u_prev = value_on_element(previous.state->bulk, previous.slab->bulk, t_prev, qp.x, piece.element);
      } else {
        u_prev = problem.u_b0(qp.x);
      }
      ev.at(qp.x);
      for (int a = 0; a < 3; ++a) rhs_[slab.bulk_index(ib[a], 0)] += wb * qp.weight * u_prev * ev.phi[a];
    }
  }
  for (const auto& seg : S.snapshots.front().segments) {
    ev.bind(seg.host);
    local_indices(S, ev.dofs, is);
    M.setZero();
    for (const auto& qp : gauss_on_segment(seg.a, seg.b, kSegmentDegree)) {
      ev.at(qp.x);
      double u_prev;
      if (previous.slab) {
        if (!previous.slab->surface.is_active(seg.host))
          throw std::logic_error("previous surface trace requested outside the previous active mesh");
        u_prev = value_on_element(previous.state->surface, previous.slab->surface, t_prev, qp.x, seg.host);
      } else {
        u_prev = problem.u_s0(qp.x);
      }
      for (int a = 0; a < 3; ++a) {
        rhs_[slab.surface_index(is[a], 0)] += ws * qp.weight * u_prev * ev.phi[a];
        for (int e = 0; e < 3; ++e) M(a, e) += qp.weight * ev.phi[a] * ev.phi[e];
      }
    }
    double c[2][2] = {{ws * jump[0][0], 0.0}, {0.0, 0.0}};
    scatter(M, is, false, is, false, c);
  }

  // Total mass at t_n; every time mode equals one there.
  constraint_ = Eigen::VectorXd::Zero(slab.multiplier_index());
  for (const BulkPiece& piece : slab.regions.back()) {
    ev.bind(piece.element);
    local_indices(B, ev.dofs, ib);
    const auto& T = piece.triangle;
    for (const auto& qp : gauss_on_triangle(T[0], T[1], T[2], kBulkDegree)) {
      ev.at(qp.x);
      for (int a = 0; a < 3; ++a)
        for (int j = 0; j < 2; ++j) constraint_[slab.bulk_index(ib[a], j)] += qp.weight * ev.phi[a];
    }
  }
  for (const auto& seg : S.snapshots.back().segments) {
    ev.bind(seg.host);
    local_indices(S, ev.dofs, is);
    for (const auto& qp : gauss_on_segment(seg.a, seg.b, kSegmentDegree)) {
      ev.at(qp.x);
      for (int a = 0; a < 3; ++a)
        for (int j = 0; j < 2; ++j) constraint_[slab.surface_index(is[a], j)] += P.Da * qp.weight * ev.phi[a];
    }
  }
  if (problem.use_multiplier) {
    const int last = slab.multiplier_index();
    for (int i = 0; i < last; ++i)
      if (constraint_[i] != 0.0) {
        trip.emplace_back(i, last, constraint_[i]);
        trip.emplace_back(last, i, constraint_[i]);
      }
    rhs_[last] = total_mass;
  }

  linear_.resize(n, n);
  linear_.setFromTriplets(trip.begin(), trip.end());
}

namespace {

// Visits every interface quadrature point of the slab with the time-scaled
// weight, the mode values and the local basis.
template <class F>
void for_each_interface_point(const CoupledSlab& slab, F&& f) {
  const SlabSpace& S = slab.surface;
  const TimeBasis tb = S.time_basis();
  detail::ElementEvaluator ev(*S.dofs);
  std::array<int, 3> ib{}, is{};
  for (int m = 0; m < S.quadrature.size(); ++m) {
    const auto v = tb.values(S.quadrature.points[m]);
    for (const auto& seg : S.snapshots[m].segments) {
      ev.bind(seg.host);
      local_indices(S, ev.dofs, is);
      local_indices(slab.bulk, ev.dofs, ib);
      for (const auto& qp : gauss_on_segment(seg.a, seg.b, kSegmentDegree)) {
        ev.at(qp.x);
        f(S.quadrature.weights[m] * qp.weight, v, ev.phi, ib, is);
      }
    }
  }
}

}  // namespace

Eigen::VectorXd CoupledSlabSystem::residual(const Eigen::VectorXd& x) const {
  Eigen::VectorXd F = linear_ * x - rhs_;
  if (problem_->drop_quadratic) return F;
  const CoupledParameters& P = problem_->params;
  const CoupledSlab& slab = *slab_;
  for_each_interface_point(slab, [&](double w, const std::array<double, 3>& v, const std::vector<double>& phi,
                                     const std::array<int, 3>& ib, const std::array<int, 3>& is) {
    double ub = 0.0, us = 0.0;
    for (int j = 0; j < 2; ++j)
      for (int a = 0; a < 3; ++a) {
        ub += v[j] * phi[a] * x[slab.bulk_index(ib[a], j)];
        us += v[j] * phi[a] * x[slab.surface_index(is[a], j)];
      }
    const double c = -P.alpha * w * ub * us;
    for (int b = 0; b < 2; ++b)
      for (int a = 0; a < 3; ++a) {
        F[slab.bulk_index(ib[a], b)] += c * P.alpha * phi[a] * v[b];
        F[slab.surface_index(is[a], b)] -= c * P.Bi * phi[a] * v[b];
      }
  });
  return F;
}

SpMat CoupledSlabSystem::jacobian(const Eigen::VectorXd& x) const {
  if (problem_->drop_quadratic) return linear_;
  const CoupledParameters& P = problem_->params;
  const CoupledSlab& slab = *slab_;
  Triplets trip;
  for_each_interface_point(slab, [&](double w, const std::array<double, 3>& v, const std::vector<double>& phi,
                                     const std::array<int, 3>& ib, const std::array<int, 3>& is) {
    double ub = 0.0, us = 0.0;
    for (int j = 0; j < 2; ++j)
      for (int a = 0; a < 3; ++a) {
        ub += v[j] * phi[a] * x[slab.bulk_index(ib[a], j)];
        us += v[j] * phi[a] * x[slab.surface_index(is[a], j)];
      }
    // -alpha (w_B u_S + u_B w_S, alpha v_B - Bi v_S)
    for (int b = 0; b < 2; ++b)
      for (int a = 0; a < 3; ++a) {
        const double test_b = P.alpha * phi[a] * v[b];
        const double test_s = -P.Bi * phi[a] * v[b];
        for (int j = 0; j < 2; ++j)
          for (int e = 0; e < 3; ++e) {
            const double trial = -P.alpha * w * phi[e] * v[j];
            const int cb = slab.bulk_index(ib[e], j), cs = slab.surface_index(is[e], j);
            trip.emplace_back(slab.bulk_index(ib[a], b), cb, trial * us * test_b);
            trip.emplace_back(slab.bulk_index(ib[a], b), cs, trial * ub * test_b);
            trip.emplace_back(slab.surface_index(is[a], b), cb, trial * us * test_s);
            trip.emplace_back(slab.surface_index(is[a], b), cs, trial * ub * test_s);
          }
      }
  });
  SpMat N(linear_.rows(), linear_.cols());
  N.setFromTriplets(trip.begin(), trip.end());
  return linear_ + N;
}

Eigen::VectorXd CoupledSlabSystem::initial_guess() const {
  const CoupledSlab& slab = *slab_;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(size());
  auto fill = [&](const SlabSpace& space, bool bulk) {
    for (int i = 0; i < space.num_spatial(); ++i) {
      const Vec2& node = space.dofs->point(space.local_to_global[i]);
      double value = 0.0;
      if (previous_.slab) {
        const SlabSpace& ps = bulk ? previous_.slab->bulk : previous_.slab->surface;
        const Eigen::VectorXd& pc = bulk ? previous_.state->bulk : previous_.state->surface;
        const int K = find_active_element(ps, node);
        if (K >= 0) value = value_on_element(pc, ps, ps.t1, node, K);
      } else {
        value = bulk ? problem_->u_b0(node) : problem_->u_s0(node);
      }
      x[bulk ? slab.bulk_index(i, 0) : slab.surface_index(i, 0)] = value;
    }
  };
  fill(slab.bulk, true);
  fill(slab.surface, false);
  if (problem_->use_multiplier && previous_.state) x[slab.multiplier_index()] = previous_.state->lambda;
  return x;
}

NewtonResult newton_solve(const CoupledSlabSystem& system, Eigen::VectorXd x0, const NewtonOptions& options) {
  NewtonResult result;
  result.x = std::move(x0);
  for (int it = 0; it < options.max_iterations; ++it) {
    const Eigen::VectorXd F = system.residual(result.x);
    SpMat J = system.jacobian(result.x);
    SolveResult step;
    if (system.bordered()) {
      const int n = system.size() - 1;
      step = solve_bordered(J.topLeftCorner(n, n), system.constraint(), F);
    } else {
      step = solve_sparse(J, F);
    }
    result.x -= step.x;
    const double norm = step.x.norm();
    result.update_norms.push_back(norm);
    if (norm <= options.tol) {
      result.jacobian = std::move(J);
      return result;
    }
    ++result.iterations;
  }
  std::ostringstream msg;
  msg << "Newton did not converge in " << options.max_iterations << " iterations; update norms:";
  for (double u : result.update_norms) msg << ' ' << u;
  throw NewtonFailure(msg.str());
}

double total_mass(const CoupledSlab& slab, const CoupledState& state, double Da) {
  const double t = slab.bulk.t1;
  double bulk = 0.0, surface = 0.0;
  for (const BulkPiece& piece : slab.regions.back()) {
    const auto& T = piece.triangle;
    for (const auto& qp : gauss_on_triangle(T[0], T[1], T[2], kBulkDegree))
      bulk += qp.weight * value_on_element(state.bulk, slab.bulk, t, qp.x, piece.element);
  }
  for (const auto& seg : slab.surface.snapshots.back().segments)
    for (const auto& qp : gauss_on_segment(seg.a, seg.b, kSegmentDegree))
      surface += qp.weight * value_on_element(state.surface, slab.surface, t, qp.x, seg.host);
  return bulk + Da * surface;
}

double initial_total_mass(const CoupledProblem& problem, const std::vector<BulkPiece>& region,
                          const InterfaceSnapshot& snapshot, int levels) {
  double bulk = 0.0, surface = 0.0;
  std::vector<std::array<Vec2, 3>> sub;
  for (const BulkPiece& piece : region) {
    sub.clear();
    subdivide(piece.triangle, levels, sub);
    for (const auto& T : sub)
      for (const auto& qp : gauss_on_triangle(T[0], T[1], T[2], kDataDegree)) bulk += qp.weight * problem.u_b0(qp.x);
  }
  for (const auto& seg : snapshot.segments)
    for (const auto& qp : gauss_on_segment(seg.a, seg.b, kDataDegree)) surface += qp.weight * problem.u_s0(qp.x);
  return bulk + problem.params.Da * surface;
}

FieldSnapshot field_snapshot(const CoupledSlab& slab, const CoupledState& state) {
  FieldSnapshot out;
  const double t = slab.bulk.t1;
  out.t = t;
  const InterfaceSnapshot& snap = slab.surface.snapshots.back();
  const SlabSpace& B = slab.bulk;
  for (int i = 0; i < B.num_spatial(); ++i) {
    const int g = B.local_to_global[i];
    // Linear dofs are the mesh vertices, which come first on the refined mesh.
    if (snap.level_set && snap.level_set->effective(g) > 0.0) continue;
    const Vec2& x = B.dofs->point(g);
    out.bulk.push_back({x.x(), x.y(), state.bulk[B.column(i, 0)] + state.bulk[B.column(i, 1)]});
  }
  for (const auto& seg : snap.segments) {
    const Vec2 x = seg.midpoint();
    out.surface.push_back({x.x(), x.y(), value_on_element(state.surface, slab.surface, t, x, seg.host)});
  }
  return out;
}

CoupledResult march_coupled(const CoupledProblem& problem, const DofHandler& dofs, const CoupledOptions& options) {
  if (!(options.k > 0.0) || !(options.T > 0.0)) throw std::invalid_argument("march_coupled: k and T must be positive");
  const BackgroundMesh& mesh = dofs.mesh();
  const int slabs = std::max(1, static_cast<int>(std::lround(options.T / options.k)));
  const double k = options.T / slabs;
  LevelSetTracker tracker(mesh, problem.phi0, LevelSetTrackerOptions{options.redistance_every});

  CoupledResult result;
  InterfaceSnapshot current = tracker.snapshot(0.0);
  CoupledSlab prev_slab;
  CoupledState prev_state;
  bool have_prev = false;

  for (int s = 0; s < slabs; ++s) {
    const double t0 = s * k;
    const double t1 = s + 1 == slabs ? options.T : (s + 1) * k;
    const TimeQuadrature quad = newton_cotes(3, t0, t1);
    std::vector<InterfaceSnapshot> snaps{current};
    for (int m = 1; m < 3; ++m) {
      tracker.advance(problem.beta, quad.points[m - 1], quad.points[m] - quad.points[m - 1]);
      snaps.push_back(tracker.snapshot(quad.points[m]));
    }
    CoupledSlab slab = build_coupled_slab(dofs, std::move(snaps), quad, s);
    if (s == 0) result.initial_mass = initial_total_mass(problem, slab.regions.front(), slab.surface.snapshots.front());

    CoupledTrace previous;
    if (have_prev) previous = {&prev_slab, &prev_state};
    const CoupledSlabSystem system(problem, slab, previous, result.initial_mass);
    NewtonResult newton;
    try {
      newton = newton_solve(system, system.initial_guess(), options.newton);
    } catch (const NewtonFailure& e) {
      throw NewtonFailure("slab " + std::to_string(s) + ": " + e.what());
    }
    CoupledState state = unpack(slab, newton.x, problem.use_multiplier);

    CoupledStep step;
    step.step = s + 1;
    step.t = t1;
    step.mass = total_mass(slab, state, problem.params.Da);
    step.relative_mass_error = std::abs(step.mass - result.initial_mass) / std::abs(result.initial_mass);
    step.newton_iterations = newton.iterations;
    step.update_norms = newton.update_norms;
    step.unknowns = system.size();
    if (options.compute_condition) step.condition_number = condition_number(newton.jacobian, options.condition_dense_limit);
    result.steps.push_back(step);

    for (double ts : options.snapshot_times)
      if (std::abs(ts - t1) < 1e-9 * std::max(1.0, options.T)) result.fields.push_back(field_snapshot(slab, state));
    for (double ts : options.checkpoint_times)
      if (std::abs(ts - t1) < 1e-9 * std::max(1.0, options.T)) result.checkpoints.push_back({t1, slab, state});

    current = slab.surface.snapshots.back();
    prev_slab = std::move(slab);
    prev_state = std::move(state);
    have_prev = true;
  }
  result.last_slab = std::move(prev_slab);
  result.last_state = std::move(prev_state);
  return result;
}

SelfConvergence self_convergence(const CoupledResult& fine, const CoupledResult& coarse) {
  return self_convergence(CoupledCheckpoint{fine.last_slab.bulk.t1, fine.last_slab, fine.last_state},
                          CoupledCheckpoint{coarse.last_slab.bulk.t1, coarse.last_slab, coarse.last_state});
}

SelfConvergence self_convergence(const CoupledCheckpoint& fine, const CoupledCheckpoint& coarse) {
  const CoupledSlab& F = fine.slab;
  const CoupledSlab& C = coarse.slab;
  const double t = F.bulk.t1;
  if (std::abs(t - C.bulk.t1) > 1e-9) throw std::invalid_argument("self_convergence: runs end at different times");
  SelfConvergence out;
  for (const BulkPiece& piece : F.regions.back()) {
    const auto& T = piece.triangle;
    for (const auto& qp : gauss_on_triangle(T[0], T[1], T[2], kSegmentDegree)) {
      const double uf = value_on_element(fine.state.bulk, F.bulk, t, qp.x, piece.element);
      const double uc = value_on_element(coarse.state.bulk, C.bulk, t, qp.x, nearest_active_element(C.bulk, qp.x));
      out.bulk += qp.weight * (uf - uc) * (uf - uc);
    }
  }
  for (const auto& seg : F.surface.snapshots.back().segments)
    for (const auto& qp : gauss_on_segment(seg.a, seg.b, kSegmentDegree)) {
      const double uf = value_on_element(fine.state.surface, F.surface, t, qp.x, seg.host);
      const double uc =
          value_on_element(coarse.state.surface, C.surface, t, qp.x, nearest_active_element(C.surface, qp.x));
      out.surface += qp.weight * (uf - uc) * (uf - uc);
    }
  out.bulk = std::sqrt(out.bulk);
  out.surface = std::sqrt(out.surface);
  return out;
}

}  // namespace stcut
