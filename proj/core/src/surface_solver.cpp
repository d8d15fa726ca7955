#include "stcut/surface_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fe_kernel.hpp"

namespace stcut {

std::string to_string(StabilizationMode mode) {
  return mode == StabilizationMode::combined_new ? "combined_new" : "face_only_legacy";
}

StabilizationMode parse_stabilization_mode(const std::string& text) {
  if (text == "new" || text == "combined_new") return StabilizationMode::combined_new;
  if (text == "legacy" || text == "face_only_legacy") return StabilizationMode::face_only_legacy;
  throw std::invalid_argument("unknown stabilization mode '" + text + "'");
}

StabilizationConfig StabilizationConfig::make(StabilizationMode mode, double base) {
  StabilizationConfig c;
  c.mode = mode;
  double factorial = 1.0;
  for (int i = 1; i <= 3; ++i) {
    factorial *= i;
    c.c_face[i - 1] = base / factorial;
    c.c_interface[i - 1] = mode == StabilizationMode::combined_new ? base / factorial : 0.0;
  }
  return c;
}

std::function<double(double, const Vec2&)> manufactured_rhs(const ManufacturedSolution& u, const VelocityField& beta,
                                                            double k_s, const AnalyticLevelSet& phi) {
  return [u, beta, k_s, phi](double t, const Vec2& x) {
    const Vec2 g = phi.gradient(t, x);
    const double gn = g.norm();
    if (!(gn > 1e-10)) throw std::domain_error("manufactured_rhs: vanishing level-set gradient");
    const Vec2 n = g / gn;
    const double kappa = levelset_curvature(phi, x, t);
    const Vec2 du = u.gradient(t, x);
    const Mat2 H = u.hessian(t, x);
    const Mat2 J = beta.jacobian(t, x);
    const double value = u.value(t, x);
    const double lap_gamma = H.trace() - n.dot(H * n) - kappa * n.dot(du);
    return u.time_derivative(t, x) + beta.value(t, x).dot(du) + (J.trace() - n.dot(J * n)) * value - k_s * lap_gamma;
  };
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

int interface_degree(int p) { return std::min(2 * p + 2, 13); }

SpMat from_triplets(int n, const Triplets& trip) {
  SpMat A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

// Local spatial indices of the element's dofs; throws if the element is not
// active in the space.
void local_indices(const SlabSpace& space, std::span<const int> dofs, std::vector<int>& out) {
  out.resize(dofs.size());
  for (std::size_t a = 0; a < dofs.size(); ++a) {
    out[a] = space.global_to_local[dofs[a]];
    if (out[a] < 0) throw std::logic_error("element with inactive dofs used in slab assembly");
  }
}

}  // namespace

SpMat assemble_face_penalty(const SlabSpace& space, const std::vector<int>& faces, const std::array<double, 3>& c,
                            const std::function<int(int)>& gamma, double h) {
  const BackgroundMesh& mesh = space.mesh();
  const DofHandler& dofs = *space.dofs;
  const int p = dofs.degree();
  detail::ElementEvaluator e0(dofs), e1(dofs);
  Triplets trip;
  std::vector<int> idx0, idx1;
  const int n = e0.n;
  std::vector<double> jump(2 * n);
  Eigen::MatrixXd local(2 * n, 2 * n);

  for (int f : faces) {
    const Face& face = mesh.faces[f];
    if (!face.interior()) continue;
    e0.bind(face.triangles[0]);
    e1.bind(face.triangles[1]);
    local_indices(space, e0.dofs, idx0);
    local_indices(space, e1.dofs, idx1);
    local.setZero();
    const auto pts = gauss_on_segment(mesh.vertices[face.vertices[0]], mesh.vertices[face.vertices[1]], 2 * p);
    for (int r = 1; r <= p; ++r) {
      if (c[r - 1] == 0.0) continue;
      const double scale = c[r - 1] * std::pow(h, gamma(r));
      for (const auto& qp : pts) {
        e0.directional(qp.x, face.normal, r);
        e1.directional(qp.x, face.normal, r);
        for (int a = 0; a < n; ++a) {
          jump[a] = e0.dir[a];
          jump[n + a] = -e1.dir[a];
        }
        for (int a = 0; a < 2 * n; ++a)
          for (int b = 0; b < 2 * n; ++b) local(a, b) += scale * qp.weight * jump[a] * jump[b];
      }
    }
    for (int a = 0; a < 2 * n; ++a) {
      const int ra = a < n ? idx0[a] : idx1[a - n];
      for (int b = 0; b < 2 * n; ++b) {
        const int cb = b < n ? idx0[b] : idx1[b - n];
        trip.emplace_back(ra, cb, local(a, b));
      }
    }
  }
  return from_triplets(space.num_spatial(), trip);
}

SlabParts assemble_slab_parts(const SurfaceProblem& problem, const SlabSpace& space, const StabilizationConfig& stab,
                              const PreviousTrace& previous) {
  const DofHandler& dofs = *space.dofs;
  const int p = dofs.degree();
  const int N = space.num_spatial();
  const double h = space.mesh().cell_width();
  const int deg = interface_degree(p);
  detail::ElementEvaluator ev(dofs);
  const int n = ev.n;
  std::vector<int> idx;
  Eigen::MatrixXd Ml(n, n), Al(n, n);
  std::vector<std::vector<double>> dn(p + 1, std::vector<double>(n));

  SlabParts parts;
  for (int m = 0; m < space.quadrature.size(); ++m) {
    const double t = space.quadrature.points[m];
    const InterfaceSnapshot& snap = space.snapshots[m];
    Triplets tm, ta;
    Eigen::VectorXd load = Eigen::VectorXd::Zero(N);
    for (const auto& seg : snap.segments) {
      if (!space.is_active(seg.host)) throw std::logic_error("interface segment outside the active mesh");
      ev.bind(seg.host);
      local_indices(space, ev.dofs, idx);
      Ml.setZero();
      Al.setZero();
      const Vec2& nrm = seg.normal;
      for (const auto& qp : gauss_on_segment(seg.a, seg.b, deg)) {
        ev.at(qp.x);
        const Vec2 b = problem.beta.value(t, qp.x);
        const double div_gamma = problem.beta.surface_divergence(t, qp.x, nrm);
        const double f = problem.f ? problem.f(t, qp.x) : 0.0;
        if (!std::isfinite(f) || !b.allFinite()) throw std::runtime_error("non-finite integrand in slab assembly");
        for (int r = 1; r <= p; ++r) {
          if (stab.c_interface[r - 1] == 0.0) continue;
          ev.directional(qp.x, nrm, r);
          std::copy(ev.dir.begin(), ev.dir.end(), dn[r].begin());
        }
        const double w = qp.weight;
        for (int a = 0; a < n; ++a) {
          load[idx[a]] += w * f * ev.phi[a];
          const Vec2 ga = ev.grad[a] - nrm.dot(ev.grad[a]) * nrm;
          for (int c = 0; c < n; ++c) {
            const Vec2& gc = ev.grad[c];
            Ml(a, c) += w * ev.phi[a] * ev.phi[c];
            double value = (b.dot(gc) + div_gamma * ev.phi[c]) * ev.phi[a] + problem.k_s * ga.dot(gc);
            for (int r = 1; r <= p; ++r)
              if (stab.c_interface[r - 1] != 0.0)
                value += stab.c_interface[r - 1] * std::pow(h, stab.gamma(r)) * dn[r][a] * dn[r][c];
            Al(a, c) += w * value;
          }
        }
      }
      for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c) {
          tm.emplace_back(idx[a], idx[c], Ml(a, c));
          ta.emplace_back(idx[a], idx[c], Al(a, c));
        }
    }
    parts.mass.push_back(from_triplets(N, tm));
    parts.operator_.push_back(from_triplets(N, ta));
    parts.load.push_back(std::move(load));
  }

  parts.face = assemble_face_penalty(space, space.faces, stab.c_face, [&](int r) { return stab.gamma(r); }, h);

  parts.jump = Eigen::VectorXd::Zero(N);
  for (const auto& seg : space.snapshots.front().segments) {
    ev.bind(seg.host);
    local_indices(space, ev.dofs, idx);
    for (const auto& qp : gauss_on_segment(seg.a, seg.b, deg)) {
      double u_prev;
      if (previous.space) {
        if (find_active_element(*previous.space, qp.x, seg.host) < 0)
          throw std::logic_error("previous trace requested outside the previous active mesh");
        u_prev = evaluate_spacetime(*previous.coeffs, *previous.space, previous.space->t1, qp.x, seg.host).value;
      } else {
        u_prev = problem.u0(qp.x);
      }
      ev.at(qp.x);
      for (int a = 0; a < n; ++a) parts.jump[idx[a]] += qp.weight * u_prev * ev.phi[a];
    }
  }
  return parts;
}

SlabSystem assemble_slab(const SurfaceProblem& problem, const SlabSpace& space, const StabilizationConfig& stab,
                         const PreviousTrace& previous) {
  const SlabParts parts = assemble_slab_parts(problem, space, stab, previous);
  const int N = space.num_spatial();
  const int Q = space.q + 1;
  const TimeBasis tb = space.time_basis();
  const TimeQuadrature& quad = space.quadrature;

  Triplets trip;
  auto add_block = [&](const SpMat& A, int row_mode, int col_mode, double coeff) {
    if (coeff == 0.0) return;
    for (int o = 0; o < A.outerSize(); ++o)
      for (SpMat::InnerIterator it(A, o); it; ++it)
        trip.emplace_back(row_mode * N + static_cast<int>(it.row()), col_mode * N + static_cast<int>(it.col()),
                          coeff * it.value());
  };

  SlabSystem sys;
  sys.rhs = Eigen::VectorXd::Zero(Q * N);
  std::vector<std::vector<double>> face_coeff(Q, std::vector<double>(Q, 0.0));
  for (int m = 0; m < quad.size(); ++m) {
    const double w = quad.weights[m];
    const auto v = tb.values(quad.points[m]);
    const auto d = tb.derivatives(quad.points[m]);
    for (int b = 0; b < Q; ++b) {
      sys.rhs.segment(b * N, N) += w * v[b] * parts.load[m];
      for (int j = 0; j < Q; ++j) {
        add_block(parts.mass[m], b, j, w * d[j] * v[b]);
        add_block(parts.operator_[m], b, j, w * v[j] * v[b]);
        face_coeff[b][j] += w * v[j] * v[b];
      }
    }
  }
  for (int b = 0; b < Q; ++b)
    for (int j = 0; j < Q; ++j) add_block(parts.face, b, j, face_coeff[b][j]);
  // Time jump: all modes but the constant vanish at t_{n-1}.
  add_block(parts.mass.front(), 0, 0, 1.0);
  sys.rhs.segment(0, N) += parts.jump;

  sys.matrix.resize(Q * N, Q * N);
  sys.matrix.setFromTriplets(trip.begin(), trip.end());
  return sys;
}

SolveResult solve_slab(const SlabSystem& system, int slab, int active_elements) {
  try {
    return solve_sparse(system.matrix, system.rhs);
  } catch (const SingularMatrix& e) {
    std::ostringstream msg;
    msg << "slab " << slab << " (" << active_elements << " active elements, " << system.matrix.rows()
        << " unknowns): " << e.what();
    throw SingularMatrix(msg.str());
  }
}

double surface_integral(const Eigen::VectorXd& coeffs, const SlabSpace& space, const InterfaceSnapshot& snapshot,
                        double t) {
  const int deg = interface_degree(space.dofs->degree());
  double sum = 0.0;
  for (const auto& seg : snapshot.segments)
    for (const auto& qp : gauss_on_segment(seg.a, seg.b, deg))
      sum += qp.weight * evaluate_spacetime(coeffs, space, t, qp.x, seg.host).value;
  return sum;
}

MarchResult march(const SurfaceProblem& problem, InterfaceTracker& tracker, const DofHandler& dofs,
                  const MarchOptions& options) {
  if (!(options.k > 0.0) || !(options.T > 0.0)) throw std::invalid_argument("march: k and T must be positive");
  if (options.p != dofs.degree()) throw std::invalid_argument("march: dof handler degree differs from p");
  const int slabs = std::max(1, static_cast<int>(std::lround(options.T / options.k)));
  const double k = options.T / slabs;
  const int nm = newton_cotes_points_for(options.q);

  MarchResult result;
  InterfaceSnapshot current = tracker.snapshot(0.0);
  SlabSpace prev_space;
  Eigen::VectorXd prev_coeffs;
  bool have_prev = false;

  for (int s = 0; s < slabs; ++s) {
    const double t0 = s * k;
    const double t1 = s + 1 == slabs ? options.T : (s + 1) * k;
    const TimeQuadrature quad = newton_cotes(nm, t0, t1);
    std::vector<InterfaceSnapshot> snaps{current};
    for (int m = 1; m < nm; ++m) {
      tracker.advance(problem.beta, quad.points[m - 1], quad.points[m] - quad.points[m - 1]);
      snaps.push_back(tracker.snapshot(quad.points[m]));
    }
    SlabSpace space = build_active_surface_mesh(dofs, std::move(snaps), quad, options.q, s);
    PreviousTrace previous;
    if (have_prev) previous = {&prev_space, &prev_coeffs};
    const SlabSystem system = assemble_slab(problem, space, options.stab, previous);
    SolveResult sol = solve_slab(system, s, static_cast<int>(space.active_elements.size()));
    const int measured = options.condition_slab < 0 ? slabs - 1 : std::min(options.condition_slab, slabs - 1);
    if (options.compute_condition && s == measured)
      result.condition_number = condition_number(system.matrix, options.condition_dense_limit);

    SlabRecord rec;
    rec.t = t1;
    rec.dofs = space.num_columns();
    rec.relative_residual = sol.relative_residual;
    if (options.record_mass) rec.mass = surface_integral(sol.x, space, space.snapshots.back(), t1);
    result.history.push_back(rec);
    result.max_dofs = std::max(result.max_dofs, rec.dofs);
    result.max_relative_residual = std::max(result.max_relative_residual, sol.relative_residual);

    current = space.snapshots.back();
    prev_space = std::move(space);
    prev_coeffs = std::move(sol.x);
    have_prev = true;
  }
  result.num_slabs = slabs;
  result.final_snapshot = current;
  result.last_space = std::move(prev_space);
  result.last_coeffs = std::move(prev_coeffs);
  return result;
}

ErrorNorms error_norms(const MarchResult& result, const SurfaceProblem& problem) {
  if (!problem.exact || !problem.projection) throw std::invalid_argument("error_norms: exact solution and projection required");
  const SlabSpace& space = result.last_space;
  const double t = space.t1;
  const int deg = std::min(2 * space.dofs->degree() + 4, 13);
  double l2 = 0.0, grad = 0.0;
  for (const auto& seg : result.final_snapshot.segments) {
    const Vec2& nh = seg.normal;
    for (const auto& qp : gauss_on_segment(seg.a, seg.b, deg)) {
      const SpacetimeValue uh = evaluate_spacetime(result.last_coeffs, space, t, qp.x, seg.host);
      const Projection pr = problem.projection(t, qp.x);
      const double ue = problem.exact->value(t, pr.point);
      const Vec2 g = problem.exact->gradient(t, pr.point);
      const Vec2 ge = g - pr.normal.dot(g) * pr.normal;
      const Vec2 gh = uh.gradient - nh.dot(uh.gradient) * nh;
      l2 += qp.weight * (ue - uh.value) * (ue - uh.value);
      grad += qp.weight * (ge - gh).squaredNorm();
    }
  }
  return {std::sqrt(l2), std::sqrt(l2 + grad)};
}

}  // namespace stcut
