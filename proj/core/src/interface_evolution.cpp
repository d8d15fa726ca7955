#include "stcut/interface_evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "stcut/quadrature.hpp"

namespace stcut {

VelocityField zero_velocity() {
  VelocityField v;
  v.value = [](double, const Vec2&) { return Vec2::Zero().eval(); };
  v.jacobian = [](double, const Vec2&) { return Mat2::Zero().eval(); };
  v.stationary = true;
  return v;
}

VelocityField constant_velocity(const Vec2& c) {
  VelocityField v;
  v.value = [c](double, const Vec2&) { return c; };
  v.jacobian = [](double, const Vec2&) { return Mat2::Zero().eval(); };
  v.stationary = true;
  return v;
}

VelocityField rotation_velocity() {
  VelocityField v;
  v.value = [](double, const Vec2& x) { return Vec2(-x.y(), x.x()); };
  v.jacobian = [](double, const Vec2&) {
    Mat2 J;
    J << 0.0, -1.0, 1.0, 0.0;
    return J;
  };
  v.stationary = true;
  return v;
}

namespace {

struct P1Element {
  std::array<int, 3> dofs;
  std::array<Vec2, 3> corners;
  std::array<Vec2, 3> grads;
  double area;
};

P1Element p1_element(const BackgroundMesh& mesh, int t) {
  P1Element e;
  e.dofs = mesh.triangles[t];
  e.corners = mesh.corners(t);
  Mat2 J;
  J.col(0) = e.corners[1] - e.corners[0];
  J.col(1) = e.corners[2] - e.corners[0];
  const Mat2 invT = J.inverse().transpose();
  e.grads[1] = invT * Vec2(1.0, 0.0);
  e.grads[2] = invT * Vec2(0.0, 1.0);
  e.grads[0] = -e.grads[1] - e.grads[2];
  e.area = 0.5 * std::abs(J.determinant());
  return e;
}

}  // namespace

LevelSetField LevelSetAdvector::step(const LevelSetField& phi, const VelocityField& beta, double t_prev, double k) {
  if (!(k > 0.0)) throw std::invalid_argument("advect_levelset_cn_supg: time step must be positive");
  const BackgroundMesh& mesh = phi.mesh->mesh;
  const int n = mesh.num_vertices();
  const double t_next = t_prev + k;
  const TriangleRule& rule = reference_triangle_rule(4);

  const bool reuse = cached_ && beta.stationary && cached_mesh_ == phi.mesh.get() && cached_k_ == k;
  std::vector<Eigen::Triplet<double>> trip;
  if (!reuse) trip.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 9);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const P1Element e = p1_element(mesh, t);
    const Vec2 centroid = (e.corners[0] + e.corners[1] + e.corners[2]) / 3.0;
    const double hK = mesh.diameter(t);
    const double bnorm = beta.value(t_next, centroid).norm();
    const double tau = 2.0 / std::sqrt(1.0 / (k * k) + bnorm * bnorm / (hK * hK));

    Vec2 grad_old = Vec2::Zero();
    for (int i = 0; i < 3; ++i) grad_old += phi.values[e.dofs[i]] * e.grads[i];

    std::array<std::array<double, 3>, 3> local{};
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec2& r = rule.points[q];
      const std::array<double, 3> lam = {1.0 - r.x() - r.y(), r.x(), r.y()};
      const double w = rule.weights[q] * 2.0 * e.area;
      const Vec2 x = lam[0] * e.corners[0] + lam[1] * e.corners[1] + lam[2] * e.corners[2];
      const Vec2 b_new = beta.value(t_next, x);
      const Vec2 b_old = beta.value(t_prev, x);
      double phi_old = 0.0;
      for (int i = 0; i < 3; ++i) phi_old += lam[i] * phi.values[e.dofs[i]];
      const double source = phi_old / k - 0.5 * b_old.dot(grad_old);
      for (int i = 0; i < 3; ++i) {
        const double test = lam[i] + tau * b_new.dot(e.grads[i]);
        rhs[e.dofs[i]] += w * source * test;
        if (reuse) continue;
        for (int j = 0; j < 3; ++j) local[i][j] += w * (lam[j] / k + 0.5 * b_new.dot(e.grads[j])) * test;
      }
    }
    if (!reuse)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) trip.emplace_back(e.dofs[i], e.dofs[j], local[i][j]);
  }

  if (!reuse) {
    lhs_.resize(n, n);
    lhs_.setFromTriplets(trip.begin(), trip.end());
    lu_.compute(lhs_);
    if (lu_.info() != Eigen::Success) throw std::runtime_error("advect_levelset_cn_supg: singular system");
    cached_ = true;
    cached_mesh_ = phi.mesh.get();
    cached_k_ = k;
  }
  LevelSetField out;
  out.mesh = phi.mesh;
  out.values = lu_.solve(rhs);
  if (lu_.info() != Eigen::Success) throw std::runtime_error("advect_levelset_cn_supg: solve failed");
  return out;
}

LevelSetField advect_levelset_cn_supg(const LevelSetField& phi, const VelocityField& beta, double t_prev, double k) {
  LevelSetAdvector advector;
  return advector.step(phi, beta, t_prev, k);
}

namespace {

double distance_to_segment(const Vec2& x, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double len2 = d.squaredNorm();
  double s = len2 > 0.0 ? (x - a).dot(d) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return (x - (a + s * d)).norm();
}

}  // namespace

LevelSetField redistance_geometric(const LevelSetField& phi, int keep_layers) {
  const auto pieces = contour_pieces(phi);
  if (pieces.empty()) throw InterfaceLost("redistance_geometric: interface lost (no sign change)");
  const BackgroundMesh& mesh = phi.mesh->mesh;

  // Bucket the pieces on a coarse grid and search rings outward; the first
  // ring whose inner distance exceeds the best hit terminates the search.
  const Box& box = mesh.grid.box;
  const int nb = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(pieces.size()))));
  const double bw = box.width() / nb;
  const double bh = box.height() / nb;
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(nb) * nb);
  auto cell_of = [&](const Vec2& x) {
    const int i = std::clamp(static_cast<int>((x.x() - box.x0) / bw), 0, nb - 1);
    const int j = std::clamp(static_cast<int>((x.y() - box.y0) / bh), 0, nb - 1);
    return std::array<int, 2>{i, j};
  };
  for (int p = 0; p < static_cast<int>(pieces.size()); ++p) {
    const auto ca = cell_of(pieces[p][0]);
    const auto cb = cell_of(pieces[p][1]);
    for (int j = std::min(ca[1], cb[1]); j <= std::max(ca[1], cb[1]); ++j)
      for (int i = std::min(ca[0], cb[0]); i <= std::max(ca[0], cb[0]); ++i)
        buckets[static_cast<std::size_t>(j) * nb + i].push_back(p);
  }
  const double ring_width = std::min(bw, bh);

  // Vertices of sign-changing triangles keep their values up to one common
  // factor, the length-weighted mean of |grad phi_h| along the contour. That
  // leaves every crossing where it was; assigning them distances instead
  // moves the contour by O(h^2) per call, which piles up to O(h) over a run.
  std::vector<std::uint8_t> band(mesh.num_vertices(), 0);
  double grad_sum = 0.0, length_sum = 0.0;
  std::size_t piece = 0;  // contour_pieces visits the same triangles in order
  for (int c = 0; c < mesh.num_triangles(); ++c) {
    const auto& tri = mesh.triangles[c];
    const double f0 = phi.effective(tri[0]), f1 = phi.effective(tri[1]), f2 = phi.effective(tri[2]);
    if ((f0 > 0.0) == (f1 > 0.0) && (f1 > 0.0) == (f2 > 0.0)) continue;
    for (int v : tri) band[v] = 1;
    const auto x = mesh.corners(c);
    Mat2 E;
    E.col(0) = x[1] - x[0];
    E.col(1) = x[2] - x[0];
    const double g = (E.transpose().inverse() * Vec2(f1 - f0, f2 - f0)).norm();
    const double w = (pieces[piece][1] - pieces[piece][0]).norm();
    ++piece;
    grad_sum += w * g;
    length_sum += w;
  }
  for (int layer = 1; layer < keep_layers; ++layer) {
    std::vector<std::uint8_t> grown = band;
    for (const auto& tri : mesh.triangles)
      if (band[tri[0]] || band[tri[1]] || band[tri[2]])
        for (int v : tri) grown[v] = 1;
    band = std::move(grown);
  }
  const double scale = length_sum > 0.0 && grad_sum > 0.0 ? grad_sum / length_sum : 1.0;
  const double snap = phi.snap_tolerance();

  LevelSetField out;
  out.mesh = phi.mesh;
  out.values.resize(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (band[v]) {
      const double f = phi.effective(v);
      const double scaled = f / scale;
      out.values[v] = std::abs(scaled) < 2.0 * snap ? std::copysign(2.0 * snap, f) : scaled;
      continue;
    }
    const Vec2& x = mesh.vertices[v];
    const auto c = cell_of(x);
    double best = std::numeric_limits<double>::infinity();
    for (int ring = 0; ring <= nb; ++ring) {
      if (ring > 0 && (ring - 1) * ring_width > best) break;
      for (int j = c[1] - ring; j <= c[1] + ring; ++j) {
        if (j < 0 || j >= nb) continue;
        for (int i = c[0] - ring; i <= c[0] + ring; ++i) {
          if (i < 0 || i >= nb) continue;
          if (std::max(std::abs(i - c[0]), std::abs(j - c[1])) != ring) continue;
          for (int p : buckets[static_cast<std::size_t>(j) * nb + i])
            best = std::min(best, distance_to_segment(x, pieces[p][0], pieces[p][1]));
        }
      }
    }
    out.values[v] = phi.effective(v) > 0.0 ? best : -best;
  }
  return out;
}

namespace {

double min_spacing(const std::vector<Vec2>& markers) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < markers.size(); ++i) m = std::min(m, (markers[(i + 1) % markers.size()] - markers[i]).norm());
  return m;
}

}  // namespace

SplineInterface advect_markers(const SplineInterface& spline, const VelocityField& beta, double t, double k) {
  if (!(k > 0.0)) throw std::invalid_argument("advect_markers: time step must be positive");
  std::vector<Vec2> moved(spline.markers.size());
  for (std::size_t l = 0; l < moved.size(); ++l) {
    const Vec2& x = spline.markers[l];
    const Vec2 k1 = beta.value(t, x);
    const Vec2 k2 = beta.value(t + 0.5 * k, x + 0.5 * k * k1);
    const Vec2 k3 = beta.value(t + 0.5 * k, x + 0.5 * k * k2);
    const Vec2 k4 = beta.value(t + k, x + k * k3);
    moved[l] = x + (k / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (min_spacing(moved) < 1e-3 * spline.h_alpha) {
    // Refit through the non-colliding subset, then resample.
    std::vector<Vec2> kept;
    for (const Vec2& x : moved)
      if (kept.empty() || (x - kept.back()).norm() >= 1e-3 * spline.h_alpha) kept.push_back(x);
    if (kept.size() > 1 && (kept.front() - kept.back()).norm() < 1e-3 * spline.h_alpha) kept.pop_back();
    return redistribute_equal_arclength(fit_periodic_spline(std::move(kept)), spline.size());
  }
  return fit_periodic_spline(std::move(moved));
}

SplineInterface redistribute_equal_arclength(const SplineInterface& spline, int M) {
  if (M < 4) throw std::invalid_argument("redistribute_equal_arclength: need at least 4 markers");
  const int n = spline.size();
  std::vector<double> cum(n + 1, 0.0);
  for (int l = 0; l < n; ++l) cum[l + 1] = cum[l] + spline.arclength(spline.knots[l], spline.knots[l + 1]);
  const double L = cum[n];

  std::vector<Vec2> markers(M);
  markers[0] = spline.markers[0];
  for (int i = 1; i < M; ++i) {
    const double target = L * i / M;
    const int l = std::clamp(static_cast<int>(std::upper_bound(cum.begin(), cum.end(), target) - cum.begin()) - 1, 0, n - 1);
    const double a0 = spline.knots[l];
    const double a1 = spline.knots[l + 1];
    const double seg = cum[l + 1] - cum[l];
    double alpha = a0 + (target - cum[l]) / seg * (a1 - a0);
    for (int it = 0; it < 30; ++it) {
      const double F = cum[l] + spline.arclength(a0, alpha) - target;
      if (std::abs(F) < 1e-13 * L) break;
      alpha = std::clamp(alpha - F / spline.derivative(alpha).norm(), a0, a1);
    }
    markers[i] = spline.position(alpha);
  }
  return fit_periodic_spline(std::move(markers));
}

LevelSetTracker::LevelSetTracker(const BackgroundMesh& mesh, const std::function<double(const Vec2&)>& phi0,
                                 LevelSetTrackerOptions options)
    : mesh_(&mesh), refined_(std::make_shared<RefinedMesh>(refine_once(mesh))), options_(options) {
  field_ = std::make_shared<LevelSetField>(interpolate_level_set(refined_, phi0));
}

void LevelSetTracker::advance(const VelocityField& beta, double t, double dt) {
  LevelSetField next = advector_.step(*field_, beta, t, dt);
  ++steps_;
  if (options_.redistance_every > 0 && steps_ % options_.redistance_every == 0) next = redistance_geometric(next, options_.keep_layers);
  field_ = std::make_shared<LevelSetField>(std::move(next));
}

InterfaceSnapshot LevelSetTracker::snapshot(double t) const { return extract_zero_contour(*mesh_, field_, t); }

SplineTracker::SplineTracker(const BackgroundMesh& mesh, std::vector<Vec2> markers, SplineTrackerOptions options)
    : mesh_(&mesh), spline_(fit_periodic_spline(std::move(markers))), options_(options) {}

void SplineTracker::advance(const VelocityField& beta, double t, double dt) {
  spline_ = advect_markers(spline_, beta, t, dt);
  ++steps_;
  if (options_.redistribute_every > 0 && steps_ % options_.redistribute_every == 0)
    spline_ = redistribute_equal_arclength(spline_, spline_.size());
}

InterfaceSnapshot SplineTracker::snapshot(double t) const {
  return spline_to_snapshot(spline_, *mesh_, t, options_.samples_per_knot);
}

std::vector<Vec2> circle_markers(const Vec2& center, double radius, int count) {
  std::vector<Vec2> out(count);
  for (int i = 0; i < count; ++i) {
    const double a = 2.0 * std::numbers::pi * i / count;
    out[i] = center + radius * Vec2(std::cos(a), std::sin(a));
  }
  return out;
}

}  // namespace stcut
