#include <algorithm>
#include <cmath>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "stcut/interface_geometry.hpp"

namespace stcut {

SplineInterface fit_periodic_spline(std::vector<Vec2> markers) {
  const int M = static_cast<int>(markers.size());
  if (M < 4) throw std::invalid_argument("fit_periodic_spline: need at least 4 markers");

  SplineInterface s;
  s.knots.resize(M + 1);
  s.knots[0] = 0.0;
  for (int l = 0; l < M; ++l) {
    const double chord = (markers[(l + 1) % M] - markers[l]).norm();
    if (!(chord > 0.0)) throw std::invalid_argument("fit_periodic_spline: duplicated marker");
    s.knots[l + 1] = s.knots[l] + chord;
  }
  s.h_alpha = s.knots[M] / M;

  // Cyclic tridiagonal system for the second derivatives at the markers.
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::MatrixXd rhs(M, 2);
  for (int l = 0; l < M; ++l) {
    const int prev = (l + M - 1) % M;
    const int next = (l + 1) % M;
    const double hp = l > 0 ? s.knots[l] - s.knots[l - 1] : s.knots[M] - s.knots[M - 1];
    const double hn = s.knots[l + 1] - s.knots[l];
    trip.emplace_back(l, prev, hp);
    trip.emplace_back(l, l, 2.0 * (hp + hn));
    trip.emplace_back(l, next, hn);
    const Vec2 r = 6.0 * ((markers[next] - markers[l]) / hn - (markers[l] - markers[prev]) / hp);
    rhs(l, 0) = r.x();
    rhs(l, 1) = r.y();
  }
  Eigen::SparseMatrix<double> A(M, M);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw std::runtime_error("fit_periodic_spline: singular spline system");
  const Eigen::MatrixXd m = lu.solve(rhs);

  s.second_derivatives.resize(M);
  for (int l = 0; l < M; ++l) s.second_derivatives[l] = Vec2(m(l, 0), m(l, 1));
  s.markers = std::move(markers);
  return s;
}

double SplineInterface::wrap(double alpha) const {
  const double P = period();
  double a = std::fmod(alpha, P);
  if (a < 0.0) a += P;
  return a;
}

int SplineInterface::interval(double alpha) const {
  const double a = wrap(alpha);
  const auto it = std::upper_bound(knots.begin(), knots.end(), a);
  return std::clamp(static_cast<int>(it - knots.begin()) - 1, 0, size() - 1);
}

Vec2 SplineInterface::position(double alpha) const {
  const double a = wrap(alpha);
  const int l = interval(a);
  const int n = (l + 1) % size();
  const double H = knots[l + 1] - knots[l];
  const double u = a - knots[l];
  const double w = knots[l + 1] - a;
  const Vec2& m0 = second_derivatives[l];
  const Vec2& m1 = second_derivatives[n];
  return m0 * (w * w * w / (6.0 * H)) + m1 * (u * u * u / (6.0 * H)) + (markers[l] / H - m0 * (H / 6.0)) * w +
         (markers[n] / H - m1 * (H / 6.0)) * u;
}

Vec2 SplineInterface::derivative(double alpha) const {
  const double a = wrap(alpha);
  const int l = interval(a);
  const int n = (l + 1) % size();
  const double H = knots[l + 1] - knots[l];
  const double u = a - knots[l];
  const double w = knots[l + 1] - a;
  const Vec2& m0 = second_derivatives[l];
  const Vec2& m1 = second_derivatives[n];
  return -m0 * (w * w / (2.0 * H)) + m1 * (u * u / (2.0 * H)) - (markers[l] / H - m0 * (H / 6.0)) +
         (markers[n] / H - m1 * (H / 6.0));
}

Vec2 SplineInterface::second_derivative(double alpha) const {
  const double a = wrap(alpha);
  const int l = interval(a);
  const int n = (l + 1) % size();
  const double H = knots[l + 1] - knots[l];
  return second_derivatives[l] * ((knots[l + 1] - a) / H) + second_derivatives[n] * ((a - knots[l]) / H);
}

Vec2 SplineInterface::normal(double alpha) const {
  const Vec2 d = derivative(alpha);
  return Vec2(-d.y(), d.x()).normalized();
}

double SplineInterface::arclength(double alpha0, double alpha1, double rel_tol) const {
  if (alpha1 < alpha0) throw std::invalid_argument("SplineInterface::arclength: alpha1 < alpha0");
  auto speed = [this](double a) { return derivative(a).norm(); };
  // Integrate knot interval by knot interval so the integrand is smooth.
  const double P = period();
  double total = 0.0;
  double a = alpha0;
  while (a < alpha1) {
    const double base = std::floor(a / P) * P;
    const int l = interval(a - base);
    double end = base + knots[l + 1];
    if (end <= a) end = base + P;  // a sits on the closing knot
    end = std::min(end, alpha1);
    if (end - a < 1e-12 * P) total += (end - a) * speed(0.5 * (a + end));
    else if (end > a) total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(speed, a, end, 10, rel_tol);
    a = end;
  }
  return total;
}

double SplineInterface::total_length(double rel_tol) const { return arclength(0.0, period(), rel_tol); }

namespace {

double polygon_area(const std::vector<Vec2>& p) {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Vec2& a = p[i];
    const Vec2& b = p[(i + 1) % p.size()];
    sum += a.x() * b.y() - a.y() * b.x();
  }
  return 0.5 * sum;
}

// Chord parameters in (0, 1) where the segment P -> Q crosses a mesh line of
// the uniform diagonal grid: u = i, v = j or u - v = l in cell coordinates.
void grid_crossings(const UniformGrid& g, const Vec2& P, const Vec2& Q, std::vector<double>& out) {
  const double u0 = (P.x() - g.box.x0) / g.dx();
  const double v0 = (P.y() - g.box.y0) / g.dy();
  const double u1 = (Q.x() - g.box.x0) / g.dx();
  const double v1 = (Q.y() - g.box.y0) / g.dy();
  auto add = [&](double a, double b) {
    if (a == b) return;
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    for (double z = std::ceil(lo); z <= hi; z += 1.0) {
      const double s = (z - a) / (b - a);
      if (s > 0.0 && s < 1.0) out.push_back(s);
    }
  };
  add(u0, u1);
  add(v0, v1);
  add(u0 - v0, u1 - v1);
}

}  // namespace

InterfaceSnapshot spline_to_snapshot(const SplineInterface& spline, const BackgroundMesh& mesh, double t,
                                     int samples_per_knot) {
  if (samples_per_knot < 1) throw std::invalid_argument("spline_to_snapshot: samples_per_knot must be positive");
  const int M = spline.size();
  std::vector<Vec2> pts;
  std::vector<double> alphas;
  pts.reserve(static_cast<std::size_t>(M) * samples_per_knot + 1);
  for (int l = 0; l < M; ++l) {
    const double H = spline.knots[l + 1] - spline.knots[l];
    for (int s = 0; s < samples_per_knot; ++s) {
      const double a = spline.knots[l] + H * s / samples_per_knot;
      alphas.push_back(a);
      pts.push_back(s == 0 ? spline.markers[l] : spline.position(a));
    }
  }
  alphas.push_back(spline.period());
  const double orientation = polygon_area(pts) >= 0.0 ? 1.0 : -1.0;

  InterfaceSnapshot snap;
  snap.t = t;
  const int n = static_cast<int>(pts.size());
  std::vector<double> cuts;
  for (int i = 0; i < n; ++i) {
    const Vec2& P = pts[i];
    const Vec2& Q = pts[(i + 1) % n];
    cuts.clear();
    cuts.push_back(0.0);
    grid_crossings(mesh.grid, P, Q, cuts);
    cuts.push_back(1.0);
    std::sort(cuts.begin(), cuts.end());
    // Merge near-coincident crossings (grid vertices) so the chain stays closed.
    std::size_t kept = 1;
    for (std::size_t c = 1; c < cuts.size(); ++c) {
      if (cuts[c] - cuts[kept - 1] < 1e-12) {
        if (c + 1 == cuts.size() && kept > 1) cuts[kept - 1] = 1.0;
        continue;
      }
      cuts[kept++] = cuts[c];
    }
    cuts.resize(kept);
    if (cuts.size() < 2) cuts.push_back(1.0);
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double s0 = cuts[c];
      const double s1 = cuts[c + 1];
      Vec2 a = P + s0 * (Q - P);
      Vec2 b = P + s1 * (Q - P);
      const double smid = 0.5 * (s0 + s1);
      const int host = mesh.locate(P + smid * (Q - P));
      if (host < 0) throw std::runtime_error("spline_to_snapshot: interface leaves the background mesh");
      const double alpha = alphas[i] + smid * (alphas[i + 1] - alphas[i]);
      const Vec2 normal = orientation * spline.normal(alpha);
      if (orientation < 0.0) std::swap(a, b);
      snap.segments.push_back({a, b, normal, host});
    }
  }

  const PolygonSideOracle oracle(pts);
  snap.vertex_side.resize(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) snap.vertex_side[v] = oracle.inside(mesh.vertices[v]) ? 1 : -1;
  snap.centroid_side.resize(mesh.num_triangles());
  for (int k = 0; k < mesh.num_triangles(); ++k) snap.centroid_side[k] = oracle.inside(mesh.centroid(k)) ? 1 : -1;
  return snap;
}

}  // namespace stcut
