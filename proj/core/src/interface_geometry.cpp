#include "stcut/interface_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace stcut {

double levelset_curvature(const AnalyticLevelSet& phi, const Vec2& x, double t) {
  const Vec2 g = phi.gradient(t, x);
  const double gn = g.norm();
  if (!(gn > 1e-10)) throw std::domain_error("levelset_curvature: vanishing gradient");
  const Mat2 H = phi.hessian(t, x);
  return (g.squaredNorm() * H.trace() - g.dot(H * g)) / (gn * gn * gn);
}

double LevelSetField::snap_tolerance() const { return 1e-12 * mesh->mesh.cell_width(); }

double LevelSetField::effective(int vertex) const {
  const double v = values[vertex];
  const double snap = snap_tolerance();
  return std::abs(v) < snap ? snap : v;
}

LevelSetField interpolate_level_set(std::shared_ptr<const RefinedMesh> mesh, const std::function<double(const Vec2&)>& phi) {
  LevelSetField field;
  field.values.resize(mesh->mesh.num_vertices());
  for (int v = 0; v < mesh->mesh.num_vertices(); ++v) field.values[v] = phi(mesh->mesh.vertices[v]);
  field.mesh = std::move(mesh);
  return field;
}

double InterfaceSnapshot::length() const {
  double sum = 0.0;
  for (const auto& s : segments) sum += s.length();
  return sum;
}

double InterfaceSnapshot::enclosed_area() const {
  double sum = 0.0;
  for (const auto& s : segments) sum += s.a.x() * s.b.y() - s.a.y() * s.b.x();
  return 0.5 * sum;
}

namespace {

// Gradient of the linear interpolant of (v0, v1, v2) on triangle (a, b, c).
Vec2 linear_gradient(const Vec2& a, const Vec2& b, const Vec2& c, double v0, double v1, double v2) {
  Mat2 J;
  J.col(0) = b - a;
  J.col(1) = c - a;
  return J.inverse().transpose() * Vec2(v1 - v0, v2 - v0);
}

// Crossing on edge (u, v), always interpolated from the lower vertex index so
// that neighbouring triangles produce bitwise identical points.
Vec2 crossing(const LevelSetField& f, int u, int v) {
  if (u > v) std::swap(u, v);
  const double fu = f.effective(u);
  const double fv = f.effective(v);
  const Vec2& xu = f.mesh->mesh.vertices[u];
  const Vec2& xv = f.mesh->mesh.vertices[v];
  const double s = fu / (fu - fv);
  return xu + s * (xv - xu);
}

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

}  // namespace

InterfaceSnapshot extract_zero_contour(const BackgroundMesh& mesh, std::shared_ptr<const LevelSetField> field, double t) {
  const RefinedMesh& refined = *field->mesh;
  const BackgroundMesh& fine = refined.mesh;
  if (static_cast<int>(refined.children.size()) != mesh.num_triangles())
    throw std::invalid_argument("extract_zero_contour: field does not live on the refinement of this mesh");

  InterfaceSnapshot snap;
  snap.t = t;
  snap.level_set = field;

  for (int c = 0; c < fine.num_triangles(); ++c) {
    const auto& tri = fine.triangles[c];
    std::array<bool, 3> pos;
    for (int i = 0; i < 3; ++i) pos[i] = field->effective(tri[i]) > 0.0;
    if (pos[0] == pos[1] && pos[1] == pos[2]) continue;

    // The lone vertex differs in sign from the other two.
    int lone = 0;
    if (pos[0] == pos[1]) lone = 2;
    else if (pos[0] == pos[2]) lone = 1;
    const int j = tri[(lone + 1) % 3];
    const int k = tri[(lone + 2) % 3];
    Vec2 a = crossing(*field, tri[lone], j);
    Vec2 b = crossing(*field, tri[lone], k);

    const auto corners = fine.corners(c);
    const Vec2 g = linear_gradient(corners[0], corners[1], corners[2], field->values[tri[0]], field->values[tri[1]],
                                   field->values[tri[2]]);
    const double gn = g.norm();
    Vec2 normal;
    if (gn > 0.0) {
      normal = g / gn;
    } else {
      // Every vertex is within the snap band; fall back to the direction of
      // the lone vertex.
      const Vec2 d = fine.vertices[tri[lone]] - 0.5 * (a + b);
      normal = (pos[lone] ? d : Vec2(-d)).normalized();
    }
    const Vec2 tangent = b - a;
    if (-tangent.y() * normal.x() + tangent.x() * normal.y() < 0.0) std::swap(a, b);
    snap.segments.push_back({a, b, normal, refined.parent[c]});
  }
  if (snap.segments.empty()) throw InterfaceLost("extract_zero_contour: interface lost (no sign change)");

  snap.vertex_side.resize(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) snap.vertex_side[v] = field->effective(v) > 0.0 ? 1 : -1;
  snap.centroid_side.resize(mesh.num_triangles());
  for (int p = 0; p < mesh.num_triangles(); ++p) {
    // The interior child has the parent's centroid as its own centroid.
    const auto& mid = fine.triangles[refined.children[p][3]];
    const double value = (field->values[mid[0]] + field->values[mid[1]] + field->values[mid[2]]) / 3.0;
    snap.centroid_side[p] = (std::abs(value) < field->snap_tolerance() || value > 0.0) ? 1 : -1;
  }
  return snap;
}

std::vector<std::array<Vec2, 2>> contour_pieces(const LevelSetField& field) {
  const BackgroundMesh& fine = field.mesh->mesh;
  std::vector<std::array<Vec2, 2>> out;
  for (int c = 0; c < fine.num_triangles(); ++c) {
    const auto& tri = fine.triangles[c];
    std::array<bool, 3> pos;
    for (int i = 0; i < 3; ++i) pos[i] = field.effective(tri[i]) > 0.0;
    if (pos[0] == pos[1] && pos[1] == pos[2]) continue;
    int lone = 0;
    if (pos[0] == pos[1]) lone = 2;
    else if (pos[0] == pos[2]) lone = 1;
    out.push_back({crossing(field, tri[lone], tri[(lone + 1) % 3]), crossing(field, tri[lone], tri[(lone + 2) % 3])});
  }
  return out;
}

std::vector<ElementLabel> classify_elements(const InterfaceSnapshot& snapshot, const BackgroundMesh& mesh) {
  std::vector<ElementLabel> labels(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t)
    labels[t] = snapshot.centroid_side[t] > 0 ? ElementLabel::inner : ElementLabel::outer;
  for (const auto& s : snapshot.segments) labels[s.host] = ElementLabel::cut;
  return labels;
}

double CutDecomposition::outer_area() const {
  double sum = 0.0;
  for (const auto& t : outer) sum += signed_area(t[0], t[1], t[2]);
  return sum;
}

double CutDecomposition::inner_area() const {
  double sum = 0.0;
  for (const auto& t : inner) sum += signed_area(t[0], t[1], t[2]);
  return sum;
}

CutDecomposition decompose_cut_cell(const LevelSetField& field, int parent) {
  const RefinedMesh& refined = *field.mesh;
  const BackgroundMesh& fine = refined.mesh;
  const double h = fine.cell_width();
  const double sliver = 1e-14 * h * h;

  CutDecomposition out;
  auto push = [&](bool inner, const Vec2& a, const Vec2& b, const Vec2& c) {
    if (signed_area(a, b, c) < sliver) return;
    (inner ? out.inner : out.outer).push_back({a, b, c});
  };

  for (int c : refined.children[parent]) {
    const auto& tri = fine.triangles[c];
    std::array<bool, 3> pos;
    for (int i = 0; i < 3; ++i) pos[i] = field.effective(tri[i]) > 0.0;
    const auto v = fine.corners(c);
    if (pos[0] == pos[1] && pos[1] == pos[2]) {
      push(pos[0], v[0], v[1], v[2]);
      continue;
    }
    int i = 0;
    if (pos[0] == pos[1]) i = 2;
    else if (pos[0] == pos[2]) i = 1;
    const int j = (i + 1) % 3;
    const int k = (i + 2) % 3;
    const Vec2 pij = crossing(field, tri[i], tri[j]);
    const Vec2 pik = crossing(field, tri[i], tri[k]);
    push(pos[i], v[i], pij, pik);
    push(pos[j], pij, v[j], v[k]);
    push(pos[j], pij, v[k], pik);
  }
  return out;
}

PolygonSideOracle::PolygonSideOracle(const std::vector<Vec2>& closed_polyline) : pts_(closed_polyline) {
  if (pts_.size() < 3) throw std::invalid_argument("PolygonSideOracle: need at least 3 points");
  y_min_ = y_max_ = pts_[0].y();
  for (const auto& p : pts_) {
    y_min_ = std::min(y_min_, p.y());
    y_max_ = std::max(y_max_, p.y());
  }
  const int nbins = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(pts_.size()))));
  bin_height_ = std::max((y_max_ - y_min_) / nbins, 1e-300);
  bins_.resize(nbins);
  const int n = static_cast<int>(pts_.size());
  for (int e = 0; e < n; ++e) {
    const Vec2& a = pts_[e];
    const Vec2& b = pts_[(e + 1) % n];
    int lo = static_cast<int>((std::min(a.y(), b.y()) - y_min_) / bin_height_);
    int hi = static_cast<int>((std::max(a.y(), b.y()) - y_min_) / bin_height_);
    lo = std::clamp(lo, 0, nbins - 1);
    hi = std::clamp(hi, 0, nbins - 1);
    for (int bin = lo; bin <= hi; ++bin) bins_[bin].push_back(e);
  }
}

bool PolygonSideOracle::inside(const Vec2& x) const {
  if (x.y() < y_min_ || x.y() > y_max_) return false;
  const int nbins = static_cast<int>(bins_.size());
  const int bin = std::clamp(static_cast<int>((x.y() - y_min_) / bin_height_), 0, nbins - 1);
  const int n = static_cast<int>(pts_.size());
  bool in = false;
  for (int e : bins_[bin]) {
    const Vec2& a = pts_[e];
    const Vec2& b = pts_[(e + 1) % n];
    if ((a.y() > x.y()) != (b.y() > x.y())) {
      const double xc = a.x() + (x.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
      if (x.x() < xc) in = !in;
    }
  }
  return in;
}

Projection closest_point_ellipse(const Vec2& x, double a) {
  if (!(a > 0.0)) throw std::invalid_argument("closest_point_ellipse: semi-axis must be positive");
  // G is minus half the derivative of the squared distance.
  auto G = [&](double s) {
    return (a * a - 1.0) * std::sin(s) * std::cos(s) - a * x.x() * std::sin(s) + x.y() * std::cos(s);
  };
  auto dG = [&](double s) {
    return (a * a - 1.0) * std::cos(2.0 * s) - a * x.x() * std::cos(s) - x.y() * std::sin(s);
  };
  auto dist2 = [&](double s) { return (x - Vec2(a * std::cos(s), std::sin(s))).squaredNorm(); };

  constexpr int kScan = 64;
  const double step = 2.0 * std::numbers::pi / kScan;
  int best = 0;
  double best_d = dist2(0.0);
  for (int i = 1; i < kScan; ++i) {
    const double d = dist2(i * step);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  double lo = (best - 1) * step;
  double hi = (best + 1) * step;
  const double scale = std::max({1.0, a * a, x.norm() * a});

  double s = best * step;
  bool converged = false;
  for (int it = 0; it < 50; ++it) {
    const double g = G(s);
    if (std::abs(g) < 1e-13 * scale) {
      converged = true;
      break;
    }
    // dist2' = -2 G, so G decreases through a minimum: keep the bracket
    // [lo, hi] with G(lo) > 0 > G(hi) when it is one.
    const double d = dG(s);
    double next = s - g / d;
    if (!(d < 0.0) || next <= lo || next >= hi) next = 0.5 * (lo + hi);
    if (G(next) > 0.0) lo = next;
    else hi = next;
    s = next;
  }
  if (!converged || dist2(s) > best_d + 1e-14) {
    // Golden-section search on the bracketing interval.
    double l = (best - 1) * step;
    double r = (best + 1) * step;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = r - phi * (r - l);
    double d = l + phi * (r - l);
    for (int it = 0; it < 200 && r - l > 1e-15; ++it) {
      if (dist2(c) < dist2(d)) r = d;
      else l = c;
      c = r - phi * (r - l);
      d = l + phi * (r - l);
    }
    s = 0.5 * (l + r);
  }
  Projection out;
  out.parameter = s;
  out.point = Vec2(a * std::cos(s), std::sin(s));
  out.normal = Vec2(out.point.x() / (a * a), out.point.y()).normalized();
  return out;
}

Projection closest_point_circle(const Vec2& x, const Vec2& center, double radius) {
  const Vec2 d = x - center;
  const double r = d.norm();
  if (!(r > 0.0)) throw std::domain_error("closest_point_circle: point at the center");
  Projection out;
  out.normal = d / r;
  out.point = center + radius * out.normal;
  out.parameter = std::atan2(d.y(), d.x());
  return out;
}

void write_snapshot_csv(std::ostream& out, const InterfaceSnapshot& snapshot, bool header) {
  if (header) out << "t,x1_start,y1_start,x1_end,y1_end,nx,ny,host_element\n";
  const auto old_precision = out.precision(17);
  for (const auto& s : snapshot.segments)
    out << snapshot.t << ',' << s.a.x() << ',' << s.a.y() << ',' << s.b.x() << ',' << s.b.y() << ',' << s.normal.x() << ','
        << s.normal.y() << ',' << s.host << '\n';
  out.precision(old_precision);
}

}  // namespace stcut
