#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "stcut/interface_geometry.hpp"
#include "stcut/interface_evolution.hpp"

using namespace stcut;

namespace {

constexpr double kPi = std::numbers::pi;

std::shared_ptr<const LevelSetField> circle_field(const BackgroundMesh& mesh, const Vec2& c, double r) {
  auto refined = std::make_shared<const RefinedMesh>(refine_once(mesh));
  return std::make_shared<const LevelSetField>(
      interpolate_level_set(refined, [c, r](const Vec2& x) { return r - (x - c).norm(); }));
}

// Each endpoint must be shared by exactly two segments (start of one, end of another).
void expect_closed(const InterfaceSnapshot& s, double tol) {
  for (std::size_t i = 0; i < s.segments.size(); ++i) {
    int starts = 0, ends = 0;
    for (const auto& o : s.segments) {
      starts += (o.a - s.segments[i].b).norm() < tol;
      ends += (o.b - s.segments[i].a).norm() < tol;
    }
    EXPECT_GE(starts, 1) << i;
    EXPECT_GE(ends, 1) << i;
  }
}

}  // namespace

TEST(ZeroContour, LinearInterpolationOfCrossings) {
  // Refined spacing 1; phi = x + y - 0.5 crosses the corner cell from
  // (0.5, 0) to (0, 0.5), split across the two refined triangles.
  const BackgroundMesh mesh = build_uniform_mesh({0, 0, 4, 4}, 2);
  auto refined = std::make_shared<const RefinedMesh>(refine_once(mesh));
  const LevelSetField f = interpolate_level_set(refined, [](const Vec2& x) { return x.x() + x.y() - 0.5; });
  double length = 0.0;
  int pieces = 0;
  for (const auto& p : contour_pieces(f)) {
    for (const Vec2& x : p) {
      EXPECT_NEAR(x.x() + x.y(), 0.5, 1e-15);
      EXPECT_GE(x.x(), -1e-15);
      EXPECT_GE(x.y(), -1e-15);
    }
    length += (p[1] - p[0]).norm();
    ++pieces;
  }
  EXPECT_EQ(pieces, 2);
  EXPECT_NEAR(length, std::sqrt(0.5), 1e-15);
}

TEST(ZeroContour, NormalNearRightmostPoint) {
  const BackgroundMesh mesh = build_uniform_mesh({-1.5, -1.5, 1.5, 1.5}, 16);
  auto refined = std::make_shared<const RefinedMesh>(refine_once(mesh));
  auto field = std::make_shared<const LevelSetField>(
      interpolate_level_set(refined, [](const Vec2& x) { return x.squaredNorm() - 1.0; }));
  const InterfaceSnapshot s = extract_zero_contour(mesh, field, 0.0);
  const InterfaceSegment* best = &s.segments.front();
  for (const auto& seg : s.segments)
    if ((seg.midpoint() - Vec2(1, 0)).norm() < (best->midpoint() - Vec2(1, 0)).norm()) best = &seg;
  // Positive phase is the exterior here, so the normal points outward.
  EXPECT_NEAR(best->normal.x(), 1.0, 0.02);
  EXPECT_NEAR(best->normal.norm(), 1.0, 1e-14);
}

TEST(ZeroContour, CircleLengthSecondOrder) {
  double err[2];
  int i = 0;
  for (int n : {32, 64}) {
    const BackgroundMesh mesh = build_uniform_mesh({-1.5, -1.5, 1.5, 1.5}, n);
    const InterfaceSnapshot s = extract_zero_contour(mesh, circle_field(mesh, Vec2(0, 0), 1.0), 0.0);
    err[i++] = std::abs(s.length() - 2 * kPi);
    EXPECT_LT(err[i - 1], mesh.cell_width() * mesh.cell_width());
  }
  EXPECT_GT(err[0] / err[1], 3.0);
}

TEST(ZeroContour, SnapshotInvariants) {
  const BackgroundMesh mesh = build_uniform_mesh({-1, -1, 1, 1}, 16);
  const InterfaceSnapshot s = extract_zero_contour(mesh, circle_field(mesh, Vec2(0.1, 0.0), 0.3), 0.7);
  EXPECT_DOUBLE_EQ(s.t, 0.7);
  expect_closed(s, 1e-13);
  for (const auto& seg : s.segments) {
    EXPECT_NEAR(seg.normal.norm(), 1.0, 1e-14);
    EXPECT_TRUE(mesh.contains(seg.host, seg.a, 1e-10 * mesh.h));
    EXPECT_TRUE(mesh.contains(seg.host, seg.b, 1e-10 * mesh.h));
    // Inner phase on the left of a -> b, normal pointing into it.
    const Vec2 t = seg.b - seg.a;
    EXPECT_GT(Vec2(-t.y(), t.x()).dot(seg.normal), 0.0);
  }
  EXPECT_GT(s.enclosed_area(), 0.0);
}

TEST(ZeroContour, EmptyContourThrows) {
  const BackgroundMesh mesh = build_uniform_mesh({-1, -1, 1, 1}, 4);
  auto refined = std::make_shared<const RefinedMesh>(refine_once(mesh));
  auto field = std::make_shared<const LevelSetField>(interpolate_level_set(refined, [](const Vec2&) { return 1.0; }));
  EXPECT_THROW(extract_zero_contour(mesh, field, 0.0), InterfaceLost);
}

TEST(ZeroContour, AddingZeroIsBitwiseIdentical) {
  const BackgroundMesh mesh = build_uniform_mesh({-1, -1, 1, 1}, 12);
  auto f = circle_field(mesh, Vec2(0.05, -0.1), 0.45);
  auto g = std::make_shared<LevelSetField>(*f);
  g->values = g->values.array() + 0.0;
  const InterfaceSnapshot a = extract_zero_contour(mesh, f, 0.0);
  const InterfaceSnapshot b = extract_zero_contour(mesh, g, 0.0);
  ASSERT_EQ(a.segments.size(), b.segments.size());
  for (std::size_t i = 0; i < a.segments.size(); ++i) {
    EXPECT_EQ(a.segments[i].a, b.segments[i].a);
    EXPECT_EQ(a.segments[i].b, b.segments[i].b);
    EXPECT_EQ(a.segments[i].host, b.segments[i].host);
  }
}

TEST(ZeroContour, SnapRuleTreatsTinyValuesAsPositive) {
  const BackgroundMesh mesh = build_uniform_mesh({-1, -1, 1, 1}, 4);
  auto refined = std::make_shared<const RefinedMesh>(refine_once(mesh));
  LevelSetField f = interpolate_level_set(refined, [](const Vec2& x) { return x.x(); });
  for (int v = 0; v < refined->mesh.num_vertices(); ++v)
    if (refined->mesh.vertices[v].x() == 0.0) {
      f.values[v] = -0.1 * f.snap_tolerance();
      EXPECT_GT(f.effective(v), 0.0);
    }
}

TEST(ZeroContour, NodalInterpolantErrorSecondOrder) {
  // phi(x) = x^2 / 1.44 + y^2 - 1 is not a distance, so the interpolation
  // error on the contour is visible.
  auto phi = [](const Vec2& x) { return x.x() * x.x() / 1.44 + x.y() * x.y() - 1.0; };
  double err[2];
  int i = 0;
  for (int n : {16, 32}) {
    const BackgroundMesh mesh = build_uniform_mesh({-1.5, -1.5, 1.5, 1.5}, n);
    auto refined = std::make_shared<const RefinedMesh>(refine_once(mesh));
    const LevelSetField f = interpolate_level_set(refined, phi);
    double worst = 0.0;
    for (const auto& p : contour_pieces(f))
      for (const Vec2& x : p) worst = std::max(worst, std::abs(phi(x)));
    err[i++] = worst;
  }
  EXPECT_GT(err[0] / err[1], 3.0);
  EXPECT_LT(err[1], 0.01);
}

TEST(ClassifyElements, InsideCutAndBruteForceCount) {
  const BackgroundMesh mesh = build_uniform_mesh({-1, -1, 1, 1}, 16);
  auto field = circle_field(mesh, Vec2(0, 0), 0.5);
  const InterfaceSnapshot s = extract_zero_contour(mesh, field, 0.0);
  const auto labels = classify_elements(s, mesh);
  EXPECT_EQ(labels[mesh.locate(Vec2(0.01, 0.02))], ElementLabel::inner);
  EXPECT_EQ(labels[mesh.locate(Vec2(0.9, 0.9))], ElementLabel::outer);
  for (const auto& seg : s.segments) EXPECT_EQ(labels[seg.host], ElementLabel::cut);

  // Brute force: parents with a refined child of mixed vertex signs.
  const RefinedMesh& r = *field->mesh;
  int brute = 0, cut = 0;
  for (int p = 0; p < mesh.num_triangles(); ++p) {
    bool mixed = false;
    for (int c : r.children[p]) {
      int pos = 0;
      for (int v : r.mesh.triangles[c]) pos += field->effective(v) > 0.0;
      mixed = mixed || (pos > 0 && pos < 3);
    }
    brute += mixed;
    cut += labels[p] == ElementLabel::cut;
  }
  EXPECT_EQ(cut, brute);
}

TEST(CutDecomposition, CanonicalMidpointSplit) {
  const BackgroundMesh mesh = build_uniform_mesh({0, 0, 4, 4}, 4);
  auto refined = std::make_shared<const RefinedMesh>(refine_once(mesh));
  // Positive only at the parent vertex (1, 1): every child touching it is
  // cut through its two edge midpoints next to that vertex.
  LevelSetField f;
  f.mesh = refined;
  f.values = Eigen::VectorXd::Constant(refined->mesh.num_vertices(), -1.0);
  int apex = -1;
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if ((mesh.vertices[v] - Vec2(1, 1)).norm() < 1e-14) apex = v;
  ASSERT_GE(apex, 0);
  f.values[apex] = 1.0;
  const double cell = 0.5 * 0.5;  // refined cell area
  for (int p = 0; p < mesh.num_triangles(); ++p) {
    const auto& tri = mesh.triangles[p];
    if (std::find(tri.begin(), tri.end(), apex) == tri.end()) continue;
    const CutDecomposition d = decompose_cut_cell(f, p);
    EXPECT_EQ(d.inner.size(), 1u);
    EXPECT_NEAR(d.inner_area(), cell / 8.0, 1e-15);
    EXPECT_NEAR(d.inner_area() + d.outer_area(), mesh.area(p), 1e-12 * mesh.area(p));
  }
}

TEST(CutDecomposition, AreasSumToParentAndDiskArea) {
  const BackgroundMesh mesh = build_uniform_mesh({-1, -1, 1, 1}, 16);
  auto field = circle_field(mesh, Vec2(0.1, 0.0), 0.3);
  const InterfaceSnapshot s = extract_zero_contour(mesh, field, 0.0);
  const auto labels = classify_elements(s, mesh);
  double inner = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (labels[t] == ElementLabel::inner) inner += mesh.area(t);
    if (labels[t] != ElementLabel::cut) continue;
    const CutDecomposition d = decompose_cut_cell(*field, t);
    EXPECT_NEAR(d.inner_area() + d.outer_area(), mesh.area(t), 1e-12 * mesh.area(t));
    inner += d.inner_area();
  }
  const double h = mesh.cell_width();
  EXPECT_NEAR(inner, kPi * 0.09, h * h);
  // Two routes to the same polygon area.
  EXPECT_NEAR(inner, s.enclosed_area(), 1e-12 * inner);
}

TEST(Spline, InterpolatesSquareMarkers) {
  const std::vector<Vec2> m{{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  const SplineInterface s = fit_periodic_spline(m);
  for (int l = 0; l < 4; ++l) EXPECT_LT((s.position(s.knots[l]) - m[l]).norm(), 1e-12);
  EXPECT_LT((s.position(s.period()) - m[0]).norm(), 1e-12);
}

TEST(Spline, PeriodicC2AtEveryKnot) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  std::vector<Vec2> m;
  for (int l = 0; l < 13; ++l) {
    const double a = 2 * kPi * l / 13;
    m.emplace_back((1 + jitter(rng)) * std::cos(a), (1 + jitter(rng)) * std::sin(a));
  }
  const SplineInterface s = fit_periodic_spline(m);
  const double eps = 1e-9;
  for (int l = 0; l <= 13; ++l) {
    const double a = s.knots[l];
    const double lo = a - eps < 0 ? a - eps + s.period() : a - eps;
    EXPECT_LT((s.position(lo) - s.position(a + eps)).norm(), 1e-8);
    EXPECT_LT((s.derivative(lo) - s.derivative(a + eps)).norm(), 1e-7);
    EXPECT_LT((s.second_derivative(lo) - s.second_derivative(a + eps)).norm(), 1e-6);
  }
}

TEST(Spline, RejectsBadMarkers) {
  EXPECT_THROW(fit_periodic_spline({{0, 0}, {1, 0}, {0, 1}}), std::invalid_argument);
  EXPECT_THROW(fit_periodic_spline({{0, 0}, {1, 0}, {1, 0}, {0, 1}}), std::invalid_argument);
}

TEST(Spline, NormalPointsInwardForCounterclockwiseCircle) {
  const SplineInterface s = fit_periodic_spline(circle_markers(Vec2(0, 0), 1.0, 32));
  for (int i = 0; i < 20; ++i) {
    const double a = s.period() * i / 20.0;
    EXPECT_LT(s.normal(a).dot(s.position(a)), -0.99);
  }
}

TEST(Spline, CircleDistanceAndNormalOrders) {
  double dist[2], nerr[2];
  int i = 0;
  for (int M : {32, 64}) {
    const SplineInterface s = fit_periodic_spline(circle_markers(Vec2(0, 0), 1.0, M));
    double d = 0.0, ne = 0.0;
    for (int j = 0; j < 4000; ++j) {
      const double a = s.period() * (j + 0.5) / 4000;
      const Vec2 x = s.position(a);
      d = std::max(d, std::abs(x.norm() - 1.0));
      ne = std::max(ne, (s.normal(a) + x.normalized()).norm());
    }
    dist[i] = d;
    nerr[i++] = ne;
  }
  EXPECT_GT(std::log2(dist[0] / dist[1]), 3.7);
  EXPECT_GT(std::log2(nerr[0] / nerr[1]), 2.7);
}

TEST(SplineSnapshot, ClosedHostedAndConverging) {
  const BackgroundMesh mesh = build_uniform_mesh({-1.5, -1.5, 1.5, 1.5}, 10);
  const SplineInterface s = fit_periodic_spline(circle_markers(Vec2(0, 0), 1.0, 24));
  double prev_err = 1.0;
  for (int spk : {2, 8, 32}) {
    const InterfaceSnapshot snap = spline_to_snapshot(s, mesh, 0.0, spk);
    expect_closed(snap, 1e-12);
    for (const auto& seg : snap.segments) {
      EXPECT_TRUE(mesh.contains(seg.host, seg.midpoint(), 1e-12));
      EXPECT_NEAR(seg.normal.norm(), 1.0, 1e-14);
    }
    const double err = std::abs(snap.length() - 2 * kPi);
    EXPECT_LT(err, prev_err);
    prev_err = err;
    // Inscribed chords of length c lose about pi c^2 / 6 of the disk; the
    // spline itself is off by O(h_alpha^4).
    const double c = 2 * kPi / (24 * spk);
    EXPECT_NEAR(snap.enclosed_area(), kPi, 0.6 * c * c + 0.1 * std::pow(s.h_alpha, 4));
  }
}

TEST(ClosestPointEllipse, SymmetryAxes) {
  Projection p = closest_point_ellipse(Vec2(2, 0), 1.25);
  EXPECT_NEAR((p.point - Vec2(1.25, 0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((p.normal - Vec2(1, 0)).norm(), 0.0, 1e-12);
  for (double a : {0.8, 1.0, 1.25}) {
    p = closest_point_ellipse(Vec2(0, 2), a);
    EXPECT_NEAR((p.point - Vec2(0, 1)).norm(), 0.0, 1e-12);
    EXPECT_NEAR((p.normal - Vec2(0, 1)).norm(), 0.0, 1e-12);
  }
}

TEST(ClosestPointEllipse, MatchesDenseScan) {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> ang(0, 2 * kPi), off(-0.3, 0.3);
  const double a = 1.2;
  for (int trial = 0; trial < 8; ++trial) {
    const double s = ang(rng);
    const Vec2 on(a * std::cos(s), std::sin(s));
    const Vec2 n = Vec2(on.x() / (a * a), on.y()).normalized();
    const Vec2 x = on + off(rng) * n;
    double best = 1e300;
    constexpr int kScan = 1000000;
    for (int j = 0; j < kScan; ++j) {
      const double t = 2 * kPi * j / kScan;
      best = std::min(best, (x - Vec2(a * std::cos(t), std::sin(t))).norm());
    }
    const Projection p = closest_point_ellipse(x, a);
    EXPECT_NEAR((x - p.point).norm(), best, 1e-6);
    EXPECT_NEAR(p.point.x() * p.point.x() / (a * a) + p.point.y() * p.point.y(), 1.0, 1e-12);
  }
}

TEST(Curvature, Circles) {
  AnalyticLevelSet unit{[](double, const Vec2& x) { return x.squaredNorm() - 1.0; },
                        [](double, const Vec2& x) { return Vec2(2 * x); },
                        [](double, const Vec2&) { return Mat2(2 * Mat2::Identity()); }};
  EXPECT_NEAR(levelset_curvature(unit, Vec2(1, 0), 0.0), 1.0, 1e-14);
  AnalyticLevelSet big{[](double, const Vec2& x) { return x.norm() - 2.0; },
                       [](double, const Vec2& x) { return Vec2(x / x.norm()); },
                       [](double, const Vec2& x) {
                         const double r = x.norm();
                         return Mat2((Mat2::Identity() - x * x.transpose() / (r * r)) / r);
                       }};
  EXPECT_NEAR(levelset_curvature(big, Vec2(0, 2), 0.0), 0.5, 1e-14);
  EXPECT_THROW(levelset_curvature(unit, Vec2(0, 0), 0.0), std::domain_error);
}

TEST(Curvature, EllipseMatchesFiniteDifferences) {
  const double a = 1.25;
  AnalyticLevelSet phi{[a](double, const Vec2& x) { return x.x() * x.x() / (a * a) + x.y() * x.y() - 1; },
                       [a](double, const Vec2& x) { return Vec2(2 * x.x() / (a * a), 2 * x.y()); },
                       [a](double, const Vec2&) {
                         Mat2 H = Mat2::Zero();
                         H(0, 0) = 2 / (a * a);
                         H(1, 1) = 2;
                         return H;
                       }};
  auto unit_normal = [&](const Vec2& x) { return Vec2(phi.gradient(0, x).normalized()); };
  for (const Vec2& x : {Vec2(a, 0), Vec2(0.7, 0.6), Vec2(-0.3, 0.95)}) {
    const double e = 1e-5;
    const double fd = (unit_normal(x + Vec2(e, 0)).x() - unit_normal(x - Vec2(e, 0)).x()) / (2 * e) +
                      (unit_normal(x + Vec2(0, e)).y() - unit_normal(x - Vec2(0, e)).y()) / (2 * e);
    EXPECT_NEAR(levelset_curvature(phi, x, 0.0), fd, 1e-6);
  }
}

TEST(SnapshotCsv, HeaderAndColumns) {
  InterfaceSnapshot s;
  s.t = 0.5;
  s.segments.push_back({Vec2(0, 0), Vec2(1, 0), Vec2(0, 1), 7});
  std::ostringstream out;
  write_snapshot_csv(out, s);
  std::istringstream in(out.str());
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "t,x1_start,y1_start,x1_end,y1_end,nx,ny,host_element");
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 7);
  EXPECT_EQ(row.substr(row.rfind(',') + 1), "7");
}
