#include "stcut/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include <boost/math/special_functions/legendre.hpp>

namespace stcut {

TimeQuadrature newton_cotes(int num_points, double t0, double t1) {
  const double k = t1 - t0;
  TimeQuadrature rule;
  switch (num_points) {
    case 2:
      rule.points = {t0, t1};
      rule.weights = {k / 2.0, k / 2.0};
      rule.precision = 1;
      break;
    case 3:
      rule.points = {t0, 0.5 * (t0 + t1), t1};
      rule.weights = {k / 6.0, 4.0 * k / 6.0, k / 6.0};
      rule.precision = 3;
      break;
    case 5:
      rule.points = {t0, (3.0 * t0 + t1) / 4.0, 0.5 * (t0 + t1), (t0 + 3.0 * t1) / 4.0, t1};
      rule.weights = {7.0 * k / 90.0, 32.0 * k / 90.0, 12.0 * k / 90.0, 32.0 * k / 90.0, 7.0 * k / 90.0};
      rule.precision = 5;
      break;
    default:
      throw std::invalid_argument("newton_cotes: supported point counts are 2, 3 and 5");
  }
  return rule;
}

int newton_cotes_points_for(int q) {
  if (q <= 1) return 3;
  if (q == 2) return 5;
  throw std::invalid_argument("newton_cotes_points_for: time degree must be 0, 1 or 2");
}

const LineRule& gauss_legendre_unit(int degree) {
  if (degree < 0 || degree > 13) throw std::invalid_argument("gauss_legendre_unit: degree must be in [0, 13]");
  static std::mutex guard;
  static std::map<int, LineRule> cache;
  const int n = std::max(1, (degree + 2) / 2);
  std::lock_guard lock(guard);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  // legendre_p_zeros returns the non-negative roots in increasing order.
  const std::vector<double> roots = boost::math::legendre_p_zeros<double>(n);
  std::vector<double> nodes;
  for (double r : roots) {
    nodes.push_back(r);
    if (r > 0.0) nodes.push_back(-r);
  }
  std::sort(nodes.begin(), nodes.end());
  LineRule rule;
  for (double x : nodes) {
    const double dp = boost::math::legendre_p_prime(n, x);
    rule.points.push_back(0.5 * (x + 1.0));
    rule.weights.push_back(0.5 * 2.0 / ((1.0 - x * x) * dp * dp));
  }
  return cache.emplace(n, std::move(rule)).first->second;
}

std::vector<QuadraturePoint> gauss_on_segment(const Vec2& a, const Vec2& b, int degree) {
  const LineRule& rule = gauss_legendre_unit(degree);
  const double length = (b - a).norm();
  std::vector<QuadraturePoint> out;
  out.reserve(rule.points.size());
  for (std::size_t i = 0; i < rule.points.size(); ++i)
    out.push_back({a + rule.points[i] * (b - a), rule.weights[i] * length});
  return out;
}

namespace {

// Adds the orbit of barycentric (l0, l1, l2) with the given weight (for the
// whole orbit member), skipping duplicate permutations.
void add_orbit(TriangleRule& rule, double l0, double l1, double l2, double weight) {
  std::array<std::array<double, 3>, 6> perms = {{
      {l0, l1, l2}, {l0, l2, l1}, {l1, l0, l2}, {l1, l2, l0}, {l2, l0, l1}, {l2, l1, l0}}};
  std::vector<std::array<double, 3>> seen;
  for (const auto& p : perms) {
    bool dup = false;
    for (const auto& s : seen)
      if (std::abs(s[0] - p[0]) < 1e-15 && std::abs(s[1] - p[1]) < 1e-15) dup = true;
    if (dup) continue;
    seen.push_back(p);
    rule.points.emplace_back(p[1], p[2]);
    rule.weights.push_back(weight);
  }
}

TriangleRule build_triangle_rule(int degree) {
  TriangleRule rule;
  switch (degree) {
    case 0:
    case 1:
      add_orbit(rule, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.5);
      return rule;
    case 2:
      add_orbit(rule, 2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0);
      return rule;
    case 4: {
      const double a = 0.445948490915965, wa = 0.223381589678011;
      const double b = 0.091576213509771, wb = 0.109951743655322;
      add_orbit(rule, 1.0 - 2.0 * a, a, a, 0.5 * wa);
      add_orbit(rule, 1.0 - 2.0 * b, b, b, 0.5 * wb);
      return rule;
    }
    case 5: {
      const double s15 = std::sqrt(15.0);
      const double a = (6.0 - s15) / 21.0, wa = (155.0 - s15) / 1200.0;
      const double b = (6.0 + s15) / 21.0, wb = (155.0 + s15) / 1200.0;
      add_orbit(rule, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.5 * 9.0 / 40.0);
      add_orbit(rule, 1.0 - 2.0 * a, a, a, 0.5 * wa);
      add_orbit(rule, 1.0 - 2.0 * b, b, b, 0.5 * wb);
      return rule;
    }
    default:
      break;
  }
  // Collapsed (Duffy) product rule: x = u, y = v (1 - u) has Jacobian (1 - u),
  // so the u-direction needs one extra degree. Averaging over the six
  // barycentric permutations keeps exactness and makes the rule symmetric.
  const LineRule& gu = gauss_legendre_unit(degree + 1);
  const LineRule& gv = gauss_legendre_unit(degree);
  for (std::size_t i = 0; i < gu.points.size(); ++i) {
    for (std::size_t j = 0; j < gv.points.size(); ++j) {
      const double u = gu.points[i];
      const double v = gv.points[j] * (1.0 - u);
      const double w = gu.weights[i] * gv.weights[j] * (1.0 - u);
      const std::array<double, 3> l = {1.0 - u - v, u, v};
      const std::array<std::array<int, 3>, 6> perms = {{{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
      for (const auto& p : perms) {
        rule.points.emplace_back(l[p[1]], l[p[2]]);
        rule.weights.push_back(w / 6.0);
      }
    }
  }
  return rule;
}

}  // namespace

const TriangleRule& reference_triangle_rule(int degree) {
  if (degree < 0 || degree > 10) throw std::invalid_argument("reference_triangle_rule: degree must be in [0, 10]");
  static std::mutex guard;
  static std::map<int, TriangleRule> cache;
  const int effective = degree == 3 ? 4 : degree;
  std::lock_guard lock(guard);
  auto it = cache.find(effective);
  if (it != cache.end()) return it->second;
  return cache.emplace(effective, build_triangle_rule(effective)).first->second;
}

std::vector<QuadraturePoint> gauss_on_triangle(const Vec2& a, const Vec2& b, const Vec2& c, int degree) {
  const Vec2 e1 = b - a;
  const Vec2 e2 = c - a;
  const double jac = e1.x() * e2.y() - e1.y() * e2.x();
  if (!(std::abs(jac) > 0.0)) throw std::invalid_argument("gauss_on_triangle: degenerate triangle");
  const TriangleRule& rule = reference_triangle_rule(degree);
  std::vector<QuadraturePoint> out;
  out.reserve(rule.points.size());
  for (std::size_t i = 0; i < rule.points.size(); ++i) {
    const Vec2& r = rule.points[i];
    out.push_back({a + r.x() * e1 + r.y() * e2, rule.weights[i] * std::abs(jac)});
  }
  return out;
}

}  // namespace stcut
