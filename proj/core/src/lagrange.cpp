#include "stcut/lagrange.hpp"

#include <cmath>
#include <stdexcept>

namespace stcut {

Poly2 Poly2::constant(double c) {
  Poly2 p;
  p(0, 0) = c;
  return p;
}

Poly2 Poly2::monomial(int a, int b, double c) {
  Poly2 p;
  p(a, b) = c;
  return p;
}

Poly2 Poly2::operator+(const Poly2& o) const {
  Poly2 r;
  for (int i = 0; i < 16; ++i) r.coeffs_[i] = coeffs_[i] + o.coeffs_[i];
  return r;
}

Poly2 Poly2::operator*(double s) const {
  Poly2 r;
  for (int i = 0; i < 16; ++i) r.coeffs_[i] = coeffs_[i] * s;
  return r;
}

Poly2 Poly2::operator*(const Poly2& o) const {
  Poly2 r;
  for (int a = 0; a <= kMaxDegree; ++a)
    for (int b = 0; a + b <= kMaxDegree; ++b) {
      if ((*this)(a, b) == 0.0) continue;
      for (int c = 0; c <= kMaxDegree; ++c)
        for (int d = 0; c + d <= kMaxDegree; ++d) {
          const double prod = (*this)(a, b) * o(c, d);
          if (prod == 0.0) continue;
          if (a + b + c + d > kMaxDegree) throw std::logic_error("Poly2 product exceeds degree 3");
          r(a + c, b + d) += prod;
        }
    }
  return r;
}

Poly2 Poly2::dxi() const {
  Poly2 r;
  for (int a = 1; a <= kMaxDegree; ++a)
    for (int b = 0; a + b <= kMaxDegree; ++b) r(a - 1, b) = a * (*this)(a, b);
  return r;
}

Poly2 Poly2::deta() const {
  Poly2 r;
  for (int a = 0; a <= kMaxDegree; ++a)
    for (int b = 1; a + b <= kMaxDegree; ++b) r(a, b - 1) = b * (*this)(a, b);
  return r;
}

double Poly2::operator()(const Vec2& xi) const {
  // Horner in eta for each power of xi.
  double result = 0.0;
  for (int a = kMaxDegree; a >= 0; --a) {
    double inner = 0.0;
    for (int b = kMaxDegree - a; b >= 0; --b) inner = inner * xi.y() + (*this)(a, b);
    result = result * xi.x() + inner;
  }
  return result;
}

LagrangeBasis::LagrangeBasis(int degree) : degree_(degree) {
  if (degree < 1 || degree > 3) throw std::invalid_argument("LagrangeBasis: degree must be 1, 2 or 3");
  const int p = degree;

  // Barycentric lattice points (i0, i1, i2), i0 + i1 + i2 = p.
  std::vector<std::array<int, 3>> lattice = {{p, 0, 0}, {0, p, 0}, {0, 0, p}};
  const std::array<std::array<int, 2>, 3> edges = {{{0, 1}, {1, 2}, {2, 0}}};
  for (const auto& e : edges)
    for (int k = 1; k < p; ++k) {
      std::array<int, 3> l{0, 0, 0};
      l[e[0]] = p - k;
      l[e[1]] = k;
      lattice.push_back(l);
    }
  if (p == 3) lattice.push_back({1, 1, 1});

  const std::array<Poly2, 3> bary = {
      Poly2::constant(1.0) + Poly2::monomial(1, 0, -1.0) + Poly2::monomial(0, 1, -1.0),
      Poly2::monomial(1, 0),
      Poly2::monomial(0, 1),
  };

  for (const auto& l : lattice) {
    nodes_.emplace_back(static_cast<double>(l[1]) / p, static_cast<double>(l[2]) / p);
    Poly2 phi = Poly2::constant(1.0);
    for (int c = 0; c < 3; ++c)
      for (int m = 0; m < l[c]; ++m)
        phi = phi * ((bary[c] * static_cast<double>(p) + Poly2::constant(-m)) * (1.0 / (m + 1)));
    polys_.push_back(phi);
  }

  for (int r = 0; r <= 3; ++r) {
    partials_[r].resize(r + 1);
    for (int a = 0; a <= r; ++a) {
      for (const Poly2& phi : polys_) {
        Poly2 d = phi;
        for (int i = 0; i < a; ++i) d = d.dxi();
        for (int i = 0; i < r - a; ++i) d = d.deta();
        partials_[r][a].push_back(d);
      }
    }
  }
}

void LagrangeBasis::values(const Vec2& xi, std::span<double> out) const {
  for (int i = 0; i < size(); ++i) out[i] = polys_[i](xi);
}

void LagrangeBasis::gradients(const Vec2& xi, std::span<Vec2> out) const {
  // partials_[1][1] is d/dxi, partials_[1][0] is d/deta.
  for (int i = 0; i < size(); ++i) out[i] = Vec2(partials_[1][1][i](xi), partials_[1][0][i](xi));
}

void LagrangeBasis::directional(const Vec2& xi, const Vec2& e, int order, std::span<double> out) const {
  if (order < 0 || order > 3) throw std::invalid_argument("LagrangeBasis::directional: order must be in [0, 3]");
  static constexpr int binom[4][4] = {{1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
  for (int i = 0; i < size(); ++i) out[i] = 0.0;
  for (int a = 0; a <= order; ++a) {
    const double w = binom[order][a] * std::pow(e.x(), a) * std::pow(e.y(), order - a);
    if (w == 0.0) continue;
    for (int i = 0; i < size(); ++i) out[i] += w * partials_[order][a][i](xi);
  }
}

AffineMap AffineMap::of(const BackgroundMesh& mesh, int t) {
  const auto c = mesh.corners(t);
  AffineMap m;
  m.origin = c[0];
  m.jacobian.col(0) = c[1] - c[0];
  m.jacobian.col(1) = c[2] - c[0];
  m.inverse = m.jacobian.inverse();
  return m;
}

DofHandler::DofHandler(const BackgroundMesh& mesh, int degree) : mesh_(&mesh), basis_(degree) {
  const int p = degree;
  const int nv = mesh.num_vertices();
  const int nf = mesh.num_faces();
  const int nt = mesh.num_triangles();
  const int per_edge = p - 1;
  const int n_interior = p == 3 ? 1 : 0;
  points_.resize(static_cast<std::size_t>(nv) + static_cast<std::size_t>(nf) * per_edge +
                 static_cast<std::size_t>(nt) * n_interior);

  for (int v = 0; v < nv; ++v) points_[v] = mesh.vertices[v];
  for (int f = 0; f < nf; ++f) {
    const Vec2& a = mesh.vertices[mesh.faces[f].vertices[0]];
    const Vec2& b = mesh.vertices[mesh.faces[f].vertices[1]];
    for (int r = 0; r < per_edge; ++r) points_[nv + f * per_edge + r] = a + (static_cast<double>(r + 1) / p) * (b - a);
  }
  for (int t = 0; n_interior && t < nt; ++t) points_[nv + nf * per_edge + t] = mesh.centroid(t);

  const int nloc = basis_.size();
  element_dofs_.resize(static_cast<std::size_t>(nt) * nloc);
  const std::array<std::array<int, 2>, 3> edges = {{{0, 1}, {1, 2}, {2, 0}}};
  for (int t = 0; t < nt; ++t) {
    int* dofs = element_dofs_.data() + static_cast<std::size_t>(t) * nloc;
    const auto& tri = mesh.triangles[t];
    for (int v = 0; v < 3; ++v) dofs[v] = tri[v];
    int slot = 3;
    for (const auto& e : edges) {
      const int opposite = 3 - e[0] - e[1];
      const int f = mesh.triangle_faces[t][opposite];
      const bool forward = mesh.faces[f].vertices[0] == tri[e[0]];
      for (int k = 1; k < p; ++k) {
        const int r = forward ? k - 1 : p - 1 - k;
        dofs[slot++] = nv + f * per_edge + r;
      }
    }
    if (n_interior) dofs[slot++] = nv + nf * per_edge + t;
  }
}

std::array<double, 3> TimeBasis::values(double t) const {
  const double x = s(t);
  return {1.0, x, x * x};
}

std::array<double, 3> TimeBasis::derivatives(double t) const {
  const double x = s(t);
  return {0.0, 1.0 / k, 2.0 * x / k};
}

}  // namespace stcut
