#pragma once

// Per-element evaluation of the global Lagrange basis at physical points.

#include <span>
#include <vector>

#include "stcut/lagrange.hpp"

namespace stcut::detail {

struct ElementEvaluator {
  explicit ElementEvaluator(const DofHandler& handler)
      : handler(&handler),
        n(handler.dofs_per_element()),
        phi(n),
        dir(n),
        grad(n),
        ref_grad(n) {}

  void bind(int t) {
    element = t;
    map = AffineMap::of(handler->mesh(), t);
    dofs = handler->element_dofs(t);
  }

  /// Values and physical gradients at x.
  void at(const Vec2& x) {
    const Vec2 xi = map.to_reference(x);
    handler->basis().values(xi, phi);
    handler->basis().gradients(xi, ref_grad);
    for (int a = 0; a < n; ++a) grad[a] = map.physical_gradient(ref_grad[a]);
  }

  /// Order-r derivative along the physical direction d at x, into `dir`.
  void directional(const Vec2& x, const Vec2& d, int order) {
    handler->basis().directional(map.to_reference(x), map.reference_direction(d), order, dir);
  }

  const DofHandler* handler;
  int n;
  int element = -1;
  AffineMap map;
  std::span<const int> dofs;
  std::vector<double> phi;
  std::vector<double> dir;
  std::vector<Vec2> grad;
  std::vector<Vec2> ref_grad;
};

}  // namespace stcut::detail
