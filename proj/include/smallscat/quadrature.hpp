/// \file smallscat/quadrature.hpp
/// \brief Gauss-Legendre rules and volume integrals of the Helmholtz kernel
/// over axis-aligned boxes.

#pragma once

#include "smallscat/types.hpp"

#include <array>
#include <vector>

namespace smallscat {

struct GaussRule {
  std::vector<Real> nodes;    ///< on [-1, 1]
  std::vector<Real> weights;
};

/// n-point Gauss-Legendre rule by Newton iteration on P_n.
inline GaussRule gauss_legendre(int n) {
  GaussRule g;
  g.nodes.resize(n);
  g.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    Real x = std::cos(pi * (i + 0.75) / (n + 0.5));
    Real dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      Real p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const Real p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * x * p2 - (j - 1.0) * p3) / j;
      }
      dp = n * (x * p1 - p2) / (x * x - 1.0);
      const Real dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    g.nodes[i] = x;
    g.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return g;
}

inline const GaussRule& cached_rule(int n) {
  static const std::array<GaussRule, 9> rules = [] {
    std::array<GaussRule, 9> r;
    for (int i = 1; i < 9; ++i) r[i] = gauss_legendre(i);
    return r;
  }();
  return rules.at(n);
}

namespace detail {
/// Corner antiderivative of 1/r; log terms written as asinh so that the
/// transverse ln(rho) pieces, which cancel between corners, never appear.
inline Real newton_corner(Real x, Real y, Real z) {
  const Real r = std::sqrt(x * x + y * y + z * z);
  Real f = 0.0;
  const Real ryz = std::hypot(y, z), rxz = std::hypot(x, z), rxy = std::hypot(x, y);
  if (y != 0.0 && z != 0.0) f += y * z * std::asinh(x / ryz);
  if (x != 0.0 && z != 0.0) f += x * z * std::asinh(y / rxz);
  if (x != 0.0 && y != 0.0) f += x * y * std::asinh(z / rxy);
  if (x != 0.0) f -= 0.5 * x * x * std::atan(y * z / (x * r));
  if (y != 0.0) f -= 0.5 * y * y * std::atan(x * z / (y * r));
  if (z != 0.0) f -= 0.5 * z * z * std::atan(x * y / (z * r));
  return f;
}
}  // namespace detail

/// Exact integral of 1/|x - y| over y in the box.
inline Real box_newton_potential(const Vec3& x, const Box& box) {
  const Vec3 lo = box.lo - x, hi = box.hi - x;
  Real sum = 0.0;
  for (int c = 0; c < 8; ++c) {
    const bool ux = c & 1, uy = c & 2, uz = c & 4;
    const Real sign = (ux ? 1.0 : -1.0) * (uy ? 1.0 : -1.0) * (uz ? 1.0 : -1.0);
    sum += sign * detail::newton_corner(ux ? hi.x() : lo.x(), uy ? hi.y() : lo.y(),
                                        uz ? hi.z() : lo.z());
  }
  return sum;
}

/// Tensor Gauss rule of order n applied to f over the box, optionally on
/// a split^3 sub-box partition.
template <class F>
auto box_gauss(const Box& box, int n, int split, F&& f) -> decltype(f(Vec3{})) {
  using T = decltype(f(Vec3{}));
  const GaussRule& g = cached_rule(n);
  const Vec3 h = box.extent() / split;
  T acc{};
  for (int a = 0; a < split; ++a)
    for (int b = 0; b < split; ++b)
      for (int c = 0; c < split; ++c) {
        const Vec3 lo = box.lo + Vec3(a * h.x(), b * h.y(), c * h.z());
        const Real jac = h.prod() / 8.0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
              const Vec3 y = lo + 0.5 * Vec3((g.nodes[i] + 1) * h.x(), (g.nodes[j] + 1) * h.y(),
                                             (g.nodes[k] + 1) * h.z());
              acc += (jac * g.weights[i] * g.weights[j] * g.weights[k]) * f(y);
            }
      }
  return acc;
}

/// Integral of g(x, y) = e^{ik|x-y|} / (4pi|x-y|) over y in the box.
/// Near boxes split the kernel into the static 1/r part (exact) and the
/// bounded remainder (Gauss); far boxes use a plain Gauss rule.
inline Complex helmholtz_box_integral(Real k, const Vec3& x, const Box& box) {
  const Real diag = box.extent().norm();
  const Vec3 c = box.center();
  const Real dist = (x - c).norm();
  if (dist > 2.0 * diag) {
    return box_gauss(box, 4, 1, [&](const Vec3& y) { return free_green(k, x, y); });
  }
  const Complex dyn = box_gauss(box, 6, 2, [&](const Vec3& y) -> Complex {
    const Real r = (x - y).norm();
    const Real kr = k * r;
    if (kr < 1e-4) return (I * k - 0.5 * k * kr) / four_pi;
    return (std::exp(I * kr) - 1.0) / (four_pi * r);
  });
  return box_newton_potential(x, box) / four_pi + dyn;
}

}  // namespace smallscat
