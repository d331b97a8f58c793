#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <boost/math/constants/constants.hpp>

namespace ggobs {

template <class Real>
struct QuadratureRule {
  std::vector<Real> nodes;
  std::vector<Real> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1], Newton iteration on P_n from Chebyshev-like guesses.
template <class Real = double>
QuadratureRule<Real> gauss_legendre(std::size_t n) {
  using std::abs;
  using std::cos;
  if (n == 0) throw std::invalid_argument("gauss_legendre: n must be positive");
  const Real pi = boost::math::constants::pi<Real>();
  const Real tol = 4 * std::numeric_limits<Real>::epsilon();
  QuadratureRule<Real> rule{std::vector<Real>(n), std::vector<Real>(n)};
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    Real x = cos(pi * (Real(i) + Real(0.75)) / (Real(n) + Real(0.5)));
    Real dp = 0;
    for (int it = 0; it < 100; ++it) {
      Real p0 = 1, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        Real p2 = ((2 * Real(k) - 1) * x * p1 - (Real(k) - 1) * p0) / Real(k);
        p0 = p1;
        p1 = p2;
      }
      Real pn = n == 1 ? x : p1;
      Real pm = n == 1 ? Real(1) : p0;
      dp = Real(n) * (x * pn - pm) / (x * x - 1);
      Real dx = pn / dp;
      x -= dx;
      if (abs(dx) <= tol) {
        p0 = 1, p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
          Real p2 = ((2 * Real(k) - 1) * x * p1 - (Real(k) - 1) * p0) / Real(k);
          p0 = p1;
          p1 = p2;
        }
        pn = n == 1 ? x : p1;
        pm = n == 1 ? Real(1) : p0;
        dp = Real(n) * (x * pn - pm) / (x * x - 1);
        break;
      }
    }
    Real w = 2 / ((1 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0;
  return rule;
}

/// Gauss-Legendre rule mapped to [a, b].
template <class Real = double>
QuadratureRule<Real> gauss_legendre(std::size_t n, Real a, Real b) {
  auto rule = gauss_legendre<Real>(n);
  const Real half = (b - a) / 2, mid = (a + b) / 2;
  for (std::size_t i = 0; i < n; ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  return rule;
}

/// Composite Gauss-Legendre on [a, b] with panels no longer than max_panel.
inline QuadratureRule<double> composite_gauss_legendre(double a, double b, double max_panel,
                                                       std::size_t points_per_panel = 8) {
  if (!(b > a)) throw std::invalid_argument("composite_gauss_legendre: empty interval");
  if (!(max_panel > 0)) throw std::invalid_argument("composite_gauss_legendre: panel length must be positive");
  const auto panels = static_cast<std::size_t>(std::ceil((b - a) / max_panel));
  const auto base = gauss_legendre<double>(points_per_panel);
  QuadratureRule<double> rule;
  rule.nodes.reserve(panels * points_per_panel);
  rule.weights.reserve(panels * points_per_panel);
  const double h = (b - a) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + h * static_cast<double>(p);
    for (std::size_t i = 0; i < points_per_panel; ++i) {
      rule.nodes.push_back(lo + h * (base.nodes[i] + 1.0) / 2.0);
      rule.weights.push_back(base.weights[i] * h / 2.0);
    }
  }
  return rule;
}

}  // namespace ggobs
