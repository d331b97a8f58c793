#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace ggobs {

/// Symmetric tridiagonal matrix: diag[0..n), off[0..n-1).
struct SymTridiagonal {
  std::vector<double> diag;
  std::vector<double> off;

  std::size_t size() const noexcept { return diag.size(); }

  /// Number of eigenvalues strictly below x (Sturm sequence).
  std::size_t count_below(double x) const {
    const double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
    std::size_t count = 0;
    double q = diag[0] - x;
    if (q < 0) ++count;
    for (std::size_t i = 1; i < diag.size(); ++i) {
      if (std::abs(q) < tiny) q = -tiny;
      q = diag[i] - x - off[i - 1] * off[i - 1] / q;
      if (q < 0) ++count;
    }
    return count;
  }

  /// Gershgorin enclosure of the spectrum.
  std::pair<double, double> bounds() const {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < diag.size(); ++i) {
      double r = (i > 0 ? std::abs(off[i - 1]) : 0.0) + (i + 1 < diag.size() ? std::abs(off[i]) : 0.0);
      lo = std::min(lo, diag[i] - r);
      hi = std::max(hi, diag[i] + r);
    }
    return {lo, hi};
  }
};

/// The lowest `count` eigenvalues by Sturm bisection, ascending.
inline std::vector<double> lowest_eigenvalues(const SymTridiagonal& t, std::size_t count) {
  if (count > t.size()) throw std::invalid_argument("lowest_eigenvalues: count exceeds matrix size");
  auto [lo0, hi0] = t.bounds();
  const double scale = std::max(std::abs(lo0), std::abs(hi0));
  std::vector<double> out(count);
  double lower = lo0;
  for (std::size_t k = 0; k < count; ++k) {
    double lo = lower, hi = hi0;
    while (hi - lo > 2.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo) + std::abs(hi), 1e-300 * scale)) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (t.count_below(mid) > k)
        hi = mid;
      else
        lo = mid;
    }
    out[k] = 0.5 * (lo + hi);
    lower = lo;
  }
  return out;
}

/// Eigenvector for a converged eigenvalue by inverse iteration with partial-pivoting tridiagonal LU.
/// Unit Euclidean norm; orthogonalized against `previous` (for nearly degenerate spectra).
inline std::vector<double> inverse_iteration(const SymTridiagonal& t, double lambda,
                                             std::span<const std::vector<double>> previous = {}) {
  const std::size_t n = t.size();
  const double scale = std::max(std::abs(lambda), 1.0);
  const double shift = lambda + 64.0 * std::numeric_limits<double>::epsilon() * scale;
  std::vector<double> d(t.diag), du(t.off), dl(t.off), du2(n > 2 ? n - 2 : 0, 0.0);
  std::vector<char> swapped(n, 0);
  for (auto& x : d) x -= shift;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(d[i]) >= std::abs(dl[i])) {
      const double fact = d[i] != 0.0 ? dl[i] / d[i] : 0.0;
      dl[i] = fact;
      d[i + 1] -= fact * du[i];
    } else {
      const double fact = d[i] / dl[i];
      swapped[i] = 1;
      d[i] = dl[i];
      dl[i] = fact;
      const double temp = du[i];
      du[i] = d[i + 1];
      d[i + 1] = temp - fact * d[i + 1];
      if (i + 2 < n) {
        du2[i] = du[i + 1];
        du[i + 1] = -fact * du[i + 1];
      }
    }
  }
  const double tiny = std::numeric_limits<double>::epsilon() * scale;
  for (auto& x : d)
    if (std::abs(x) < tiny) x = x < 0 ? -tiny : tiny;

  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 0.25 * std::sin(1.0 + 7.0 * static_cast<double>(i));
  for (int iter = 0; iter < 3; ++iter) {
    std::vector<double> b = x;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!swapped[i]) {
        b[i + 1] -= dl[i] * b[i];
      } else {
        const double temp = b[i];
        b[i] = b[i + 1];
        b[i + 1] = temp - dl[i] * b[i];
      }
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double s = b[ii];
      if (ii + 1 < n) s -= du[ii] * b[ii + 1];
      if (ii + 2 < n) s -= du2[ii] * b[ii + 2];
      b[ii] = s / d[ii];
    }
    for (const auto& p : previous) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += p[i] * b[i];
      for (std::size_t i = 0; i < n; ++i) b[i] -= dot * p[i];
    }
    double norm = 0.0;
    for (double v : b) norm += v * v;
    norm = std::sqrt(norm);
    if (!(norm > 0.0) || !std::isfinite(norm)) throw std::runtime_error("inverse_iteration: breakdown");
    for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / norm;
  }
  return x;
}

}  // namespace ggobs
