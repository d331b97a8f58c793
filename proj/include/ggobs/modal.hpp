#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ggobs/errors.hpp"
#include "ggobs/params.hpp"
#include "ggobs/tridiagonal.hpp"

namespace ggobs {

enum class BoundaryCondition { dirichlet, neumann };

inline std::string to_string(BoundaryCondition bc) { return bc == BoundaryCondition::dirichlet ? "dirichlet" : "neumann"; }

inline BoundaryCondition boundary_condition_from_string(const std::string& s) {
  if (s == "dirichlet") return BoundaryCondition::dirichlet;
  if (s == "neumann") return BoundaryCondition::neumann;
  throw ConfigError("boundary condition must be 'dirichlet' or 'neumann' (got '" + s + "')");
}

struct ModalOptions {
  /// Target relative accuracy of the extrapolated eigenvalues.
  double tolerance = 1e-6;
  /// Throw NumericalError when an eigenvalue misses 10 x tolerance.
  bool strict = true;
  /// Innermost cells used by the trace fits.
  std::size_t fit_cells = 12;
};

/// Discrete form of P_omega = -d^2/dx^2 + C_beta/x^2 + omega x^beta after u = x^{1/2+nu} v.
/// Linear elements for v with exact cell integrals and lumped weights; `operator_matrix` is
/// M^{-1/2} (K + V) M^{-1/2}.
struct ModalDiscretization {
  std::vector<double> nodes;  // x_0 = 0 < ... ; includes x = 1 only for Neumann
  std::vector<double> mass;   // lumped integral of x^{2a} phi_i
  SymTridiagonal operator_matrix;
};

namespace detail {

/// Integral of x^p over [a, b].
inline long double power_moment(long double a, long double b, long double p) {
  return (std::pow(b, p + 1.0L) - std::pow(a, p + 1.0L)) / (p + 1.0L);
}

/// Integrals of x^p times the left and right hat functions of cell [a, b].
inline std::pair<long double, long double> hat_moments(long double a, long double b, long double p) {
  const long double h = b - a;
  const long double i0 = power_moment(a, b, p), i1 = power_moment(a, b, p + 1.0L);
  const long double right = (i1 - a * i0) / h;  // hat peaking at b
  return {i0 - right, right};
}

}  // namespace detail

inline double modal_grading_exponent(const GasGiantParams& p) { return std::max(1.0, 1.0 / (2.0 * p.kappa())); }

inline ModalDiscretization discretize_modal(const GasGiantParams& params, double omega, BoundaryCondition bc,
                                            std::size_t G) {
  const long double a = 0.5L + params.nu();
  const long double beta = params.beta();
  const double gamma = modal_grading_exponent(params);
  std::vector<long double> x(G + 1);
  for (std::size_t i = 0; i <= G; ++i) x[i] = std::pow(static_cast<long double>(i) / G, static_cast<long double>(gamma));
  std::vector<long double> kd(G + 1, 0.0L), ko(G, 0.0L), m(G + 1, 0.0L), pot(G + 1, 0.0L);
  for (std::size_t c = 0; c < G; ++c) {
    const long double h = x[c + 1] - x[c];
    const long double stiff = detail::power_moment(x[c], x[c + 1], 2.0L * a) / (h * h);
    kd[c] += stiff;
    kd[c + 1] += stiff;
    ko[c] -= stiff;
    const auto [ml, mr] = detail::hat_moments(x[c], x[c + 1], 2.0L * a);
    m[c] += ml;
    m[c + 1] += mr;
    if (omega > 0.0) {
      const auto [pl, pr] = detail::hat_moments(x[c], x[c + 1], beta + 2.0L * a);
      pot[c] += omega * pl;
      pot[c + 1] += omega * pr;
    }
  }
  // Boundary term a v(1)^2 from the substitution; Dirichlet removes the last node instead.
  kd[G] += a;
  const std::size_t n = bc == BoundaryCondition::dirichlet ? G : G + 1;
  ModalDiscretization d;
  d.nodes.resize(n);
  d.mass.resize(n);
  d.operator_matrix.diag.resize(n);
  d.operator_matrix.off.resize(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    d.nodes[i] = static_cast<double>(x[i]);
    d.mass[i] = static_cast<double>(m[i]);
    d.operator_matrix.diag[i] = static_cast<double>((kd[i] + pot[i]) / m[i]);
    if (i + 1 < n) d.operator_matrix.off[i] = static_cast<double>(ko[i] / std::sqrt(m[i] * m[i + 1]));
  }
  return d;
}

/// Lowest eigenpairs of one discretization; vectors returned as nodal values of v, normalized in the
/// lumped weight and signed so that v(0) > 0.
struct ModalLevel {
  std::size_t grid_size = 0;
  ModalDiscretization disc;
  std::vector<double> eigenvalues;
  std::vector<std::vector<double>> v;
};

inline ModalLevel solve_modal_level(const GasGiantParams& params, double omega, BoundaryCondition bc, std::size_t G,
                                    std::size_t count, bool vectors) {
  ModalLevel lvl;
  lvl.grid_size = G;
  lvl.disc = discretize_modal(params, omega, bc, G);
  lvl.eigenvalues = lowest_eigenvalues(lvl.disc.operator_matrix, count);
  if (!vectors) return lvl;
  std::vector<std::vector<double>> ys;
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<std::vector<double>> close;
    for (std::size_t j = 0; j < k; ++j)
      if (std::abs(lvl.eigenvalues[j] - lvl.eigenvalues[k]) < 1e-8 * std::abs(lvl.eigenvalues[k])) close.push_back(ys[j]);
    ys.push_back(inverse_iteration(lvl.disc.operator_matrix, lvl.eigenvalues[k], close));
    std::vector<double> v(ys.back().size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = ys.back()[i] / std::sqrt(lvl.disc.mass[i]);
    if (v[0] < 0)
      for (auto& e : v) e = -e;
    lvl.v.push_back(std::move(v));
  }
  return lvl;
}

/// Friedrichs eigen-system of P_omega on (0,1).
struct ModalEigenSystem {
  GasGiantParams params = GasGiantParams::multidimensional(2.0, 0);
  double omega = 0.0;
  BoundaryCondition bc_at_1 = BoundaryCondition::dirichlet;
  std::size_t grid_size = 0;
  /// Nodes of the finest grid, excluding x = 0.
  std::vector<double> grid;
  /// Lumped L^2 weights of u at `grid`.
  std::vector<double> weights;
  std::vector<double> eigenvalues;
  std::vector<double> frequencies;
  /// Relative difference between the two Richardson estimates.
  std::vector<double> error_estimates;
  /// log2 of successive grid differences.
  std::vector<double> observed_orders;
  /// u_n at `grid`, L^2(0,1)-normalized.
  std::vector<std::vector<double>> eigenfunctions;
  /// Leading coefficient A_n of u_n ~ A_n x^{1/2+nu}, extrapolated in the grid.
  std::vector<double> leading_coeffs;
  /// T_n = (nu + 1/2) A_n.
  std::vector<double> trace_coeffs;
  /// v_n = u_n x^{-1/2-nu} on the finest grid including x = 0 (internal use by the trace fits).
  std::vector<double> v_nodes;
  std::vector<std::vector<double>> v;
  bool converged = true;

  std::size_t size() const noexcept { return eigenvalues.size(); }
  double exponent() const noexcept { return 0.5 + params.nu(); }

  /// Lumped L^2(0,1) inner product of two eigenfunctions.
  double inner_product(std::size_t n, std::size_t m) const {
    double s = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) s += weights[i] * eigenfunctions.at(n)[i] * eigenfunctions.at(m)[i];
    return s;
  }
};

inline ModalEigenSystem solve_modal(const GasGiantParams& params, double omega, BoundaryCondition bc,
                                    std::size_t n_eigs, std::size_t grid_size, const ModalOptions& opt = {}) {
  if (params.convention() != Convention::multidimensional)
    throw ConfigError("solve_modal: parameters must be in the multidimensional convention");
  if (!(omega >= 0.0) || !std::isfinite(omega)) throw ConfigError("solve_modal: omega must be >= 0");
  if (n_eigs < 1) throw ConfigError("solve_modal: N_eigs must be >= 1");
  if (8 * n_eigs > grid_size)
    throw ConfigError("solve_modal: grid_size " + std::to_string(grid_size) + " too small for " +
                      std::to_string(n_eigs) + " eigenvalues (need N_eigs <= grid_size/8)");
  const auto coarse = solve_modal_level(params, omega, bc, grid_size, n_eigs, false);
  const auto mid = solve_modal_level(params, omega, bc, 2 * grid_size, n_eigs, true);
  const auto fine = solve_modal_level(params, omega, bc, 4 * grid_size, n_eigs, true);

  ModalEigenSystem sys;
  sys.params = params;
  sys.omega = omega;
  sys.bc_at_1 = bc;
  sys.grid_size = grid_size;
  const double a = 0.5 + params.nu();
  const std::size_t nf = fine.disc.nodes.size();
  sys.v_nodes = fine.disc.nodes;
  sys.grid.assign(fine.disc.nodes.begin() + 1, fine.disc.nodes.end());
  sys.weights.resize(nf - 1);
  for (std::size_t i = 1; i < nf; ++i) sys.weights[i - 1] = fine.disc.mass[i] / std::pow(fine.disc.nodes[i], 2.0 * a);
  for (std::size_t k = 0; k < n_eigs; ++k) {
    const double l1 = coarse.eigenvalues[k], l2 = mid.eigenvalues[k], l4 = fine.eigenvalues[k];
    const double ra = (4.0 * l2 - l1) / 3.0, rb = (4.0 * l4 - l2) / 3.0;
    sys.eigenvalues.push_back(rb);
    sys.frequencies.push_back(std::sqrt(rb));
    sys.error_estimates.push_back(std::abs(rb - ra) / std::abs(rb));
    sys.observed_orders.push_back(std::log2(std::abs((l1 - l2) / (l2 - l4))));
    if (sys.error_estimates.back() > 10.0 * opt.tolerance) sys.converged = false;
    std::vector<double> u(nf - 1);
    for (std::size_t i = 1; i < nf; ++i) u[i - 1] = std::pow(fine.disc.nodes[i], a) * fine.v[k][i];
    sys.eigenfunctions.push_back(std::move(u));
    sys.v.push_back(fine.v[k]);
    const double lead = (4.0 * fine.v[k][0] - mid.v[k][0]) / 3.0;
    sys.leading_coeffs.push_back(lead);
    sys.trace_coeffs.push_back(a * lead);
  }
  for (std::size_t k = 0; k + 1 < n_eigs; ++k)
    if (!(sys.eigenvalues[k + 1] > sys.eigenvalues[k])) throw NumericalError("solve_modal: eigenvalues not simple");
  if (opt.strict && !sys.converged) {
    double worst = *std::max_element(sys.error_estimates.begin(), sys.error_estimates.end());
    throw NumericalError("solve_modal: grid refinements disagree by " + std::to_string(worst) +
                         " (> 10 x tolerance); increase grid_size");
  }
  return sys;
}

struct TraceEstimate {
  /// Grid-extrapolated T_n = (nu + 1/2) A_n.
  double value = 0.0;
  /// (nu + 1/2) A from a least-squares fit of u x^{-1/2-nu} on the innermost nodes.
  double fit_estimate = 0.0;
  /// Extrapolation of x^{1/2-nu} u'(x) to x = 0 from the innermost cells.
  double derivative_estimate = 0.0;
  /// Empirical exponent rho in u x^{-1/2-nu} = A (1 + O(x^rho)).
  double remainder_order = 0.0;
  bool ill_conditioned = false;
};

namespace detail {

/// Least-squares quadratic fit y ~ c0 + c1 x + c2 x^2, returns c0.
inline double quadratic_intercept(const std::vector<double>& xs, const std::vector<double>& ys) {
  Eigen::MatrixXd A(xs.size(), 3);
  Eigen::VectorXd b(xs.size());
  const double s = xs.back();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double t = xs[i] / s;
    A(i, 0) = 1.0;
    A(i, 1) = t;
    A(i, 2) = t * t;
    b(i) = ys[i];
  }
  return A.colPivHouseholderQr().solve(b)(0);
}

}  // namespace detail

/// Renormalized trace coefficient of mode n (zero-based) with two independent cross-checks.
inline TraceEstimate trace_coefficient(const ModalEigenSystem& sys, std::size_t n, std::size_t fit_cells = 12) {
  if (n >= sys.size()) throw ConfigError("trace_coefficient: mode index out of range");
  const double a = sys.exponent();
  const auto& x = sys.v_nodes;
  const auto& v = sys.v[n];
  const std::size_t m = std::min(fit_cells, x.size() - 2);
  TraceEstimate est;
  est.value = sys.trace_coeffs[n];

  std::vector<double> xs, ys;
  for (std::size_t i = 1; i <= m; ++i) {
    xs.push_back(x[i]);
    ys.push_back(sys.eigenfunctions[n][i - 1] / std::pow(x[i], a));
  }
  const double lead = detail::quadratic_intercept(xs, ys);
  est.fit_estimate = a * lead;

  std::vector<double> xm, dm;
  for (std::size_t i = 0; i < m; ++i) {
    const double h = x[i + 1] - x[i];
    const double mid = 0.5 * (x[i] + x[i + 1]);
    // x^{1/2-nu} u' = a v + x v'.
    xm.push_back(mid);
    dm.push_back(a * 0.5 * (v[i] + v[i + 1]) + mid * (v[i + 1] - v[i]) / h);
  }
  est.derivative_estimate = detail::quadratic_intercept(xm, dm);

  // Slope of log |v - A| against log x over the fit window.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t cnt = 0;
  for (std::size_t i = 2; i <= m; ++i) {
    const double r = std::abs(v[i] - lead);
    if (!(r > 0.0)) continue;
    const double lx = std::log(x[i]), ly = std::log(r);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++cnt;
  }
  if (cnt >= 2) est.remainder_order = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);

  const double ref = std::abs(est.value);
  est.ill_conditioned = std::abs(est.fit_estimate - est.value) > 0.01 * ref ||
                        std::abs(est.derivative_estimate - est.value) > 0.01 * ref ||
                        std::abs(est.fit_estimate - est.derivative_estimate) > 0.01 * ref;
  return est;
}

struct WeylGapRow {
  double omega = 0.0;
  double fitted_slope = 0.0;
  double last_gap = 0.0;
  double kappa_pi = 0.0;
  double slope_deviation = 0.0;  // relative to kappa pi
  double gap_deviation = 0.0;    // relative to kappa pi
};

/// Least-squares slope of mu_n against n over n in [N/2, N], plus the last gap.
inline WeylGapRow weyl_gap_row(const ModalEigenSystem& sys, std::size_t N) {
  if (N > sys.size()) throw ConfigError("weyl_gap_row: N exceeds the computed spectrum");
  WeylGapRow row;
  row.omega = sys.omega;
  row.kappa_pi = sys.params.kappa() * std::numbers::pi;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t cnt = 0;
  for (std::size_t n = N / 2; n <= N; ++n) {
    const double x = static_cast<double>(n), y = sys.frequencies[n - 1];
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  row.fitted_slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  row.last_gap = sys.frequencies[N - 1] - sys.frequencies[N - 2];
  row.slope_deviation = row.fitted_slope / row.kappa_pi - 1.0;
  row.gap_deviation = row.last_gap / row.kappa_pi - 1.0;
  return row;
}

inline std::vector<WeylGapRow> weyl_gap_report(const GasGiantParams& params, const std::vector<double>& omegas,
                                               std::size_t N, std::size_t grid_size = 0) {
  if (N < 30) throw ConfigError("weyl_gap_report: N must be >= 30");
  const std::size_t G = grid_size ? grid_size : std::max<std::size_t>(50 * N, 2000);
  ModalOptions opt;
  opt.tolerance = 1e-4;
  std::vector<WeylGapRow> rows;
  for (double omega : omegas)
    rows.push_back(weyl_gap_row(solve_modal(params, omega, BoundaryCondition::dirichlet, N, G, opt), N));
  return rows;
}

/// CSV rows (omega, n, lambda, mu, trace_coeff), n one-based.
inline void write_modal_csv(std::ostream& os, const ModalEigenSystem& sys, bool header = true) {
  if (header) os << "omega,n,lambda,mu,trace_coeff\n";
  char buf[256];
  for (std::size_t n = 0; n < sys.size(); ++n) {
    std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g,%.17g,%.17g\n", sys.omega, n + 1, sys.eigenvalues[n],
                  sys.frequencies[n], sys.trace_coeffs[n]);
    os << buf;
  }
}

/// CSV rows (x, value) of one eigenfunction.
inline void write_eigenfunction_csv(std::ostream& os, const ModalEigenSystem& sys, std::size_t n) {
  os << "x,value\n";
  char buf[128];
  for (std::size_t i = 0; i < sys.grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", sys.grid[i], sys.eigenfunctions.at(n)[i]);
    os << buf;
  }
}

}  // namespace ggobs
