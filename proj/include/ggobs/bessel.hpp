#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "ggobs/errors.hpp"
#include "ggobs/params.hpp"

namespace ggobs {

/// Arguments above this are rejected.
inline constexpr double kBesselArgumentLimit = 1e6;
/// Zero tolerance |J_nu(j)| <= kZeroTolerance.
inline constexpr double kZeroTolerance = 1e-13;

namespace detail {

using mp_real = boost::multiprecision::cpp_bin_float_100;

inline double series_threshold(double nu) { return std::max(16.0, 2.0 * nu); }

/// Ascending series sum_k prod_{i<=k} (-q / (i (i + nu))) with q = x^2/4, tracking the largest term.
template <class R>
R bessel_ratio_sum(const R& nu, const R& q, long double& max_term) {
  using std::abs;
  using boost::multiprecision::abs;
  R term = 1, sum = 1;
  const R eps = std::numeric_limits<R>::epsilon();
  max_term = 1.0L;
  for (int k = 1; k < 4000; ++k) {
    term *= -q / (R(k) * (R(k) + nu));
    sum += term;
    const auto mag = static_cast<long double>(abs(term));
    if (mag > max_term) max_term = mag;
    if (R(k) * R(k) > q && abs(term) <= eps * abs(sum)) break;
  }
  return sum;
}

/// (x/2)^nu / Gamma(nu + 1).
inline long double bessel_prefactor(long double nu, long double x) {
  return std::exp(nu * std::log(x / 2.0L) - std::lgamma(nu + 1.0L));
}

/// Ascending series, redone in 100-digit arithmetic when cancellation would exceed 5e-14 absolute.
inline long double bessel_series(long double nu, long double x) {
  if (x == 0.0L) return nu == 0.0L ? 1.0L : 0.0L;
  const long double pre = bessel_prefactor(nu, x);
  long double max_term = 0.0L;
  const long double s = bessel_ratio_sum<long double>(nu, x * x / 4.0L, max_term);
  if (pre * max_term * std::numeric_limits<long double>::epsilon() <= 5e-14L) return pre * s;
  const mp_real mx(x);
  const mp_real sm = bessel_ratio_sum<mp_real>(mp_real(nu), mx * mx / 4, max_term);
  return pre * static_cast<long double>(sm);
}

/// Hankel large-argument expansion; `ok` false when the smallest term does not reach the target.
inline long double bessel_hankel(long double nu, long double x, bool& ok) {
  const long double mu = 4.0L * nu * nu;
  long double p = 1.0L, q = 0.0L, a = 1.0L, last = 1.0L;
  ok = false;
  for (int k = 1; k < 500; ++k) {
    const long double odd = 2.0L * k - 1.0L;
    a *= (mu - odd * odd) / (static_cast<long double>(k) * 8.0L * x);
    const long double mag = std::fabs(a);
    if (mag > last && k > nu) break;
    const long double sign = ((k / 2) % 2 == 0) ? 1.0L : -1.0L;
    if (k % 2 == 0)
      p += sign * a;
    else
      q += sign * a;
    last = mag;
    if (mag < 1e-20L) {
      ok = true;
      break;
    }
  }
  if (last < 1e-15L) ok = true;
  const long double pi = boost::math::constants::pi<long double>();
  const long double chi = x - (nu / 2.0L + 0.25L) * pi;
  return std::sqrt(2.0L / (pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

inline void check_bessel_args(double nu, double x) {
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw std::domain_error("bessel: order must be >= 0");
  if (!(x >= 0.0) || !std::isfinite(x)) throw std::domain_error("bessel: argument must be >= 0");
  if (x > kBesselArgumentLimit) throw std::domain_error("bessel: argument exceeds overflow guard");
}

inline long double bessel_j_impl(long double nu, long double x) {
  if (x <= series_threshold(static_cast<double>(nu))) return bessel_series(nu, x);
  bool ok = false;
  const long double h = bessel_hankel(nu, x, ok);
  if (ok) return h;
  if (x <= 170.0L) return bessel_series(nu, x);
  throw NumericalError("bessel: order too large for the asymptotic region");
}

}  // namespace detail

/// Bessel function of the first kind J_nu(x) for real nu >= 0, x >= 0.
template <std::floating_point Real>
Real bessel_j(Real nu, Real x) {
  detail::check_bessel_args(static_cast<double>(nu), static_cast<double>(x));
  return static_cast<Real>(detail::bessel_j_impl(static_cast<long double>(nu), static_cast<long double>(x)));
}

/// J'_nu(x) from x J'_nu = nu J_nu - x J_{nu+1}.
template <std::floating_point Real>
Real bessel_j_prime(Real nu, Real x) {
  detail::check_bessel_args(static_cast<double>(nu), static_cast<double>(x));
  if (x == 0) {
    if (nu == 0 || nu > 1) return Real(0);
    if (nu == 1) return Real(0.5);
    return std::numeric_limits<Real>::infinity();
  }
  const long double n = nu, xx = x;
  return static_cast<Real>(n / xx * detail::bessel_j_impl(n, xx) - detail::bessel_j_impl(n + 1.0L, xx));
}

namespace detail {

inline double mcmahon_guess(double nu, std::size_t k) {
  const double pi = boost::math::constants::pi<double>();
  const double b = (static_cast<double>(k) + nu / 2.0 - 0.25) * pi;
  const double mu = 4.0 * nu * nu;
  return b - (mu - 1.0) / (8.0 * b) - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * std::pow(8.0 * b, 3));
}

/// Zero of J_nu inside the sign-change bracket [a, b] by safeguarded Newton with bisection fallback.
inline double refine_zero(double nu, double a, double b, double guess) {
  double fa = bessel_j(nu, a);
  double x = (guess > a && guess < b) ? guess : 0.5 * (a + b);
  for (int it = 0; it < 50; ++it) {
    const double f = bessel_j(nu, x);
    if (std::abs(f) <= kZeroTolerance) return x;
    if ((f < 0) == (fa < 0)) {
      a = x;
      fa = f;
    } else {
      b = x;
    }
    const double step = f / bessel_j_prime(nu, x);
    double next = x - step;
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (next == x || b - a <= 4.0 * std::numeric_limits<double>::epsilon() * b) return x;
    x = next;
  }
  while (b - a > 4.0 * std::numeric_limits<double>::epsilon() * b) {
    const double m = 0.5 * (a + b);
    const double f = bessel_j(nu, m);
    if (std::abs(f) <= kZeroTolerance) return m;
    if ((f < 0) == (fa < 0)) {
      a = m;
      fa = f;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// First K positive zeros of J_nu, ascending. Each zero is bracketed by a sign change on a 0.25 scan
/// and refined from a McMahon guess.
inline std::vector<double> bessel_zeros(double nu, std::size_t K) {
  if (K < 1) throw ConfigError("bessel_zeros: K must be >= 1");
  if (!(nu >= 0.0)) throw std::domain_error("bessel_zeros: order must be >= 0");
  constexpr double step = 0.25;
  std::vector<double> zeros;
  zeros.reserve(K);
  double start = std::max(nu, 1e-3);
  for (std::size_t k = 1; k <= K; ++k) {
    double a = start, fa = bessel_j(nu, a);
    bool found = false;
    for (int s = 0; s < 4000; ++s) {
      const double b = a + step;
      const double fb = bessel_j(nu, b);
      if (fa == 0.0) {
        zeros.push_back(a);
        found = true;
        break;
      }
      if ((fa < 0) != (fb < 0)) {
        zeros.push_back(detail::refine_zero(nu, a, b, detail::mcmahon_guess(nu, k)));
        found = true;
        break;
      }
      a = b;
      fa = fb;
    }
    if (!found) throw NumericalError("bessel_zeros: no sign change found for zero " + std::to_string(k));
    // Consecutive zeros of J_nu, nu >= 0, are more than 3 apart.
    start = zeros.back() + 3.0;
  }
  return zeros;
}

/// Closed-form eigen-system of -x^alpha d^2/dx^2 on (0,1) with Dirichlet data, in L^2(x^{-alpha} dx).
struct BesselEigenSystem {
  GasGiantParams params = GasGiantParams::one_dimensional(0.0);
  std::vector<double> zeros;
  std::vector<double> eigenvalues;
  std::vector<double> frequencies;
  std::vector<double> norm_constants;
  std::vector<double> trace_amplitudes;

  std::size_t size() const noexcept { return zeros.size(); }

  /// Normalized eigenfunction Phi_k(x), k zero-based.
  double eigenfunction(std::size_t k, double x) const {
    return std::sqrt(x) * bessel_j(params.nu(), zeros.at(k) * std::pow(x, params.kappa())) / norm_constants[k];
  }

  /// Phi_k'(x) for x > 0.
  double eigenfunction_derivative(std::size_t k, double x) const {
    const double kappa = params.kappa(), nu = params.nu(), j = zeros.at(k);
    const double c = 1.0 / norm_constants[k];
    const double z = j * std::pow(x, kappa);
    return c * (0.5 / std::sqrt(x) * bessel_j(nu, z) * (1.0 + 2.0 * nu * kappa) -
                kappa * j * std::pow(x, kappa - 0.5) * bessel_j(nu + 1.0, z));
  }

  /// Constant C with lim_{x->0} Phi_k'(x) = C * trace_amplitudes[k].
  double trace_constant() const {
    const double nu = params.nu(), kappa = params.kappa();
    return std::sqrt(2.0 * kappa) / (std::pow(2.0, nu) * std::tgamma(nu + 1.0));
  }

  double trace_limit(std::size_t k) const { return trace_constant() * trace_amplitudes.at(k); }
};

inline BesselEigenSystem build_eigensystem_1d(const GasGiantParams& params, std::size_t K) {
  if (params.convention() != Convention::one_dimensional)
    throw ConfigError("build_eigensystem_1d: parameters must be in the one-dimensional convention");
  BesselEigenSystem sys;
  sys.params = params;
  sys.zeros = bessel_zeros(params.nu(), K);
  const double kappa = params.kappa(), nu = params.nu();
  for (double j : sys.zeros) {
    const double jp = std::abs(bessel_j_prime(nu, j));
    sys.frequencies.push_back(kappa * j);
    sys.eigenvalues.push_back(kappa * j * kappa * j);
    sys.norm_constants.push_back(jp / std::sqrt(2.0 * kappa));
    sys.trace_amplitudes.push_back(std::pow(j, nu) / jp);
  }
  return sys;
}

struct TraceLimitEstimate {
  double value = 0.0;
  double error_estimate = 0.0;
};

/// lim_{x->0} Phi_k'(x) from samples at x = 2^-m, m = m_min..m_max, by polynomial extrapolation in x^{2 kappa}.
inline TraceLimitEstimate extrapolate_trace_limit(const BesselEigenSystem& sys, std::size_t k, int m_min = 8,
                                                  int m_max = 16) {
  std::vector<long double> h, table;
  for (int m = m_max; m >= m_min; --m) {
    const double x = std::ldexp(1.0, -m);
    h.push_back(std::pow(static_cast<long double>(x), 2.0L * sys.params.kappa()));
    table.push_back(sys.eigenfunction_derivative(k, x));
  }
  // Neville's scheme evaluated at h = 0; the last two diagonal entries give the error estimate.
  const std::size_t n = h.size();
  long double prev = table[0];
  TraceLimitEstimate est;
  for (std::size_t level = 1; level < n; ++level) {
    for (std::size_t i = 0; i + level < n; ++i) {
      table[i] = (h[i + level] * table[i] - h[i] * table[i + 1]) / (h[i + level] - h[i]);
    }
    est.error_estimate = static_cast<double>(std::fabs(table[0] - prev));
    prev = table[0];
  }
  est.value = static_cast<double>(table[0]);
  return est;
}

/// CSV rows (k, j_nuk, lambda_k, mu_k, norm_const, trace_amp), k one-based.
inline void write_eigensystem_csv(std::ostream& os, const BesselEigenSystem& sys) {
  os << "k,j_nuk,lambda_k,mu_k,norm_const,trace_amp\n";
  char buf[256];
  for (std::size_t k = 0; k < sys.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", k + 1, sys.zeros[k], sys.eigenvalues[k],
                  sys.frequencies[k], sys.norm_constants[k], sys.trace_amplitudes[k]);
    os << buf;
  }
}

}  // namespace ggobs
