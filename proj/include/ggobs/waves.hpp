#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "ggobs/bessel.hpp"
#include "ggobs/errors.hpp"
#include "ggobs/modal.hpp"
#include "ggobs/params.hpp"
#include "ggobs/quadrature.hpp"
#include "ggobs/tangential.hpp"

namespace ggobs {

using cdouble = std::complex<double>;

/// Normal spectral data of one modal operator: lambda_n, mu_n and trace coefficients T_n, n < N.
struct NormalSpectrum {
  double omega = 0.0;
  double nu = 0.5;
  std::vector<double> eigenvalues;
  std::vector<double> frequencies;
  std::vector<double> trace_coeffs;

  std::size_t size() const noexcept { return eigenvalues.size(); }

  static NormalSpectrum from_modal(const ModalEigenSystem& sys, std::size_t N) {
    if (N > sys.size()) throw ConfigError("modal system holds fewer than N eigenpairs");
    NormalSpectrum s;
    s.omega = sys.omega;
    s.nu = sys.params.nu();
    s.eigenvalues.assign(sys.eigenvalues.begin(), sys.eigenvalues.begin() + static_cast<std::ptrdiff_t>(N));
    s.frequencies.assign(sys.frequencies.begin(), sys.frequencies.begin() + static_cast<std::ptrdiff_t>(N));
    s.trace_coeffs.assign(sys.trace_coeffs.begin(), sys.trace_coeffs.begin() + static_cast<std::ptrdiff_t>(N));
    return s;
  }

  /// 1D degenerate problem: frequencies kappa j_{nu,k}, trace lim Phi_k'(x).
  static NormalSpectrum from_bessel(const BesselEigenSystem& sys) {
    NormalSpectrum s;
    s.nu = sys.params.nu();
    s.eigenvalues = sys.eigenvalues;
    s.frequencies = sys.frequencies;
    for (std::size_t k = 0; k < sys.size(); ++k) s.trace_coeffs.push_back(sys.trace_limit(k));
    return s;
  }

  /// Exponential frequencies (+mu_1..+mu_N, -mu_1..-mu_N).
  std::vector<double> signed_frequencies() const {
    std::vector<double> w(frequencies);
    for (double m : frequencies) w.push_back(-m);
    return w;
  }
};

/// Normal spectra for every tangential mode of a basis (one modal solve per distinct omega).
struct ModalFamily {
  std::map<double, NormalSpectrum> by_omega;
  std::vector<double> mode_omegas;
  std::size_t truncation = 0;

  std::size_t modes() const noexcept { return mode_omegas.size(); }
  const NormalSpectrum& at(std::size_t k) const { return by_omega.at(mode_omegas.at(k)); }

  /// Same normal spectrum for each of `modes` tangential modes (1D or single-omega studies).
  static ModalFamily uniform(const NormalSpectrum& s, std::size_t modes = 1) {
    ModalFamily f;
    f.by_omega.emplace(s.omega, s);
    f.mode_omegas.assign(modes, s.omega);
    f.truncation = s.size();
    return f;
  }
};

/// Default grid for modal solves feeding the wave synthesis.
inline std::size_t default_modal_grid(std::size_t N) { return std::max<std::size_t>(1000, 50 * N); }

inline ModalFamily build_modal_family(const GasGiantParams& params, const TangentialBasis& basis, std::size_t N,
                                      BoundaryCondition bc = BoundaryCondition::dirichlet, std::size_t grid = 0,
                                      const ModalOptions& opt = {}) {
  if (grid == 0) grid = default_modal_grid(N);
  ModalFamily f;
  f.truncation = N;
  for (const auto& m : basis.modes()) {
    f.mode_omegas.push_back(m.eigenvalue);
    if (!f.by_omega.contains(m.eigenvalue))
      f.by_omega.emplace(m.eigenvalue, NormalSpectrum::from_modal(solve_modal(params, m.eigenvalue, bc, N, grid, opt), N));
  }
  return f;
}

/// Modal initial data: column k holds the coefficients of (u_0, u_1) on phi_{n, omega_k} psi_k, n < N.
struct InitialData {
  Eigen::MatrixXcd f0;
  Eigen::MatrixXcd f1;
  double bandwidth = 0.0;

  std::size_t truncation() const noexcept { return static_cast<std::size_t>(f0.rows()); }
  std::size_t modes() const noexcept { return static_cast<std::size_t>(f0.cols()); }

  static InitialData zeros(std::size_t N, std::size_t d, double bandwidth) {
    return {Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(d)),
            Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(d)), bandwidth};
  }

  bool is_zero() const { return f0.isZero(0.0) && f1.isZero(0.0); }

  InitialData scaled(double s) const { return {s * f0, s * f1, bandwidth}; }
};

/// Checks the data against a family: shapes, and no populated mode above the bandwidth.
inline void validate_data(const InitialData& data, const ModalFamily& family) {
  if (data.f0.rows() != data.f1.rows() || data.f0.cols() != data.f1.cols())
    throw ConfigError("initial data: f0 and f1 shapes differ");
  if (data.modes() > family.modes()) throw ConfigError("initial data has more tangential modes than the family");
  if (data.truncation() > family.truncation) throw ConfigError("initial data truncation exceeds modal truncation");
  if (!data.f0.allFinite() || !data.f1.allFinite()) throw ConfigError("initial data not finite");
  for (std::size_t k = 0; k < data.modes(); ++k) {
    const auto c = static_cast<Eigen::Index>(k);
    if (family.mode_omegas[k] > data.bandwidth + 1e-12 && (!data.f0.col(c).isZero(0.0) || !data.f1.col(c).isZero(0.0)))
      throw ConfigError("initial data populates a mode above its bandwidth");
  }
}

/// Seeded complex Gaussian data on all modes with omega_k <= bandwidth, flat in (n, k).
inline InitialData random_data(const ModalFamily& family, double bandwidth, std::size_t N, std::mt19937_64& rng,
                               bool real = false) {
  std::normal_distribution<double> g;
  auto data = InitialData::zeros(N, family.modes(), bandwidth);
  for (std::size_t k = 0; k < family.modes(); ++k) {
    if (family.mode_omegas[k] > bandwidth + 1e-12) continue;
    for (std::size_t n = 0; n < N; ++n) {
      const auto r = static_cast<Eigen::Index>(n), c = static_cast<Eigen::Index>(k);
      const double a = g(rng), b = g(rng), e = g(rng), f = g(rng);
      data.f0(r, c) = real ? cdouble(a, 0.0) : cdouble(a, b);
      data.f1(r, c) = real ? cdouble(e, 0.0) : cdouble(e, f);
    }
  }
  return data;
}

/// u_{n,k}(t) = a+ e^{i mu t} + a- e^{-i mu t}.
struct SpectralCoefficients {
  Eigen::MatrixXcd plus;
  Eigen::MatrixXcd minus;
};

inline SpectralCoefficients spectral_coefficients(const InitialData& data, const ModalFamily& family) {
  validate_data(data, family);
  SpectralCoefficients a{Eigen::MatrixXcd::Zero(data.f0.rows(), data.f0.cols()),
                         Eigen::MatrixXcd::Zero(data.f0.rows(), data.f0.cols())};
  const cdouble I(0.0, 1.0);
  for (Eigen::Index k = 0; k < data.f0.cols(); ++k) {
    const auto& s = family.at(static_cast<std::size_t>(k));
    for (Eigen::Index n = 0; n < data.f0.rows(); ++n) {
      const double mu = s.frequencies[static_cast<std::size_t>(n)];
      if (!(mu > 0.0)) throw NumericalError("spectral_coefficients: nonpositive frequency");
      a.plus(n, k) = 0.5 * (data.f0(n, k) - I * data.f1(n, k) / mu);
      a.minus(n, k) = 0.5 * (data.f0(n, k) + I * data.f1(n, k) / mu);
    }
  }
  return a;
}

/// Trace exponential-sum coefficients of mode k, ordered like NormalSpectrum::signed_frequencies.
inline Eigen::VectorXcd trace_amplitudes(const SpectralCoefficients& a, const ModalFamily& family, std::size_t k) {
  const auto& s = family.at(k);
  const Eigen::Index N = a.plus.rows();
  const auto c = static_cast<Eigen::Index>(k);
  Eigen::VectorXcd out(2 * N);
  for (Eigen::Index n = 0; n < N; ++n) {
    out(n) = s.trace_coeffs[static_cast<std::size_t>(n)] * a.plus(n, c);
    out(N + n) = s.trace_coeffs[static_cast<std::size_t>(n)] * a.minus(n, c);
  }
  return out;
}

/// Energy weights: E = sum A_n |f0|^2 + B_n |f1|^2 / lambda with A = lambda^{nu+1/2} + omega lambda^{nu-1/2},
/// B = lambda^{nu+1/2}; trace weights w0 = T^2 / (2A), w1 = T^2 / (2B).
struct TraceWeights {
  std::vector<double> w0;
  std::vector<double> w1;
  double min() const {
    return std::min(*std::min_element(w0.begin(), w0.end()), *std::min_element(w1.begin(), w1.end()));
  }
  double max() const {
    return std::max(*std::max_element(w0.begin(), w0.end()), *std::max_element(w1.begin(), w1.end()));
  }
};

inline TraceWeights trace_weights(const NormalSpectrum& s, std::size_t N) {
  TraceWeights w;
  for (std::size_t n = 0; n < N; ++n) {
    const double lam = s.eigenvalues.at(n), T = s.trace_coeffs.at(n);
    const double hi = std::pow(lam, s.nu + 0.5), lo = std::pow(lam, s.nu - 0.5);
    w.w0.push_back(T * T / (2.0 * (hi + s.omega * lo)));
    w.w1.push_back(T * T / (2.0 * hi));
  }
  return w;
}

struct AnisotropicEnergy {
  double total = 0.0;
  std::vector<double> per_mode;
};

inline AnisotropicEnergy anisotropic_energy(const InitialData& data, const ModalFamily& family) {
  validate_data(data, family);
  AnisotropicEnergy e;
  for (Eigen::Index k = 0; k < data.f0.cols(); ++k) {
    const auto& s = family.at(static_cast<std::size_t>(k));
    double ek = 0.0;
    for (Eigen::Index n = 0; n < data.f0.rows(); ++n) {
      const double lam = s.eigenvalues[static_cast<std::size_t>(n)];
      const double hi = std::pow(lam, s.nu + 0.5), lo = std::pow(lam, s.nu - 0.5);
      ek += hi * std::norm(data.f0(n, k)) + lo * std::norm(data.f1(n, k)) + s.omega * lo * std::norm(data.f0(n, k));
    }
    e.per_mode.push_back(ek);
    e.total += ek;
  }
  return e;
}

/// Data after evolving for time tau.
inline InitialData propagate(const InitialData& data, const ModalFamily& family, double tau) {
  const auto a = spectral_coefficients(data, family);
  InitialData out = data;
  const cdouble I(0.0, 1.0);
  for (Eigen::Index k = 0; k < data.f0.cols(); ++k) {
    const auto& s = family.at(static_cast<std::size_t>(k));
    for (Eigen::Index n = 0; n < data.f0.rows(); ++n) {
      const double mu = s.frequencies[static_cast<std::size_t>(n)];
      const cdouble p = a.plus(n, k) * std::exp(I * mu * tau), m = a.minus(n, k) * std::exp(-I * mu * tau);
      out.f0(n, k) = p + m;
      out.f1(n, k) = I * mu * (p - m);
    }
  }
  return out;
}

/// G_{jl} = int_0^T e^{i (w_l - w_j) t} dt, so that int_0^T |sum c_l e^{i w_l t}|^2 = c^* G c.
inline Eigen::MatrixXcd exponential_gram(const std::vector<double>& w, double T) {
  const auto n = static_cast<Eigen::Index>(w.size());
  Eigen::MatrixXcd G(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    G(j, j) = T;
    for (Eigen::Index l = j + 1; l < n; ++l) {
      const double h = 0.5 * (w[static_cast<std::size_t>(l)] - w[static_cast<std::size_t>(j)]) * T;
      const double sinc = h == 0.0 ? 1.0 : std::sin(h) / h;
      G(j, l) = T * sinc * std::polar(1.0, h);
      G(l, j) = std::conj(G(j, l));
    }
  }
  return G;
}

struct FrameBounds {
  double T = 0.0;
  std::size_t N = 0;
  double c_T = 0.0;
  double C_T = 0.0;
  std::vector<double> frequencies;
};

inline void check_distinct(const std::vector<double>& w) {
  std::vector<double> s(w);
  std::sort(s.begin(), s.end());
  for (std::size_t i = 1; i < s.size(); ++i)
    if (std::abs(s[i] - s[i - 1]) <= 1e-14 * std::max(1.0, std::abs(s[i])))
      throw ConfigError("ingham_frame_bounds: duplicate frequency " + std::to_string(s[i]));
}

inline FrameBounds ingham_frame_bounds(const std::vector<double>& frequencies, double T) {
  if (!(T > 0.0)) throw ConfigError("ingham_frame_bounds: T must be positive");
  if (frequencies.empty()) throw ConfigError("ingham_frame_bounds: no frequencies");
  check_distinct(frequencies);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(exponential_gram(frequencies, T), Eigen::EigenvaluesOnly);
  return {T, frequencies.size(), es.eigenvalues()(0), es.eigenvalues()(es.eigenvalues().size() - 1), frequencies};
}

/// Frame bounds of the signed frequencies of the first N modes.
inline FrameBounds ingham_frame_bounds(const NormalSpectrum& s, std::size_t N, double T) {
  NormalSpectrum t = s;
  t.frequencies.resize(std::min(N, s.size()));
  auto fb = ingham_frame_bounds(t.signed_frequencies(), T);
  fb.N = t.frequencies.size();
  return fb;
}

/// Time grid of composite Gauss-Legendre on [0, T], panels <= (2 pi / mu_max) / 8.
inline QuadratureRule<double> time_quadrature(double T, double mu_max) {
  const double period = 2.0 * std::numbers::pi / std::max(mu_max, 1e-12);
  return composite_gauss_legendre(0.0, T, std::min(T, period / 8.0), 8);
}

inline double max_populated_frequency(const InitialData& data, const ModalFamily& family) {
  double m = 0.0;
  for (std::size_t k = 0; k < data.modes(); ++k)
    for (std::size_t n = 0; n < data.truncation(); ++n)
      if (data.f0(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k)) != 0.0 ||
          data.f1(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k)) != 0.0)
        m = std::max(m, family.at(k).frequencies[n]);
  return m;
}

/// Per-mode trace signals s_k(t) at the given times (rows: times, columns: modes).
inline Eigen::MatrixXcd trace_signals(const InitialData& data, const ModalFamily& family,
                                      const std::vector<double>& times) {
  const auto a = spectral_coefficients(data, family);
  Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(times.size()), data.f0.cols());
  for (std::size_t k = 0; k < data.modes(); ++k) {
    const auto c = trace_amplitudes(a, family, k);
    if (c.isZero(0.0)) continue;
    NormalSpectrum s = family.at(k);
    s.frequencies.resize(data.truncation());
    const auto w = s.signed_frequencies();
    for (std::size_t i = 0; i < times.size(); ++i) {
      cdouble v = 0.0;
      for (std::size_t j = 0; j < w.size(); ++j) v += c(static_cast<Eigen::Index>(j)) * std::polar(1.0, w[j] * times[i]);
      S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
    }
  }
  return S;
}

/// Observation density int_region |trace(t, .)|^2 at each time; no region Gram means the full boundary (Parseval).
inline std::vector<double> evaluate_trace(const InitialData& data, const ModalFamily& family,
                                          const std::vector<double>& times,
                                          const std::optional<Eigen::MatrixXd>& region_gram = std::nullopt) {
  const auto S = trace_signals(data, family, times);
  std::vector<double> out(times.size());
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    if (!region_gram) {
      out[static_cast<std::size_t>(i)] = S.row(i).squaredNorm();
    } else {
      const Eigen::Index d = S.cols();
      const Eigen::VectorXcd s = S.row(i).transpose();
      out[static_cast<std::size_t>(i)] = std::real(s.dot(region_gram->topLeftCorner(d, d).cast<cdouble>() * s));
    }
  }
  return out;
}

inline std::vector<double> evaluate_trace(const InitialData& data, const ModalFamily& family,
                                          const std::vector<double>& times, const TangentialBasis& basis,
                                          const Region& region) {
  return evaluate_trace(data, family, times, restricted_gram(basis, region));
}

/// int_0^T int_region |trace|^2 dt / E_nu.
inline double observability_ratio(const InitialData& data, const ModalFamily& family, double T,
                                  const std::optional<Eigen::MatrixXd>& region_gram = std::nullopt) {
  if (!(T > 0.0)) throw ConfigError("observability_ratio: T must be positive");
  const double E = anisotropic_energy(data, family).total;
  if (!(E > 0.0)) throw ConfigError("observability_ratio: zero-energy data");
  const auto q = time_quadrature(T, max_populated_frequency(data, family));
  const auto obs = evaluate_trace(data, family, q.nodes, region_gram);
  double s = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) s += q.weights[i] * obs[i];
  return s / E;
}

/// [c_T min w, C_T max w] over populated modes, for the frame sandwich of observability_ratio (full boundary).
struct SandwichBounds {
  double lower = 0.0;
  double upper = 0.0;
};

inline SandwichBounds frame_sandwich(const InitialData& data, const ModalFamily& family, double T) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t k = 0; k < data.modes(); ++k) {
    const auto c = static_cast<Eigen::Index>(k);
    if (data.f0.col(c).isZero(0.0) && data.f1.col(c).isZero(0.0)) continue;
    const auto fb = ingham_frame_bounds(family.at(k), data.truncation(), T);
    const auto w = trace_weights(family.at(k), data.truncation());
    lo = std::min(lo, fb.c_T * w.min());
    hi = std::max(hi, fb.C_T * w.max());
  }
  return {lo, hi};
}

/// Trace-weight spread at one omega: the per-mode ratio sum |T a|^2 / e_k always lies in [min w, max w].
struct UniformityRow {
  double omega = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

inline std::vector<UniformityRow> uniformity_report(const GasGiantParams& params, const std::vector<double>& omegas,
                                                    std::size_t N, BoundaryCondition bc = BoundaryCondition::dirichlet,
                                                    std::size_t grid = 0) {
  if (grid == 0) grid = default_modal_grid(N);
  std::vector<UniformityRow> rows;
  for (double om : omegas) {
    const auto s = NormalSpectrum::from_modal(solve_modal(params, om, bc, N, grid), N);
    const auto w = trace_weights(s, N);
    rows.push_back({om, w.min(), w.max()});
  }
  return rows;
}

struct ModeControl {
  std::vector<double> frequencies;
  Eigen::VectorXcd moments;
  Eigen::VectorXcd coefficients;
  Eigen::MatrixXcd gram;
  double condition_number = 1.0;
};

struct HumResult {
  double T = 0.0;
  std::vector<ModeControl> modes;
  double control_norm = 0.0;
  /// Relative mismatch of the reached state, recomputed by time quadrature of the control.
  double residual = 0.0;
  bool ill_posed = false;
  double max_condition = 1.0;
};

/// Control g_k(t) = sum_l c_l e^{i w_l t}.
inline cdouble control_value(const ModeControl& m, double t) {
  cdouble v = 0.0;
  for (std::size_t l = 0; l < m.frequencies.size(); ++l)
    v += m.coefficients(static_cast<Eigen::Index>(l)) * std::polar(1.0, m.frequencies[l] * t);
  return v;
}

/// Minimum L^2(0,T) norm boundary control steering w_tt + lambda w = T_n g from rest to the target.
/// Moments: int_0^T g(s) e^{-i w s} ds = e^{-i w T} (f1 + i w f0) / T_n for w = +-mu_n.
inline HumResult hum_control(const InitialData& target, const ModalFamily& family, double T, double T_star) {
  if (!(T > T_star)) throw ConfigError("hum_control: T must exceed T* = " + std::to_string(T_star));
  validate_data(target, family);
  const cdouble I(0.0, 1.0);
  HumResult res;
  res.T = T;
  const Eigen::Index N = target.f0.rows();
  double norm2 = 0.0;
  for (Eigen::Index k = 0; k < target.f0.cols(); ++k) {
    const auto& s = family.at(static_cast<std::size_t>(k));
    ModeControl mc;
    NormalSpectrum t = s;
    t.frequencies.resize(static_cast<std::size_t>(N));
    mc.frequencies = t.signed_frequencies();
    check_distinct(mc.frequencies);
    mc.moments.resize(2 * N);
    for (Eigen::Index j = 0; j < 2 * N; ++j) {
      const double w = mc.frequencies[static_cast<std::size_t>(j)];
      const Eigen::Index n = j % N;
      const double Tn = s.trace_coeffs[static_cast<std::size_t>(n)];
      if (Tn == 0.0) throw NumericalError("hum_control: vanishing trace coefficient");
      mc.moments(j) = std::polar(1.0, -w * T) * (target.f1(n, k) + I * w * target.f0(n, k)) / Tn;
    }
    mc.gram = exponential_gram(mc.frequencies, T);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(mc.gram, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(2 * N - 1);
    mc.condition_number = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    res.max_condition = std::max(res.max_condition, mc.condition_number);
    if (mc.moments.isZero(0.0)) {
      mc.coefficients = Eigen::VectorXcd::Zero(2 * N);
    } else {
      mc.coefficients = mc.gram.ldlt().solve(mc.moments);
      norm2 += std::real(mc.coefficients.dot(mc.gram * mc.coefficients));
    }
    res.modes.push_back(std::move(mc));
  }
  res.ill_posed = res.max_condition > 1e12;
  res.control_norm = std::sqrt(std::max(0.0, norm2));

  // Reached state from the Duhamel integrals, by time quadrature.
  double mu_max = 0.0;
  for (const auto& m : res.modes)
    for (double w : m.frequencies) mu_max = std::max(mu_max, std::abs(w));
  const auto q = composite_gauss_legendre(0.0, T, std::min(T, std::numbers::pi / std::max(mu_max, 1e-12) / 8.0), 8);
  double err2 = 0.0, ref2 = 0.0;
  for (Eigen::Index k = 0; k < target.f0.cols(); ++k) {
    const auto& m = res.modes[static_cast<std::size_t>(k)];
    const auto& s = family.at(static_cast<std::size_t>(k));
    std::vector<cdouble> g(q.nodes.size());
    for (std::size_t i = 0; i < q.nodes.size(); ++i) g[i] = control_value(m, q.nodes[i]);
    for (Eigen::Index n = 0; n < N; ++n) {
      const double mu = s.frequencies[static_cast<std::size_t>(n)], Tn = s.trace_coeffs[static_cast<std::size_t>(n)];
      cdouble w = 0.0, wt = 0.0;
      for (std::size_t i = 0; i < q.nodes.size(); ++i) {
        const double r = mu * (T - q.nodes[i]);
        w += q.weights[i] * std::sin(r) / mu * Tn * g[i];
        wt += q.weights[i] * std::cos(r) * Tn * g[i];
      }
      err2 += std::norm(w - target.f0(n, k)) * mu * mu + std::norm(wt - target.f1(n, k));
      ref2 += std::norm(target.f0(n, k)) * mu * mu + std::norm(target.f1(n, k));
    }
  }
  res.residual = ref2 > 0.0 ? std::sqrt(err2 / ref2) : std::sqrt(err2);
  return res;
}

inline void write_trace_csv(std::ostream& os, const std::vector<double>& times,
                            const std::vector<std::pair<std::string, std::vector<double>>>& columns) {
  os << "t";
  for (const auto& c : columns) os << "," << c.first;
  os << "\n";
  char buf[64];
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", times[i]);
    os << buf;
    for (const auto& c : columns) {
      std::snprintf(buf, sizeof buf, ",%.17g", c.second.at(i));
      os << buf;
    }
    os << "\n";
  }
}

inline void write_frame_csv(std::ostream& os, const std::vector<FrameBounds>& rows, bool header = true) {
  if (header) os << "T,N,c_T,C_T\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g,%.17g\n", r.T, r.N, r.c_T, r.C_T);
    os << buf;
  }
}

inline nlohmann::json hum_to_json(const HumResult& h) {
  nlohmann::json modes = nlohmann::json::array();
  for (std::size_t k = 0; k < h.modes.size(); ++k) {
    const auto& m = h.modes[k];
    nlohmann::json coeffs = nlohmann::json::array();
    for (std::size_t l = 0; l < m.frequencies.size(); ++l) {
      const auto c = m.coefficients(static_cast<Eigen::Index>(l));
      coeffs.push_back({{"frequency", m.frequencies[l]}, {"re", c.real()}, {"im", c.imag()}});
    }
    modes.push_back({{"mode", k}, {"condition_number", m.condition_number}, {"coefficients", coeffs}});
  }
  return {{"T", h.T},           {"control_norm", h.control_norm}, {"residual", h.residual},
          {"ill_posed", h.ill_posed}, {"max_condition", h.max_condition}, {"modes", modes}};
}

}  // namespace ggobs
