#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "json.hpp"

#include "ggobs/errors.hpp"
#include "ggobs/quadrature.hpp"
#include "ggobs/tangential.hpp"
#include "ggobs/waves.hpp"

namespace ggobs {

/// 100-digit float without expression templates, usable as an Eigen scalar.
using mp_float = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<100>, boost::multiprecision::et_off>;

}  // namespace ggobs

template <>
struct Eigen::NumTraits<ggobs::mp_float> : Eigen::GenericNumTraits<ggobs::mp_float> {
  using Real = ggobs::mp_float;
  using NonInteger = ggobs::mp_float;
  using Literal = ggobs::mp_float;
  using Nested = ggobs::mp_float;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 20,
    AddCost = 30,
    MulCost = 60
  };
  static Real epsilon() { return std::numeric_limits<Real>::epsilon(); }
  static Real dummy_precision() { return Real(1e-90); }
  static Real highest() { return (std::numeric_limits<Real>::max)(); }
  static Real lowest() { return std::numeric_limits<Real>::lowest(); }
  static Real infinity() { return std::numeric_limits<Real>::infinity(); }
  static Real quiet_NaN() { return std::numeric_limits<Real>::quiet_NaN(); }
  static int digits10() { return std::numeric_limits<Real>::digits10; }
};

namespace ggobs {

// ---------------------------------------------------------------- localized failure

struct LocalizedFailureRow {
  int degree = 0;
  double cap_mass = 0.0;
  double full_ratio = 0.0;
  double cap_ratio = 0.0;
};

/// Sectoral data Y_l^l with the first normal profile (f0 = 1, f1 = 0); ratios over [0, T].
inline std::vector<LocalizedFailureRow> localized_failure_demo(const GasGiantParams& params, const Region& cap,
                                                               const std::vector<int>& degrees, double T,
                                                               BoundaryCondition bc = BoundaryCondition::dirichlet,
                                                               std::size_t grid = 1000) {
  if (cap.manifold != Manifold::sphere2) throw ConfigError("localized_failure_demo: sphere2 cap required");
  if (!(T > params.t_star())) throw ConfigError("localized_failure_demo: T must exceed T*");
  if (degrees.empty()) throw ConfigError("localized_failure_demo: no degrees");
  const int L = *std::max_element(degrees.begin(), degrees.end());
  if (*std::min_element(degrees.begin(), degrees.end()) < 0) throw ConfigError("localized_failure_demo: negative degree");
  const auto basis = build_basis(Manifold::sphere2, double(L) * (L + 1));
  const auto M = restricted_gram(basis, cap);
  std::vector<LocalizedFailureRow> rows;
  for (int l : degrees) {
    const auto k = static_cast<Eigen::Index>(concentrating_mode(basis, l));
    const double omega = double(l) * (l + 1);
    const auto fam = ModalFamily::uniform(NormalSpectrum::from_modal(solve_modal(params, omega, bc, 1, grid), 1));
    auto data = InitialData::zeros(1, 1, omega);
    data.f0(0, 0) = 1.0;
    LocalizedFailureRow r;
    r.degree = l;
    r.cap_mass = M(k, k);
    r.full_ratio = observability_ratio(data, fam, T);
    r.cap_ratio = observability_ratio(data, fam, T, Eigen::MatrixXd::Constant(1, 1, r.cap_mass));
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------- band-limited constant

struct BandLimitedRow {
  double Lambda = 0.0;
  int degree = 0;
  std::size_t dimension = 0;
  double lambda_min = 0.0;
  /// Below the double-precision floor (the value itself comes from 100-digit arithmetic).
  bool below_double_floor = false;
};

struct BandLimitedFit {
  std::vector<BandLimitedRow> rows;
  /// log lambda_min ~ intercept + slope sqrt(Lambda), least squares over rows with Lambda > 0.
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double rms_residual = 0.0;
};

namespace detail {

inline mp_float smallest_eigenvalue(const Eigen::Matrix<mp_float, Eigen::Dynamic, Eigen::Dynamic>& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<mp_float, Eigen::Dynamic, Eigen::Dynamic>> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

/// Smallest eigenvalue of the polar-cap Gram on degrees <= L: block diagonal in the order m,
/// blocks 2 pi int_{cos r}^1 Pbar_l^m Pbar_l'^m dz.
inline mp_float cap_lambda_min(int L, double radius) {
  using Mat = Eigen::Matrix<mp_float, Eigen::Dynamic, Eigen::Dynamic>;
  const mp_float two_pi = 2 * boost::math::constants::pi<mp_float>();
  const auto q = gauss_legendre<mp_float>(static_cast<std::size_t>(L + 2), mp_float(cos(mp_float(radius))), mp_float(1));
  std::vector<std::vector<mp_float>> P;
  for (const auto& z : q.nodes) P.push_back(normalized_legendre<mp_float>(L, z));
  auto at = [](int l, int m) { return static_cast<std::size_t>(l * (l + 1) / 2 + m); };
  mp_float best = 1;
  for (int m = 0; m <= L; ++m) {
    const int n = L - m + 1;
    Mat B(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        mp_float s = 0;
        for (std::size_t g = 0; g < q.nodes.size(); ++g) s += q.weights[g] * P[g][at(m + i, m)] * P[g][at(m + j, m)];
        B(i, j) = B(j, i) = two_pi * s;
      }
    best = std::min(best, smallest_eigenvalue(B));
  }
  return best;
}

/// Same for an arc of half-width w centered at angle 0 on the circle, frequencies <= K: cos and sin blocks.
inline mp_float arc_lambda_min(int K, double half_width) {
  using Mat = Eigen::Matrix<mp_float, Eigen::Dynamic, Eigen::Dynamic>;
  const mp_float pi = boost::math::constants::pi<mp_float>();
  const mp_float w = half_width;
  auto int_cos = [&](int p) -> mp_float { return p == 0 ? mp_float(2 * w) : mp_float(2 * sin(p * w) / p); };
  Mat C(K + 1, K + 1), S(std::max(K, 1), std::max(K, 1));
  for (int a = 0; a <= K; ++a)
    for (int b = a; b <= K; ++b) {
      const mp_float sa = a == 0 ? mp_float(1 / sqrt(2 * pi)) : mp_float(1 / sqrt(pi));
      const mp_float sb = b == 0 ? mp_float(1 / sqrt(2 * pi)) : mp_float(1 / sqrt(pi));
      C(a, b) = C(b, a) = sa * sb * (int_cos(std::abs(a - b)) + int_cos(a + b)) / 2;
    }
  mp_float best = smallest_eigenvalue(C);
  if (K >= 1) {
    for (int a = 1; a <= K; ++a)
      for (int b = a; b <= K; ++b) S(a - 1, b - 1) = S(b - 1, a - 1) = (int_cos(std::abs(a - b)) - int_cos(a + b)) / (2 * pi);
    best = std::min(best, smallest_eigenvalue(S));
  }
  return best;
}

}  // namespace detail

/// lambda_min of the single-region restricted Gram on E_Lambda for each Lambda (spectrum is rotation invariant,
/// so the region is centered at the pole / angle 0), with a log-linear fit in sqrt(Lambda).
inline BandLimitedFit band_limited_constant(const Region& region, const std::vector<double>& Lambdas) {
  if (Lambdas.empty()) throw ConfigError("band_limited_constant: empty sweep");
  for (std::size_t i = 1; i < Lambdas.size(); ++i)
    if (!(Lambdas[i] > Lambdas[i - 1])) throw ConfigError("band_limited_constant: Lambda must increase");
  BandLimitedFit fit;
  for (double lam : Lambdas) {
    const auto basis = build_basis(region.manifold, lam);
    BandLimitedRow r;
    r.Lambda = lam;
    r.degree = basis.bandwidth();
    r.dimension = basis.dimension();
    const mp_float v = region.manifold == Manifold::sphere2 ? detail::cap_lambda_min(r.degree, region.radius)
                                                            : detail::arc_lambda_min(r.degree, region.radius);
    r.lambda_min = v.convert_to<double>();
    r.below_double_floor = r.lambda_min < 1e-14;
    fit.rows.push_back(r);
  }
  std::vector<double> xs, ys;
  for (const auto& r : fit.rows)
    if (r.Lambda > 0.0 && r.lambda_min > 0.0) {
      xs.push_back(std::sqrt(r.Lambda));
      ys.push_back(std::log(r.lambda_min));
    }
  if (xs.size() >= 2) {
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n, my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
      syy += (ys[i] - my) * (ys[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) ss += std::pow(ys[i] - fit.intercept - fit.slope * xs[i], 2);
    fit.r_squared = syy > 0.0 ? 1.0 - ss / syy : 1.0;
    fit.rms_residual = std::sqrt(ss / n);
  }
  return fit;
}

/// Lambda values l (l + 1) (sphere) or k^2 (circle) for degrees 0..max_degree.
inline std::vector<double> degree_sweep(Manifold m, int max_degree) {
  std::vector<double> out;
  for (int l = 0; l <= max_degree; ++l) out.push_back(m == Manifold::sphere2 ? double(l) * (l + 1) : double(l) * l);
  return out;
}

// ---------------------------------------------------------------- convexified design

struct ObservationDesign {
  Manifold manifold = Manifold::sphere2;
  Region region;
  double fraction = 0.0;
  int bandwidth = 0;
  /// Eigenvalue cutoff Lambda of the design basis.
  double cutoff = 0.0;
  std::size_t dimension = 0;
  std::vector<Mat3> rotations;
  std::vector<double> weights;
  std::vector<Eigen::MatrixXd> grams;
  double residual = 0.0;
  double epsilon = 1e-6;
  bool accepted = false;
  std::size_t iterations = 0;

  /// sum theta_j M(R_j).
  Eigen::MatrixXd averaged_gram() const {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dimension), static_cast<Eigen::Index>(dimension));
    for (std::size_t j = 0; j < grams.size(); ++j) S += weights[j] * grams[j];
    return S;
  }
};

inline constexpr double kDefaultDesignEpsilon = 1e-6;

/// || sum theta_j M_j - L Id ||_F.
inline double design_residual(const std::vector<Eigen::MatrixXd>& grams, const std::vector<double>& theta, double L) {
  Eigen::MatrixXd S = -L * Eigen::MatrixXd::Identity(grams.front().rows(), grams.front().cols());
  for (std::size_t j = 0; j < grams.size(); ++j) S += theta[j] * grams[j];
  return S.norm();
}

namespace detail {

/// Minimizes ||A x - b||^2 over the simplex by a primal active-set method from the uniform point.
inline std::vector<double> simplex_least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                                 std::size_t& iterations, double tol = 1e-12) {
  const Eigen::Index J = A.cols();
  const Eigen::MatrixXd H = A.transpose() * A;
  const Eigen::VectorXd c = A.transpose() * b;
  Eigen::VectorXd x = Eigen::VectorXd::Constant(J, 1.0 / static_cast<double>(J));
  std::vector<bool> free(static_cast<std::size_t>(J), true);
  auto objective = [&](const Eigen::VectorXd& v) { return (A * v - b).squaredNorm(); };
  const double scale = std::max(1.0, H.diagonal().maxCoeff());
  iterations = 0;
  for (; iterations < 50 * static_cast<std::size_t>(J) + 100; ++iterations) {
    std::vector<Eigen::Index> F;
    for (Eigen::Index j = 0; j < J; ++j)
      if (free[static_cast<std::size_t>(j)]) F.push_back(j);
    const auto nf = static_cast<Eigen::Index>(F.size());
    // KKT system of the equality-constrained subproblem on the free set.
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nf + 1, nf + 1);
    Eigen::VectorXd rhs(nf + 1);
    for (Eigen::Index i = 0; i < nf; ++i) {
      for (Eigen::Index j = 0; j < nf; ++j) K(i, j) = H(F[i], F[j]);
      K(i, nf) = K(nf, i) = 1.0;
      rhs(i) = c(F[i]);
    }
    rhs(nf) = 1.0;
    const Eigen::VectorXd sol = K.completeOrthogonalDecomposition().solve(rhs);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(J);
    for (Eigen::Index i = 0; i < nf; ++i) z(F[i]) = sol(i);
    const bool improves = objective(z) < objective(x) - tol * tol * scale;
    if (improves) {
      bool feasible = true;
      for (Eigen::Index i = 0; i < nf; ++i) feasible = feasible && z(F[i]) >= 0.0;
      if (feasible) {
        x = z;
      } else {
        double step = 1.0;
        Eigen::Index block = -1;
        for (Eigen::Index i = 0; i < nf; ++i) {
          const Eigen::Index j = F[i];
          if (z(j) < 0.0) {
            const double s = x(j) / (x(j) - z(j));
            if (s < step) {
              step = s;
              block = j;
            }
          }
        }
        x += step * (z - x);
        for (Eigen::Index i = 0; i < nf; ++i)
          if (x(F[i]) <= 0.0 || F[i] == block) {
            x(F[i]) = 0.0;
            free[static_cast<std::size_t>(F[i])] = false;
          }
        x /= x.sum();
        continue;
      }
    }
    // Stationarity: gradient g = 2 (H x - c); multiplier from the free set.
    const Eigen::VectorXd g = H * x - c;
    double nu = 0.0;
    std::size_t nfree = 0;
    for (Eigen::Index j = 0; j < J; ++j)
      if (free[static_cast<std::size_t>(j)]) {
        nu -= g(j);
        ++nfree;
      }
    nu /= static_cast<double>(std::max<std::size_t>(nfree, 1));
    Eigen::Index enter = -1;
    double worst = -tol * scale;
    for (Eigen::Index j = 0; j < J; ++j)
      if (!free[static_cast<std::size_t>(j)] && g(j) + nu < worst) {
        worst = g(j) + nu;
        enter = j;
      }
    if (enter < 0) break;
    free[static_cast<std::size_t>(enter)] = true;
  }
  std::vector<double> out(x.data(), x.data() + J);
  for (auto& v : out) v = std::max(v, 0.0);
  const double s = std::accumulate(out.begin(), out.end(), 0.0);
  for (auto& v : out) v /= s;
  return out;
}

/// Frobenius-isometric vectorization of a symmetric matrix (off-diagonal entries scaled by sqrt 2).
inline Eigen::VectorXd sym_vec(const Eigen::MatrixXd& M) {
  const Eigen::Index d = M.rows();
  Eigen::VectorXd v(d * (d + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i; j < d; ++j) v(k++) = i == j ? M(i, i) : std::numbers::sqrt2 * M(i, j);
  return v;
}

}  // namespace detail

/// Simplex weights minimizing || sum theta_j M(R_j) - L Id ||_F; accepted iff residual <= epsilon L.
inline ObservationDesign solve_design(const TangentialBasis& basis, const Region& cap, const RotationSet& candidates,
                                      double epsilon = kDefaultDesignEpsilon) {
  if (candidates.size() == 0) throw ConfigError("solve_design: empty candidate set");
  if (!(epsilon > 0.0)) throw ConfigError("solve_design: epsilon must be positive");
  if (cap.manifold != basis.manifold()) throw ConfigError("solve_design: region and basis manifolds differ");
  ObservationDesign d;
  d.manifold = basis.manifold();
  d.region = cap;
  d.fraction = cap.fraction();
  d.bandwidth = basis.bandwidth();
  d.cutoff = basis.cutoff();
  d.dimension = basis.dimension();
  d.rotations = candidates.rotations;
  d.epsilon = epsilon;
  for (const auto& R : candidates.rotations) d.grams.push_back(restricted_gram(basis, cap, R));
  const auto n = static_cast<Eigen::Index>(d.dimension * (d.dimension + 1) / 2);
  Eigen::MatrixXd A(n, static_cast<Eigen::Index>(d.grams.size()));
  for (std::size_t j = 0; j < d.grams.size(); ++j) A.col(static_cast<Eigen::Index>(j)) = detail::sym_vec(d.grams[j]);
  const Eigen::VectorXd b =
      detail::sym_vec(d.fraction * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d.dimension),
                                                               static_cast<Eigen::Index>(d.dimension)));
  d.weights = detail::simplex_least_squares(A, b, d.iterations);
  d.residual = design_residual(d.grams, d.weights, d.fraction);
  d.accepted = d.residual <= epsilon * d.fraction;
  return d;
}

/// Smallest built-in candidate set exact for the basis (t >= 2 * bandwidth on S^2, J > 2 * bandwidth on S^1).
inline RotationSet default_candidates(const TangentialBasis& basis) {
  const int need = 2 * basis.bandwidth();
  if (basis.manifold() == Manifold::circle) return circle_rotations(static_cast<std::size_t>(need + 1));
  if (need == 0) return {{Mat3::Identity()}, RotationProvenance::grid, 0};
  if (need > 11) throw ConfigError("no built-in spherical design of strength " + std::to_string(need));
  return spherical_design_rotations(need);
}

// ---------------------------------------------------------------- switching schedules

struct ScheduleInterval {
  double start = 0.0;
  double end = 0.0;
  std::size_t index = 0;
};

struct SwitchingSchedule {
  double period = 0.0;
  std::size_t micro = 0;
  std::vector<ScheduleInterval> slots;
  /// Contiguous blocks of length theta_j T_0, in index order.
  std::vector<ScheduleInterval> one_cycle;
  std::vector<double> fractions;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  bool within_tolerance = true;
};

/// Largest-remainder apportionment of theta_j micro slots, placed by maximum running deficit (ties: lowest index).
inline SwitchingSchedule realize_schedule(const ObservationDesign& design, double T0, std::size_t micro,
                                          double t_star = 0.0, double delta_sched = -1.0) {
  const std::size_t J = design.weights.size();
  if (J == 0) throw ConfigError("realize_schedule: empty design");
  if (!(T0 > t_star)) throw ConfigError("realize_schedule: T_0 must exceed T*");
  if (micro < J) throw ConfigError("realize_schedule: micro must be >= number of rotations");
  SwitchingSchedule s;
  s.period = T0;
  s.micro = micro;
  s.tolerance = delta_sched < 0.0 ? 1e-3 * T0 : delta_sched;
  const double m = static_cast<double>(micro);
  std::vector<std::size_t> count(J);
  std::vector<double> rem(J);
  std::size_t used = 0;
  for (std::size_t j = 0; j < J; ++j) {
    const double q = design.weights[j] * m;
    count[j] = static_cast<std::size_t>(std::floor(q + 1e-12));
    rem[j] = q - static_cast<double>(count[j]);
    used += count[j];
  }
  std::vector<std::size_t> order(J);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t i = 0; used < micro; ++i, ++used) ++count[order[i % J]];
  std::vector<std::size_t> placed(J, 0);
  const double h = T0 / m;
  for (std::size_t slot = 0; slot < micro; ++slot) {
    std::size_t best = J;
    double best_def = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < J; ++j) {
      if (placed[j] >= count[j]) continue;
      const double def = design.weights[j] * static_cast<double>(slot + 1) - static_cast<double>(placed[j]);
      if (def > best_def + 1e-12) {
        best_def = def;
        best = j;
      }
    }
    ++placed[best];
    s.slots.push_back({h * static_cast<double>(slot), slot + 1 == micro ? T0 : h * static_cast<double>(slot + 1), best});
  }
  s.fractions.assign(J, 0.0);
  for (const auto& iv : s.slots) s.fractions[iv.index] += (iv.end - iv.start) / T0;
  for (std::size_t j = 0; j < J; ++j)
    s.max_deviation = std::max(s.max_deviation, std::abs(s.fractions[j] - design.weights[j]) * T0);
  s.within_tolerance = s.max_deviation <= s.tolerance;
  double t = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    if (design.weights[j] <= 0.0) continue;
    const double e = std::min(T0, t + design.weights[j] * T0);
    s.one_cycle.push_back({t, e, j});
    t = e;
  }
  if (!s.one_cycle.empty()) s.one_cycle.back().end = T0;
  return s;
}

// ---------------------------------------------------------------- moving observation

struct MovingObservation {
  std::size_t periods = 0;
  std::vector<double> period_ratios;
  /// (1/m) int_0^{m T_0} / E_nu.
  double average_ratio = 0.0;
  double c_T0 = 0.0;
  double min_trace_weight = 0.0;
  double lower_bound = 0.0;
  bool satisfied = false;
};

/// Observability constant for the populated modes: min_k c_{T0}(+-mu_n(omega_k)) * min trace weight.
inline std::pair<double, double> observation_constant(const InitialData& data, const ModalFamily& family, double T0) {
  double c = std::numeric_limits<double>::infinity(), w = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < data.modes(); ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    if (data.f0.col(col).isZero(0.0) && data.f1.col(col).isZero(0.0)) continue;
    c = std::min(c, ingham_frame_bounds(family.at(k), data.truncation(), T0).c_T);
    w = std::min(w, trace_weights(family.at(k), data.truncation()).min());
  }
  return {c, w};
}

namespace detail {

/// int over [a, b] of s(t)^* M s(t) for slot-wise regions; integrand evaluated by Gauss-Legendre.
inline double switched_integral(const InitialData& data, const ModalFamily& family,
                                const std::vector<ScheduleInterval>& slots, const std::vector<Eigen::MatrixXd>& grams,
                                double offset, double mu_max) {
  const double panel = 2.0 * std::numbers::pi / std::max(mu_max, 1e-12) / 8.0;
  double total = 0.0;
  const auto base = gauss_legendre<double>(8);
  for (const auto& iv : slots) {
    const double a = offset + iv.start, b = offset + iv.end;
    const auto panels = static_cast<std::size_t>(std::ceil((b - a) / panel));
    const double h = (b - a) / static_cast<double>(panels);
    std::vector<double> times;
    std::vector<double> weights;
    for (std::size_t p = 0; p < panels; ++p)
      for (std::size_t i = 0; i < 8; ++i) {
        times.push_back(a + h * (static_cast<double>(p) + (base.nodes[i] + 1.0) / 2.0));
        weights.push_back(base.weights[i] * h / 2.0);
      }
    const auto obs = evaluate_trace(data, family, times, grams[iv.index]);
    for (std::size_t i = 0; i < obs.size(); ++i) total += weights[i] * obs[i];
  }
  return total;
}

}  // namespace detail

/// Grams of the design's rotations in the data's basis.
inline std::vector<Eigen::MatrixXd> design_grams_for(const ObservationDesign& design, const TangentialBasis& data_basis) {
  std::vector<Eigen::MatrixXd> g;
  for (const auto& R : design.rotations) g.push_back(restricted_gram(data_basis, design.region, R));
  return g;
}

/// Observation over [0, m T_0] under the periodically repeated schedule (micro slots or the one-cycle variant).
inline MovingObservation moving_observability_check(const ObservationDesign& design, const SwitchingSchedule& schedule,
                                                    const InitialData& data, const ModalFamily& family,
                                                    const TangentialBasis& data_basis, std::size_t m,
                                                    bool one_cycle = false) {
  if (m < 1) throw ConfigError("moving_observability_check: m must be >= 1");
  if (data.bandwidth > design.cutoff + 1e-12)
    throw ConfigError("moving_observability_check: data bandwidth exceeds design bandwidth");
  const auto grams = design_grams_for(design, data_basis);
  const double E = anisotropic_energy(data, family).total;
  if (!(E > 0.0)) throw ConfigError("moving_observability_check: zero-energy data");
  const double mu_max = max_populated_frequency(data, family);
  MovingObservation r;
  r.periods = m;
  double total = 0.0;
  for (std::size_t p = 0; p < m; ++p) {
    const double v = detail::switched_integral(data, family, one_cycle ? schedule.one_cycle : schedule.slots, grams,
                                               static_cast<double>(p) * schedule.period, mu_max);
    r.period_ratios.push_back(v / E);
    total += v;
  }
  r.average_ratio = total / static_cast<double>(m) / E;
  auto [c, w] = observation_constant(data, family, schedule.period);
  r.c_T0 = c;
  r.min_trace_weight = w;
  const double eps = design.epsilon * design.fraction;
  r.lower_bound = (design.fraction - eps) * c * w;
  r.satisfied = *std::min_element(r.period_ratios.begin(), r.period_ratios.end()) >= r.lower_bound;
  return r;
}

// ---------------------------------------------------------------- Cesaro protocol

struct CesaroBlock {
  std::size_t block = 0;
  double Lambda = 0.0;
  double epsilon = 0.0;
  int bandwidth = 0;
  bool truncated = false;
  bool accepted = false;
  double design_residual = 0.0;
  double block_ratio = 0.0;
  double running_average = 0.0;
  double lower_bound = 0.0;
};

struct CesaroResult {
  std::vector<CesaroBlock> blocks;
  double c_T0 = 0.0;
  double min_trace_weight = 0.0;
  double delta = 0.1;
  /// Smallest N with running average >= (L - delta) c w; 0 if never reached.
  std::size_t N_delta = 0;
};

struct CesaroOptions {
  std::size_t micro = 200;
  double delta = 0.1;
  /// Largest bandwidth degree with a built-in exact candidate set.
  int max_degree = 5;
};

/// Blocks m = 1..N with Lambda_m = m^2, epsilon_m = 1/m; each block is one period of its own switching schedule.
inline CesaroResult cesaro_protocol(const Region& region, double T0, std::size_t N_blocks, const InitialData& data,
                                    const ModalFamily& family, const TangentialBasis& data_basis,
                                    const CesaroOptions& opt = {}) {
  if (N_blocks < 1) throw ConfigError("cesaro_protocol: N_blocks must be >= 1");
  const double E = anisotropic_energy(data, family).total;
  if (!(E > 0.0) || !std::isfinite(E)) throw ConfigError("cesaro_protocol: data must have finite positive energy");
  CesaroResult res;
  res.delta = opt.delta;
  auto [c, w] = observation_constant(data, family, T0);
  res.c_T0 = c;
  res.min_trace_weight = w;
  const double mu_max = max_populated_frequency(data, family);
  const double L = region.fraction();
  double total = 0.0;
  for (std::size_t m = 1; m <= N_blocks; ++m) {
    CesaroBlock b;
    b.block = m;
    b.Lambda = double(m) * double(m);
    b.epsilon = 1.0 / double(m);
    auto basis = build_basis(region.manifold, b.Lambda);
    if (region.manifold == Manifold::sphere2 && basis.bandwidth() > opt.max_degree) {
      basis = build_basis(region.manifold, double(opt.max_degree) * (opt.max_degree + 1));
      b.truncated = true;
    }
    b.bandwidth = basis.bandwidth();
    const auto design = solve_design(basis, region, default_candidates(basis), b.epsilon);
    b.accepted = design.accepted;
    b.design_residual = design.residual;
    const auto sched = realize_schedule(design, T0, std::max(opt.micro, design.weights.size()));
    const auto grams = design_grams_for(design, data_basis);
    const double v = detail::switched_integral(data, family, sched.slots, grams, static_cast<double>(m - 1) * T0, mu_max);
    b.block_ratio = v / E;
    total += v;
    b.running_average = total / static_cast<double>(m) / E;
    b.lower_bound = (L - opt.delta) * c * w;
    if (res.N_delta == 0 && b.running_average >= b.lower_bound) res.N_delta = m;
    res.blocks.push_back(b);
  }
  return res;
}

// ---------------------------------------------------------------- exports

inline nlohmann::json design_to_json(const ObservationDesign& d) {
  nlohmann::json rots = nlohmann::json::array();
  for (std::size_t j = 0; j < d.rotations.size(); ++j) {
    auto [axis, angle] = axis_angle(d.rotations[j]);
    rots.push_back({{"index", j}, {"axis", {axis.x(), axis.y(), axis.z()}}, {"angle", angle}, {"weight", d.weights[j]}});
  }
  return {{"manifold", to_string(d.manifold)}, {"region", region_to_json(d.region)},
          {"fraction", d.fraction},            {"bandwidth", d.bandwidth},
          {"dimension", d.dimension},          {"residual", d.residual},
          {"epsilon", d.epsilon},              {"accepted", d.accepted},
          {"rotations", rots}};
}

inline void write_schedule_csv(std::ostream& os, const std::vector<ScheduleInterval>& slots, bool header = true) {
  if (header) os << "t_start,t_end,rotation_index\n";
  char buf[96];
  for (const auto& s : slots) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%zu\n", s.start, s.end, s.index);
    os << buf;
  }
}

inline void write_cesaro_csv(std::ostream& os, const CesaroResult& r, bool header = true) {
  if (header) os << "N,running_average,lower_bound,block_ratio,bandwidth,design_residual\n";
  char buf[192];
  for (const auto& b : r.blocks) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%d,%.17g\n", b.block, b.running_average, b.lower_bound,
                  b.block_ratio, b.bandwidth, b.design_residual);
    os << buf;
  }
}

inline void write_localized_csv(std::ostream& os, const std::vector<LocalizedFailureRow>& rows, bool header = true) {
  if (header) os << "l,cap_mass,full_ratio,cap_ratio\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", r.degree, r.cap_mass, r.full_ratio, r.cap_ratio);
    os << buf;
  }
}

inline void write_band_limited_csv(std::ostream& os, const BandLimitedFit& f, bool header = true) {
  if (header) os << "Lambda,degree,dimension,lambda_min,below_double_floor\n";
  char buf[128];
  for (const auto& r : f.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%d,%zu,%.17g,%d\n", r.Lambda, r.degree, r.dimension, r.lambda_min,
                  r.below_double_floor ? 1 : 0);
    os << buf;
  }
}

}  // namespace ggobs
