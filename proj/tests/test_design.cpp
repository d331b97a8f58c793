#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "ggobs/design.hpp"
#include "oracles.hpp"

using ggobs::BoundaryCondition;
using ggobs::InitialData;
using ggobs::Manifold;
using ggobs::Region;
using ggobs::Vec3;

namespace {

constexpr double kPi = std::numbers::pi;

const Region& cap30() {
  static const Region r = Region::cap(Vec3::UnitZ(), kPi / 6);
  return r;
}

// Sphere, beta = 2, n = 2, band l <= 2, N = 6 normal modes.
struct SphereSetup {
  ggobs::TangentialBasis basis = ggobs::build_basis(Manifold::sphere2, 6.0);
  ggobs::ModalFamily family = ggobs::build_modal_family(ggobs::derive_constants(2.0, 2), basis, 6);
};

const SphereSetup& sphere() {
  static const SphereSetup s;
  return s;
}

const ggobs::ObservationDesign& ico_design() {
  static const auto d = ggobs::solve_design(sphere().basis, cap30(), ggobs::spherical_design_rotations(5));
  return d;
}

}  // namespace

TEST(Design, LocalizedFailureDecreasesAndFactorizes) {
  const auto p = ggobs::derive_constants(2.0, 2);
  std::vector<int> degrees;
  for (int l = 2; l <= 12; ++l) degrees.push_back(l);
  auto rows = ggobs::localized_failure_demo(p, cap30(), degrees, 5.0);
  ASSERT_EQ(rows.size(), 11u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int l = rows[i].degree;
    EXPECT_NEAR(rows[i].cap_ratio, rows[i].cap_mass * rows[i].full_ratio, 1e-13 * rows[i].full_ratio);
    // Cap mass of Y_l^l by direct integration of Boost's harmonic.
    const double mass = 2 * kPi * oracle::integrate(
                                      [l](double th) {
                                        const double y = oracle::real_harmonic(l, l, th, 0.0);
                                        return 0.5 * y * y * std::sin(th);
                                      },
                                      0.0, kPi / 6);
    EXPECT_NEAR(rows[i].cap_mass, mass, 1e-13);
    if (i > 0) {
      EXPECT_LT(rows[i].cap_ratio, rows[i - 1].cap_ratio);
    }
    // Full-boundary ratio within the single-mode frame interval.
    auto sys = ggobs::solve_modal(p, double(l) * (l + 1), BoundaryCondition::dirichlet, 1, 1000);
    auto s = ggobs::NormalSpectrum::from_modal(sys, 1);
    auto fb = ggobs::ingham_frame_bounds(s, 1, 5.0);
    auto w = ggobs::trace_weights(s, 1);
    EXPECT_GE(rows[i].full_ratio, fb.c_T * w.min());
    EXPECT_LE(rows[i].full_ratio, fb.C_T * w.max());
  }
  EXPECT_LE(rows.back().cap_ratio, 0.1 * rows.front().cap_ratio);
  EXPECT_THROW(ggobs::localized_failure_demo(p, cap30(), degrees, 3.0), ggobs::ConfigError);
  EXPECT_THROW(ggobs::localized_failure_demo(p, Region::arc(0, 1), degrees, 5.0), ggobs::ConfigError);
}

TEST(Design, BandLimitedConstantTrend) {
  auto fit = ggobs::band_limited_constant(cap30(), ggobs::degree_sweep(Manifold::sphere2, 12));
  ASSERT_EQ(fit.rows.size(), 13u);
  EXPECT_NEAR(fit.rows[0].lambda_min, cap30().fraction(), 1e-15);
  EXPECT_EQ(fit.rows[12].dimension, 169u);
  for (std::size_t i = 1; i < fit.rows.size(); ++i) EXPECT_LE(fit.rows[i].lambda_min, fit.rows[i - 1].lambda_min);
  EXPECT_LT(fit.slope, 0.0);
  EXPECT_GE(fit.r_squared, 0.9);
  EXPECT_TRUE(fit.rows[12].below_double_floor);
  EXPECT_FALSE(fit.rows[2].below_double_floor);
}

TEST(Design, BandLimitedMatchesDoublePrecisionGram) {
  // Where double precision resolves it, lambda_min agrees with the restricted Gram at a rotated cap.
  std::mt19937_64 rng(9);
  const auto R = ggobs::random_rotation(Manifold::sphere2, rng);
  auto fit = ggobs::band_limited_constant(cap30(), {0.0, 2.0, 6.0, 12.0});
  for (const auto& row : fit.rows) {
    auto b = ggobs::build_basis(Manifold::sphere2, row.Lambda);
    auto M = ggobs::restricted_gram(b, cap30(), R);
    const double ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M).eigenvalues()(0);
    EXPECT_NEAR(row.lambda_min, ev, 1e-14) << row.Lambda;
  }
  auto arc = Region::arc(0.0, 0.6);
  auto cfit = ggobs::band_limited_constant(arc, {0.0, 1.0, 4.0});
  for (const auto& row : cfit.rows) {
    auto b = ggobs::build_basis(Manifold::circle, row.Lambda);
    auto M = ggobs::restricted_gram(b, arc, ggobs::planar_rotation(0.7));
    const double ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M).eigenvalues()(0);
    EXPECT_NEAR(row.lambda_min, ev, 1e-14) << row.Lambda;
  }
  EXPECT_THROW(ggobs::band_limited_constant(cap30(), {2.0, 1.0}), ggobs::ConfigError);
}

TEST(Design, IcosahedralCandidatesConvexifyExactly) {
  const auto& d = ico_design();
  EXPECT_TRUE(d.accepted);
  EXPECT_LE(d.residual, 1e-8);
  // Exactness oracle: the uniform average equals L Id entrywise.
  Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(9, 9);
  for (const auto& M : d.grams) avg += M / 12.0;
  EXPECT_LT((avg - d.fraction * Eigen::MatrixXd::Identity(9, 9)).cwiseAbs().maxCoeff(), 1e-12);
  for (double w : d.weights) EXPECT_NEAR(w, 1.0 / 12.0, 1e-12);
}

TEST(Design, CircleArcsConvexifyExactly) {
  auto b = ggobs::build_basis(Manifold::circle, 9.0);
  auto d = ggobs::solve_design(b, Region::arc(0.0, 0.5), ggobs::circle_rotations(8));
  EXPECT_LE(d.residual, 1e-12);
  std::vector<double> uniform(8, 1.0 / 8);
  EXPECT_LE(ggobs::design_residual(d.grams, uniform, d.fraction), 1e-12);
}

TEST(Design, StrongerDesignCoversHigherBand) {
  auto b = ggobs::build_basis(Manifold::sphere2, 20.0);
  auto d = ggobs::solve_design(b, cap30(), ggobs::spherical_design_rotations(11));
  EXPECT_TRUE(d.accepted);
  EXPECT_LE(d.residual, 1e-8);
  // The icosahedron is too weak for l <= 4 (needs t >= 8).
  auto weak = ggobs::solve_design(b, cap30(), ggobs::spherical_design_rotations(5));
  EXPECT_GT(weak.residual, 1e-4);
}

TEST(Design, TrivialFullSphereDesign) {
  auto b = ggobs::build_basis(Manifold::sphere2, 6.0);
  ggobs::RotationSet one{{ggobs::Mat3::Identity()}, ggobs::RotationProvenance::grid, 0};
  auto d = ggobs::solve_design(b, Region::full(Manifold::sphere2), one);
  EXPECT_EQ(d.weights, std::vector<double>{1.0});
  EXPECT_LT(d.residual, 1e-14);
  EXPECT_DOUBLE_EQ(d.fraction, 1.0);
  EXPECT_TRUE(d.accepted);
}

TEST(Design, InfeasibleDesignReportedNotAccepted) {
  auto b = ggobs::build_basis(Manifold::sphere2, 6.0);
  auto pts = ggobs::spherical_design_points(5);
  ggobs::RotationSet few{{ggobs::rotation_to(pts[0]), ggobs::rotation_to(pts[1])}, ggobs::RotationProvenance::grid, 0};
  auto d = ggobs::solve_design(b, cap30(), few);
  EXPECT_FALSE(d.accepted);
  EXPECT_GT(d.residual, 1e-6 * d.fraction);
  double s = 0.0;
  for (double w : d.weights) {
    EXPECT_GE(w, 0.0);
    s += w;
  }
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(Design, SimplexSolverIsOptimal) {
  // Random candidates: compare against a dense scan of the simplex for J = 3.
  auto b = ggobs::build_basis(Manifold::sphere2, 2.0);
  std::mt19937_64 rng(13);
  ggobs::RotationSet set;
  for (int j = 0; j < 3; ++j) set.rotations.push_back(ggobs::random_rotation(Manifold::sphere2, rng));
  auto d = ggobs::solve_design(b, cap30(), set);
  double best = 1e300;
  const int n = 400;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; i + j <= n; ++j) {
      std::vector<double> th{double(i) / n, double(j) / n, double(n - i - j) / n};
      best = std::min(best, ggobs::design_residual(d.grams, th, d.fraction));
    }
  EXPECT_LE(d.residual, best + 1e-12);
}

TEST(Design, EnlargingCandidatesNeverIncreasesResidual) {
  auto b = ggobs::build_basis(Manifold::sphere2, 6.0);
  auto all = ggobs::spherical_design_rotations(5);
  double prev = 1e300;
  for (std::size_t J = 1; J <= all.size(); ++J) {
    ggobs::RotationSet sub{{all.rotations.begin(), all.rotations.begin() + static_cast<std::ptrdiff_t>(J)},
                           ggobs::RotationProvenance::grid, 0};
    const double r = ggobs::solve_design(b, cap30(), sub).residual;
    EXPECT_LE(r, prev + 1e-13) << J;
    prev = r;
  }
}

TEST(Design, DesignLowerBoundOnBand) {
  auto b = ggobs::build_basis(Manifold::sphere2, 6.0);
  auto pts = ggobs::spherical_design_points(5);
  ggobs::RotationSet part{{}, ggobs::RotationProvenance::grid, 0};
  for (int j = 0; j < 7; ++j) part.rotations.push_back(ggobs::rotation_to(pts[static_cast<std::size_t>(j)]));
  auto d = ggobs::solve_design(b, cap30(), part);
  const auto S = d.averaged_gram();
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  for (int draw = 0; draw < 50; ++draw) {
    Eigen::VectorXd f(9);
    for (auto& x : f) x = g(rng);
    EXPECT_GE(f.dot(S * f), (d.fraction - d.residual) * f.squaredNorm() - 1e-14);
  }
}

TEST(Design, ScheduleTrivialCases) {
  ggobs::ObservationDesign one;
  one.weights = {1.0};
  auto s = ggobs::realize_schedule(one, 5.0, 3);
  for (const auto& iv : s.slots) EXPECT_EQ(iv.index, 0u);
  EXPECT_DOUBLE_EQ(s.slots.back().end, 5.0);
  ggobs::ObservationDesign two;
  two.weights = {0.5, 0.5};
  s = ggobs::realize_schedule(two, 4.0, 4);
  ASSERT_EQ(s.slots.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(s.slots[i].index, i % 2);
  EXPECT_EQ(s.fractions, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(s.max_deviation, 0.0);
  EXPECT_THROW(ggobs::realize_schedule(two, 4.0, 1), ggobs::ConfigError);
  EXPECT_THROW(ggobs::realize_schedule(two, 4.0, 4, 4.0), ggobs::ConfigError);
}

TEST(Design, ScheduleFractionsTrackWeights) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ggobs::ObservationDesign d;
  double s = 0.0;
  for (int j = 0; j < 5; ++j) {
    d.weights.push_back(u(rng));
    s += d.weights.back();
  }
  for (auto& w : d.weights) w /= s;
  auto sched = ggobs::realize_schedule(d, 5.0, 1000);
  EXPECT_TRUE(sched.within_tolerance);
  for (std::size_t j = 0; j < 5; ++j) {
    std::size_t count = 0;
    for (const auto& iv : sched.slots) count += iv.index == j;
    EXPECT_LE(std::abs(double(count) / 1000.0 - d.weights[j]), 1e-3);
  }
  // Slots cover [0, T0) without gaps; one-cycle blocks too.
  for (std::size_t i = 1; i < sched.slots.size(); ++i) EXPECT_EQ(sched.slots[i].start, sched.slots[i - 1].end);
  EXPECT_EQ(sched.one_cycle.front().start, 0.0);
  EXPECT_EQ(sched.one_cycle.back().end, 5.0);
  for (std::size_t i = 0; i < sched.one_cycle.size(); ++i)
    EXPECT_NEAR(sched.one_cycle[i].end - sched.one_cycle[i].start, 5.0 * d.weights[sched.one_cycle[i].index], 1e-12);
}

TEST(Design, ExactDesignTimeIndependentModeGivesFractionOfFull) {
  // Traveling wave on one tangential mode and one normal mode: |trace|^2 constant in time.
  const auto& S = sphere();
  auto data = InitialData::zeros(6, 9, 6.0);
  const std::size_t k = 5;
  const double mu = S.family.at(k).frequencies[0];
  data.f0(0, static_cast<Eigen::Index>(k)) = 1.0;
  data.f1(0, static_cast<Eigen::Index>(k)) = ggobs::cdouble(0.0, mu);
  const auto& d = ico_design();
  auto sched = ggobs::realize_schedule(d, 5.0, 1200);
  auto mo = ggobs::moving_observability_check(d, sched, data, S.family, S.basis, 1);
  const double full = ggobs::observability_ratio(data, S.family, 5.0);
  EXPECT_NEAR(mo.average_ratio, d.fraction * full, 1e-12 * full);
  auto oc = ggobs::moving_observability_check(d, sched, data, S.family, S.basis, 1, true);
  EXPECT_NEAR(oc.average_ratio, mo.average_ratio, 1e-12 * full);
}

TEST(Design, MicroScheduleApproachesAveragedGram) {
  const auto& S = sphere();
  std::mt19937_64 rng(5);
  auto data = ggobs::random_data(S.family, 6.0, 6, rng, true);
  const auto& d = ico_design();
  // Reference: the averaged Gram applied continuously over [0, T0].
  const double target = ggobs::observability_ratio(data, S.family, 5.0, d.averaged_gram());
  EXPECT_NEAR(target, d.fraction * ggobs::observability_ratio(data, S.family, 5.0), 1e-10 * target);
  double prev = 1e300;
  for (std::size_t micro : {12u, 120u, 1200u}) {
    auto sched = ggobs::realize_schedule(d, 5.0, micro);
    const double r = ggobs::moving_observability_check(d, sched, data, S.family, S.basis, 1).average_ratio;
    const double gap = std::abs(r - target);
    EXPECT_LT(gap, prev) << micro;
    prev = gap;
  }
  EXPECT_LT(prev / target, 1e-2);
}

TEST(Design, MovingObservationInequalityMonteCarlo) {
  const auto& S = sphere();
  const auto& d = ico_design();
  auto sched = ggobs::realize_schedule(d, 5.0, 1200, ggobs::derive_constants(2.0, 2).t_star());
  std::mt19937_64 rng(2025);
  for (int draw = 0; draw < 20; ++draw) {
    auto data = ggobs::random_data(S.family, 6.0, 6, rng);
    auto mo = ggobs::moving_observability_check(d, sched, data, S.family, S.basis, 2);
    EXPECT_TRUE(mo.satisfied) << draw;
    for (double r : mo.period_ratios) EXPECT_GE(r, mo.lower_bound);
    EXPECT_GT(mo.lower_bound, 0.0);
  }
}

TEST(Design, PeriodicExtensionAverages) {
  // Averages over m periods agree exactly only for data whose observation is T0-periodic, e.g. a
  // single traveling wave; general data give period-dependent values.
  const auto& S = sphere();
  const auto& d = ico_design();
  auto sched = ggobs::realize_schedule(d, 5.0, 120);
  auto data = InitialData::zeros(6, 9, 6.0);
  const double mu = S.family.at(2).frequencies[1];
  data.f0(1, 2) = 1.0;
  data.f1(1, 2) = ggobs::cdouble(0.0, mu);
  const double a1 = ggobs::moving_observability_check(d, sched, data, S.family, S.basis, 1).average_ratio;
  for (std::size_t m : {2u, 3u})
    EXPECT_NEAR(ggobs::moving_observability_check(d, sched, data, S.family, S.basis, m).average_ratio, a1, 1e-10 * a1);
}

TEST(Design, MovingCheckRejectsOutOfBandData) {
  auto big = ggobs::build_basis(Manifold::sphere2, 12.0);
  auto fam = ggobs::build_modal_family(ggobs::derive_constants(2.0, 2), big, 2);
  auto data = InitialData::zeros(2, 16, 12.0);
  data.f0(0, 10) = 1.0;
  auto sched = ggobs::realize_schedule(ico_design(), 5.0, 12);
  EXPECT_THROW(ggobs::moving_observability_check(ico_design(), sched, data, fam, big, 1), ggobs::ConfigError);
}

namespace {

struct CesaroSetup {
  ggobs::TangentialBasis basis = ggobs::build_basis(Manifold::sphere2, 2.0);
  ggobs::ModalFamily family = ggobs::build_modal_family(ggobs::derive_constants(2.0, 2), basis, 1);
  Region cap = Region::cap(Vec3::UnitZ(), kPi / 3);
};

// Traveling waves (a- = 0) on one normal mode of Y_0^0 and optionally Y_1^1.
InitialData traveling(const CesaroSetup& c, bool with_y11) {
  auto d = InitialData::zeros(1, 4, with_y11 ? 2.0 : 0.0);
  d.f0(0, 0) = 1.0;
  d.f1(0, 0) = ggobs::cdouble(0.0, c.family.at(0).frequencies[0]);
  if (with_y11) {
    d.f0(0, 2) = 1.0;
    d.f1(0, 2) = ggobs::cdouble(0.0, c.family.at(2).frequencies[0]);
  }
  return d;
}

}  // namespace

TEST(Design, CesaroDataInsideFirstBand) {
  CesaroSetup c;
  auto data = traveling(c, false);
  auto res = ggobs::cesaro_protocol(c.cap, 5.0, 4, data, c.family, c.basis);
  ASSERT_EQ(res.blocks.size(), 4u);
  EXPECT_EQ(res.N_delta, 1u);
  const double cw = res.c_T0 * res.min_trace_weight;
  for (const auto& b : res.blocks) {
    EXPECT_GE(b.block_ratio, (c.cap.fraction() - b.epsilon) * cw);
    EXPECT_GE(b.running_average, b.lower_bound);
  }
}

TEST(Design, CesaroBlocksMatchAveragedGram) {
  // Traveling waves: with an exact design the averaged Gram is L Id, so each block sees L times the full ratio.
  CesaroSetup c;
  auto data = traveling(c, true);
  auto res = ggobs::cesaro_protocol(c.cap, 5.0, 7, data, c.family, c.basis);
  ASSERT_EQ(res.blocks.size(), 7u);
  const std::vector<int> bw{0, 1, 2, 3, 4, 5, 5};
  const double full = ggobs::observability_ratio(data, c.family, 5.0);
  for (std::size_t i = 0; i < res.blocks.size(); ++i) {
    const auto& b = res.blocks[i];
    EXPECT_EQ(b.bandwidth, bw[i]);
    EXPECT_EQ(b.truncated, i == 6);
    EXPECT_TRUE(b.accepted);
    if (i > 0) {
      EXPECT_NEAR(b.block_ratio, c.cap.fraction() * full, 2e-2 * full) << i;
    }
    EXPECT_GE(b.running_average, b.lower_bound);
  }
  // Block 1 (l = 0) observes through the single polar cap.
  const double polar = ggobs::observability_ratio(data, c.family, 5.0, ggobs::restricted_gram(c.basis, c.cap));
  EXPECT_NEAR(res.blocks[0].block_ratio, polar, 1e-10 * polar);
  EXPECT_EQ(res.N_delta, 1u);
}

TEST(Design, CesaroOutOfBandModeEventuallyCovered) {
  // Y_3^3 concentrates away from the pole; blocks 4 and 5 use the t = 11 set, exact at l = 3.
  auto basis = ggobs::build_basis(Manifold::sphere2, 12.0);
  auto fam = ggobs::build_modal_family(ggobs::derive_constants(2.0, 2), basis, 1);
  auto data = InitialData::zeros(1, 16, 12.0);
  const auto k = static_cast<Eigen::Index>(ggobs::concentrating_mode(basis, 3));
  data.f0(0, k) = 1.0;
  data.f1(0, k) = ggobs::cdouble(0.0, fam.at(static_cast<std::size_t>(k)).frequencies[0]);
  auto cap = Region::cap(Vec3::UnitZ(), kPi / 6);
  auto res = ggobs::cesaro_protocol(cap, 5.0, 5, data, fam, basis);
  const double full = ggobs::observability_ratio(data, fam, 5.0);
  for (std::size_t i = 3; i < 5; ++i) EXPECT_NEAR(res.blocks[i].block_ratio, cap.fraction() * full, 2e-2 * full) << i;
  EXPECT_GT(res.N_delta, 0u);
  const auto& last = res.blocks.back();
  EXPECT_GE(last.running_average, last.lower_bound);
}

TEST(Design, Exports) {
  auto j = ggobs::design_to_json(ico_design());
  EXPECT_EQ(j["rotations"].size(), 12u);
  EXPECT_TRUE(j["accepted"].get<bool>());
  EXPECT_NEAR(j["rotations"][3]["weight"].get<double>(), 1.0 / 12.0, 1e-12);
  std::ostringstream os;
  ggobs::write_schedule_csv(os, {{0.0, 2.5, 0}, {2.5, 5.0, 1}});
  EXPECT_EQ(os.str(), "t_start,t_end,rotation_index\n0,2.5,0\n2.5,5,1\n");
  std::ostringstream ls;
  ggobs::write_localized_csv(ls, {{2, 0.5, 1.0, 0.5}});
  EXPECT_EQ(ls.str(), "l,cap_mass,full_ratio,cap_ratio\n2,0.5,1,0.5\n");
}
