#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ggobs/params.hpp"

using ggobs::GasGiantParams;

TEST(Params, FullyPolytropicConstants) {
  for (long long n : {0LL, 1LL, 2LL, 5LL}) {
    auto p = ggobs::derive_constants(2.0, static_cast<double>(n));
    EXPECT_DOUBLE_EQ(p.kappa(), 0.5);
    EXPECT_DOUBLE_EQ(p.t_star(), 4.0);
    EXPECT_DOUBLE_EQ(p.nu(), 0.5 + static_cast<double>(n) / 2.0);
  }
}

TEST(Params, TraceFactorIsOneWithoutTangentialDimensions) {
  EXPECT_EQ(ggobs::derive_constants(2.0, 0).trace_factor(), 1.0);
  EXPECT_EQ(ggobs::derive_constants(0.37, 0).trace_factor(), 1.0);
}

TEST(Params, BetaTwoNTwo) {
  auto p = ggobs::derive_constants(2.0, 2);
  EXPECT_DOUBLE_EQ(p.nu(), 1.5);
  // nu^2 - 1/4 and 2 beta / (beta + 2) evaluated from scratch.
  EXPECT_DOUBLE_EQ(p.c_beta(), 1.5 * 1.5 - 0.25);
  EXPECT_DOUBLE_EQ(p.c_beta(), 2.0);
  EXPECT_DOUBLE_EQ(p.alpha(), 4.0 / 4.0);
}

TEST(Params, RejectsInvalidInput) {
  EXPECT_THROW(ggobs::derive_constants(0.0, 1), ggobs::ConfigError);
  EXPECT_THROW(ggobs::derive_constants(-1.0, 1), ggobs::ConfigError);
  EXPECT_THROW(ggobs::derive_constants(2.0, -1), ggobs::ConfigError);
  EXPECT_THROW(ggobs::derive_constants(2.0, 1.5), ggobs::ConfigError);
  EXPECT_THROW(ggobs::derive_constants(std::nan(""), 1), ggobs::ConfigError);
  EXPECT_THROW(GasGiantParams::one_dimensional(2.0), ggobs::ConfigError);
  EXPECT_THROW(GasGiantParams::one_dimensional(-0.1), ggobs::ConfigError);
}

TEST(Params, SweepInvariants) {
  for (int i = 1; i <= 100; ++i) {
    const double beta = 0.1 * i;
    for (long long n : {0LL, 1LL, 2LL, 3LL}) {
      auto p = GasGiantParams::multidimensional(beta, n);
      EXPECT_GE(p.c_beta(), 0.0);
      EXPECT_GT(p.kappa(), 0.0);
      EXPECT_LT(p.kappa(), 1.0);
      EXPECT_NEAR(p.t_star() * p.kappa(), 2.0, 1e-14);
      EXPECT_NEAR(p.trace_factor(), 2.0 * p.nu() / (p.nu() + 0.5), 1e-15);
      EXPECT_EQ(p.convention(), ggobs::Convention::multidimensional);
    }
  }
}

TEST(Params, BetaToAlphaRoundTripMatchesOneDimensionalConvention) {
  for (int i = 1; i <= 100; ++i) {
    const double beta = 0.1 * i;
    auto p = GasGiantParams::multidimensional(beta, 0);
    auto q = p.to_one_dimensional();
    EXPECT_EQ(q.convention(), ggobs::Convention::one_dimensional);
    EXPECT_NEAR(q.alpha(), 2.0 * beta / (beta + 2.0), 1e-15);
    EXPECT_NEAR(q.nu(), (beta + 2.0) / 4.0, 1e-14);
    EXPECT_EQ(q, GasGiantParams::one_dimensional(q.alpha()));
    EXPECT_NEAR(q.kappa(), p.kappa(), 1e-15);
    EXPECT_NEAR(q.t_star(), p.t_star(), 1e-13);
    EXPECT_NEAR(q.beta(), beta, 1e-13);
  }
}

TEST(Params, ConversionFactor) {
  auto p0 = ggobs::derive_constants(3.0, 0);
  EXPECT_EQ(ggobs::trace_constant_conversion(p0, 0.123), 0.123);
  auto p = ggobs::derive_constants(2.0, 2);
  EXPECT_DOUBLE_EQ(ggobs::trace_constant_conversion(p, 1.0), 1.5);
  EXPECT_DOUBLE_EQ(2.0 * p.nu() / (p.nu() + 0.5), 1.5);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ub(0.05, 10.0);
  std::uniform_int_distribution<int> un(0, 6);
  for (int i = 0; i < 200; ++i) EXPECT_GT(ggobs::derive_constants(ub(rng), un(rng)).trace_factor(), 0.0);
}

TEST(Params, JsonRoundTrip) {
  auto p = ggobs::derive_constants(2.0, 2);
  nlohmann::json j = p;
  EXPECT_EQ(j.at("nu").get<double>(), 1.5);
  EXPECT_EQ(ggobs::params_from_json(j), p);
  auto q = ggobs::params_from_json(nlohmann::json{{"alpha", 1.0}});
  EXPECT_EQ(q.convention(), ggobs::Convention::one_dimensional);
  EXPECT_DOUBLE_EQ(q.nu(), 1.0);
  EXPECT_THROW(ggobs::params_from_json(nlohmann::json{{"beta", 2.0}, {"n", 1}, {"nu", 3.0}}), ggobs::ConfigError);
  EXPECT_THROW(ggobs::params_from_json(nlohmann::json{{"beta", 2.0}, {"gamma", 1}}), ggobs::ConfigError);
  EXPECT_THROW(ggobs::params_from_json(nlohmann::json{{"beta", -1.0}}), ggobs::ConfigError);
}
