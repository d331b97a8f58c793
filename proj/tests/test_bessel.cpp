#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "ggobs/bessel.hpp"
#include "oracles.hpp"

using std::numbers::pi;

namespace {

struct Reference {
  double nu, x, value;
};

// 40-digit values from an independent arbitrary-precision library.
constexpr Reference kReference[] = {
    {0, 0.5, 0.9384698072408129042284047},   {0, 5, -0.177596771314338304347397},
    {0, 14.5, 0.08754486801037622290590485}, {0.5, 3, 0.0650081828773757781140047},
    {1, 1, 0.4400505857449335159596822},     {1, 2, 0.5767248077568733872024482},
    {1.5, 7.25, -0.134649685681168756805739}, {1.5, 19.5, -0.1381811661362673111225157},
    {2.25, 30, 0.1180570033661724942728957}, {3, 12, 0.1951369395310926772504439},
    {10, 25, -0.07517984394852328384132298}, {10, 60, 0.09717714332807109183904108},
    {0.75, 100, -0.06358176589898790453242216}, {5.5, 18, -0.1926489712491126152422004},
};

}  // namespace

TEST(Bessel, TrivialValues) {
  EXPECT_NEAR(ggobs::bessel_j(0.5, pi), 0.0, 1e-12);
  EXPECT_EQ(ggobs::bessel_j(0.0, 0.0), 1.0);
  EXPECT_EQ(ggobs::bessel_j(1.0, 0.0), 0.0);
  EXPECT_EQ(ggobs::bessel_j_prime(0.0, 0.0), 0.0);
}

TEST(Bessel, MatchesExtendedPrecisionSeries) {
  EXPECT_NEAR(ggobs::bessel_j(1.0, 1.0), oracle::bessel_series(1.0, 1.0), 1e-15);
  for (double nu : {0.0, 0.5, 1.0, 1.5, 2.5}) {
    for (double x : {0.1, 0.7, 1.3, 2.9, 4.4}) {
      double ref = oracle::bessel_series(nu, x, 40);
      EXPECT_NEAR(ggobs::bessel_j(nu, x), ref, 1e-12 * std::abs(ref)) << nu << " " << x;
    }
  }
}

TEST(Bessel, MatchesFrozenReferenceValues) {
  for (const auto& r : kReference) {
    EXPECT_NEAR(ggobs::bessel_j(r.nu, r.x), r.value, 1e-12 * std::abs(r.value)) << r.nu << " " << r.x;
  }
}

TEST(Bessel, MatchesStandardLibraryOnTestRange) {
  for (double nu : {0.0, 0.5, 1.0, 1.5, 2.0, 3.5, 5.5, 10.0}) {
    for (double x = 0.05; x < 40.0; x += 0.173) {
      double ref = std::cyl_bessel_j(nu, x);
      if (std::abs(ref) < 1e-2) continue;
      EXPECT_NEAR(ggobs::bessel_j(nu, x), ref, 2e-12 * std::abs(ref)) << nu << " " << x;
    }
  }
}

TEST(Bessel, SeriesAndAsymptoticAgreeInOverlapBand) {
  for (double nu : {0.0, 0.5, 1.0, 1.5, 3.0, 5.5}) {
    for (double x = 14.0; x <= 22.0; x += 0.25) {
      const double series = static_cast<double>(ggobs::detail::bessel_series(nu, x));
      bool ok = false;
      const double hankel = static_cast<double>(ggobs::detail::bessel_hankel(nu, x, ok));
      EXPECT_NEAR(series, hankel, 1e-10) << nu << " " << x;
    }
  }
}

TEST(Bessel, SmallArgumentBehaviour) {
  for (double nu : {0.0, 0.5, 1.0, 2.5}) {
    const double x = 1e-4;
    const double lead = std::pow(x / 2.0, nu) / std::tgamma(nu + 1.0);
    EXPECT_NEAR(ggobs::bessel_j(nu, x) / lead, 1.0, 1e-8);
  }
}

TEST(Bessel, DerivativeRecurrence) {
  EXPECT_NEAR(ggobs::bessel_j_prime(0.5, pi), -ggobs::bessel_j(1.5, pi), 1e-14);
  const double h = 1e-5;
  for (auto [nu, x] : {std::pair{1.0, 2.0}, {0.0, 3.3}, {1.5, 7.0}, {2.5, 18.0}, {0.5, 25.0}}) {
    const double fd = (ggobs::bessel_j(nu, x + h) - ggobs::bessel_j(nu, x - h)) / (2 * h);
    EXPECT_NEAR(ggobs::bessel_j_prime(nu, x), fd, 1e-8);
  }
}

TEST(Bessel, DomainErrors) {
  EXPECT_THROW(ggobs::bessel_j(-0.5, 1.0), std::domain_error);
  EXPECT_THROW(ggobs::bessel_j(1.0, -1.0), std::domain_error);
  EXPECT_THROW(ggobs::bessel_j(1.0, 1e9), std::domain_error);
}

TEST(BesselZeros, HalfIntegerOrder) {
  auto z = ggobs::bessel_zeros(0.5, 3);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(z[k], (k + 1) * pi, 1e-13);
}

TEST(BesselZeros, FirstZeroOfJ1BySignScan) {
  auto z = ggobs::bessel_zeros(1.0, 1);
  const double ref = oracle::scan_zero([](double x) { return oracle::bessel_series(1.0, x, 40); }, 3.5);
  EXPECT_NEAR(z[0], ref, 1e-12);
  EXPECT_NEAR(z[0], 3.831705970207512315614, 1e-13);
}

TEST(BesselZeros, FrozenReference) {
  struct Z {
    double nu;
    int k;
    double value;
  };
  const Z refs[] = {{0, 1, 2.404825557695772768622}, {0, 2, 5.520078110286310649597}, {0, 10, 30.63460646843197511755},
                    {1.5, 1, 4.493409457909064175308}, {1.5, 10, 32.9563890398224767253},
                    {3, 2, 9.761023129981669678545}, {3, 10, 35.21867073861011465737}};
  for (const auto& r : refs) {
    auto z = ggobs::bessel_zeros(r.nu, r.k);
    EXPECT_NEAR(z.back(), r.value, 1e-12 * r.value) << r.nu << " " << r.k;
  }
}

TEST(BesselZeros, GapsDecreaseTowardPi) {
  auto z = ggobs::bessel_zeros(1.5, 50);
  for (std::size_t k = 0; k < z.size(); ++k) EXPECT_LE(std::abs(ggobs::bessel_j(1.5, z[k])), ggobs::kZeroTolerance);
  for (std::size_t k = 0; k + 2 < z.size(); ++k) EXPECT_LT(z[k + 2] - z[k + 1], z[k + 1] - z[k]);
  EXPECT_NEAR(z[49] - z[48], pi, 1e-3);
  EXPECT_GT(z[49] - z[48], pi);
}

TEST(BesselZeros, ScanOracleAcrossOrders) {
  for (double nu : {0.25, 1.0, 2.5, 6.0, 10.0}) {
    auto z = ggobs::bessel_zeros(nu, 4);
    double from = nu;
    for (int k = 0; k < 4; ++k) {
      const double ref = oracle::scan_zero([nu](double x) { return std::cyl_bessel_j(nu, x); }, from, 1e-3);
      EXPECT_NEAR(z[k], ref, 1e-9 * ref) << nu << " " << k;
      from = ref + 1e-3;
    }
  }
}

TEST(BesselEigenSystem, AlphaZeroIsDirichletLaplacian) {
  auto sys = ggobs::build_eigensystem_1d(ggobs::GasGiantParams::one_dimensional(0.0), 20);
  for (int k = 0; k < 20; ++k) {
    const double exact = std::pow((k + 1) * pi, 2);
    EXPECT_NEAR(sys.eigenvalues[k], exact, 1e-12 * exact);
    EXPECT_NEAR(sys.eigenfunction(k, 0.3), std::sqrt(2.0) * std::sin((k + 1) * pi * 0.3), 1e-12);
    EXPECT_NEAR(sys.trace_limit(k), std::sqrt(2.0) * (k + 1) * pi, 1e-10 * (k + 1));
  }
}

TEST(BesselEigenSystem, MatchesWeightedFiniteDifferences) {
  for (double alpha : {0.5, 1.0}) {
    auto sys = ggobs::build_eigensystem_1d(ggobs::GasGiantParams::one_dimensional(alpha), 10);
    auto fd = oracle::weighted_fd_extrapolated(alpha, 4000, 10);
    for (int k = 0; k < 10; ++k) EXPECT_NEAR(sys.eigenvalues[k], fd[k], 1e-6 * fd[k]) << alpha << " " << k;
  }
}

TEST(BesselEigenSystem, OrthonormalInWeightedSpace) {
  for (double alpha : {0.5, 1.0, 1.4}) {
    auto sys = ggobs::build_eigensystem_1d(ggobs::GasGiantParams::one_dimensional(alpha), 10);
    const double kappa = sys.params.kappa();
    // Integrate in s = x^kappa.
    for (int n = 0; n < 10; ++n) {
      for (int m = n; m < 10; ++m) {
        auto f = [&](double s) {
          if (s <= 0.0) return 0.0;
          const double x = std::pow(s, 1.0 / kappa);
          const double dx = std::pow(s, 1.0 / kappa - 1.0) / kappa;
          return sys.eigenfunction(n, x) * sys.eigenfunction(m, x) * std::pow(x, -alpha) * dx;
        };
        const double ip = oracle::integrate(f, 0.0, 1.0);
        EXPECT_NEAR(ip, n == m ? 1.0 : 0.0, n == m ? 1e-8 : 1e-7) << alpha << " " << n << " " << m;
      }
    }
  }
}

TEST(BesselEigenSystem, NormConstantsScaleLikeInverseSqrtZero) {
  auto sys = ggobs::build_eigensystem_1d(ggobs::GasGiantParams::one_dimensional(1.0), 60);
  const double c59 = sys.norm_constants[59] * std::sqrt(sys.zeros[59]);
  const double c39 = sys.norm_constants[39] * std::sqrt(sys.zeros[39]);
  EXPECT_NEAR(c59 / c39, 1.0, 1e-3);
}

TEST(BesselEigenSystem, FrequencyGapsTendToKappaPi) {
  auto sys = ggobs::build_eigensystem_1d(ggobs::GasGiantParams::one_dimensional(1.0), 80);
  const double kappa = sys.params.kappa();
  for (std::size_t k = 0; k + 2 < sys.size(); ++k)
    EXPECT_LT(sys.frequencies[k + 2] - sys.frequencies[k + 1], sys.frequencies[k + 1] - sys.frequencies[k]);
  EXPECT_NEAR(sys.frequencies[79] - sys.frequencies[78], kappa * pi, 1e-3);
}

TEST(BesselEigenSystem, TraceLimitExtrapolation) {
  for (double alpha : {0.0, 0.5, 1.0, 1.5}) {
    auto sys = ggobs::build_eigensystem_1d(ggobs::GasGiantParams::one_dimensional(alpha), 8);
    for (std::size_t k = 0; k < sys.size(); ++k) {
      auto est = ggobs::extrapolate_trace_limit(sys, k);
      EXPECT_NEAR(est.value, sys.trace_limit(k), 1e-6 * std::abs(sys.trace_limit(k))) << alpha << " " << k;
      // Independent check of the finite limit: a one-sided difference of Phi near 0.
      const double x = 1e-14;
      EXPECT_NEAR(sys.eigenfunction(k, x) / x, sys.trace_limit(k), 1e-3 * sys.trace_limit(k));
    }
  }
}

TEST(BesselEigenSystem, CsvExport) {
  auto sys = ggobs::build_eigensystem_1d(ggobs::GasGiantParams::one_dimensional(0.0), 2);
  std::ostringstream os;
  ggobs::write_eigensystem_csv(os, sys);
  EXPECT_EQ(os.str().substr(0, 43), "k,j_nuk,lambda_k,mu_k,norm_const,trace_amp\n");
  EXPECT_NE(os.str().find("\n2,6.28318530717958"), std::string::npos);
}

TEST(BesselEigenSystem, RequiresOneDimensionalConvention) {
  EXPECT_THROW(ggobs::build_eigensystem_1d(ggobs::derive_constants(2.0, 1), 3), ggobs::ConfigError);
}
