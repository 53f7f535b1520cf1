#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <set>

#include "mode/error.hpp"
#include "mode/rng.hpp"
#include "mode/stats.hpp"

using namespace mode;

namespace {

// Upper tail of the chi-square law by direct quadrature of its density.
double chi_square_tail_by_quadrature(double x, int dof) {
  const long double k = dof;
  const long double log_norm = -(k / 2) * std::log(2.0L) - boost::math::lgamma(k / 2);
  auto density = [&](long double t) -> long double {
    if (t <= 0) return 0;
    return std::exp(log_norm + (k / 2 - 1) * std::log(t) - t / 2);
  };
  if (x <= 0) return 1.0;
  // Split at the mode-ish point so neither piece has an interior spike.
  const long double mid = std::max<long double>(x, 1.0L);
  long double tail = 0;
  if (x < mid) {
    boost::math::quadrature::tanh_sinh<long double> ts;
    tail += ts.integrate(density, static_cast<long double>(x), mid);
  }
  boost::math::quadrature::exp_sinh<long double> es;
  tail += es.integrate([&](long double t) { return density(t + mid); }, 0.0L,
                       std::numeric_limits<long double>::infinity());
  return static_cast<double>(tail);
}

}  // namespace

TEST(ChiSquare, MatchesQuadratureOracle) {
  double worst = 0.0;
  for (int dof = 1; dof <= 10; ++dof) {
    for (double x = 0.0; x <= 50.0; x += 0.25) {
      const double ours = stats::chi_square_sf(x, dof);
      const double oracle = chi_square_tail_by_quadrature(x, dof);
      worst = std::max(worst, std::abs(ours - oracle));
      ASSERT_NEAR(ours, oracle, 1e-8) << "dof " << dof << " x " << x;
    }
  }
  RecordProperty("max_abs_error", std::to_string(worst));
}

TEST(ChiSquare, KnownValues) {
  EXPECT_NEAR(stats::chi_square_sf(3.841458820694124, 1), 0.05, 1e-12);
  EXPECT_NEAR(stats::chi_square_sf(2.0, 2), std::exp(-1.0), 1e-14);
  EXPECT_DOUBLE_EQ(stats::chi_square_sf(0.0, 3), 1.0);
  EXPECT_DOUBLE_EQ(stats::chi_square_sf(INFINITY, 3), 0.0);
  EXPECT_NEAR(stats::chi_square_sf(16 * std::log(2.0), 1), 0.000867, 5e-6);
}

TEST(GammaQ, RejectsNonPositiveShape) {
  EXPECT_THROW(stats::gamma_q(0.0, 1.0), Error);
  EXPECT_THROW(stats::gamma_q(-1.0, 1.0), Error);
}

TEST(Normal, TailsAndCdf) {
  EXPECT_NEAR(stats::normal_cdf(0.0), 0.5, 1e-16);
  EXPECT_NEAR(stats::normal_two_sided_p(1.959963984540054), 0.05, 1e-12);
  EXPECT_DOUBLE_EQ(stats::normal_two_sided_p(INFINITY), 0.0);
  EXPECT_DOUBLE_EQ(stats::normal_two_sided_p(0.0), 1.0);
}

TEST(Sigmoid, StableAtExtremes) {
  EXPECT_DOUBLE_EQ(stats::sigmoid(0.0), 0.5);
  EXPECT_GT(stats::sigmoid(-800.0), -1e-300);
  EXPECT_LE(stats::sigmoid(800.0), 1.0);
  EXPECT_NEAR(stats::sigmoid(2.0) + stats::sigmoid(-2.0), 1.0, 1e-15);
}

TEST(NormalQuantile, MatchesBoost) {
  boost::math::normal_distribution<double> n01;
  for (double p : {1e-300, 1e-20, 1e-10, 1e-5, 0.01, 0.025, 0.2, 0.5, 0.7, 0.975, 0.999, 1 - 1e-12}) {
    const double want = boost::math::quantile(n01, p);
    EXPECT_NEAR(rng::normal_quantile(p), want, 1e-13 * std::max(1.0, std::abs(want))) << p;
  }
}

TEST(Rng, UnitIsOpenInterval) {
  EXPECT_GT(rng::to_unit(0), 0.0);
  EXPECT_LT(rng::to_unit(~0ULL), 1.0);
}

TEST(Rng, StreamIsDeterministicAndDistinctPerSeed) {
  rng::Stream a(7), b(7), c(8);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
  }
}

TEST(Rng, BelowStaysInRangeAndCoversIt) {
  rng::Stream s(1);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto v = s.below(7);
    ASSERT_LT(v, 7u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7u);
}

TEST(Rng, NormalMomentsLookStandard) {
  rng::Stream s(42);
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.015);
}

TEST(Rng, DeriveSeparatesLabels) {
  EXPECT_NE(rng::derive(1, 2), rng::derive(1, 3));
  EXPECT_NE(rng::derive(1, 2), rng::derive(2, 2));
  EXPECT_EQ(rng::derive(5, 6, 7), rng::derive(rng::derive(5, 6), 7));
}

TEST(ErrorCodes, HaveNames) {
  EXPECT_EQ(to_string(ErrorCode::MissingValue), "MissingValue");
  Error e(ErrorCode::RaggedRow, "x");
  EXPECT_EQ(e.code(), ErrorCode::RaggedRow);
}
