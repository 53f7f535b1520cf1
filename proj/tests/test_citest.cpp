#include <gtest/gtest.h>

#include <cmath>

#include "mode/citest.hpp"
#include "mode/error.hpp"
#include "mode/rng.hpp"
#include "mode/scm.hpp"

using namespace mode;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no mode::Error thrown";
  return ErrorCode::InvalidArgument;
}

DataTable normals(std::size_t n, std::uint64_t seed, double coupling) {
  rng::Stream s(seed);
  std::vector<double> x(n), y(n), z(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = s.normal();
    x[i] = s.normal();
    y[i] = coupling * x[i] + s.normal();
  }
  return DataTable({{"X", ColumnKind::continuous(), x}, {"Z", ColumnKind::continuous(), z}, {"Y", ColumnKind::continuous(), y}},
                   "Y");
}

}  // namespace

TEST(GTest, PerfectCopyTwoByTwo) {
  DataTable t({{"X", ColumnKind::binary(), {0, 0, 0, 0, 1, 1, 1, 1}}, {"Y", ColumnKind::binary(), {0, 0, 0, 0, 1, 1, 1, 1}}},
              "Y");
  const auto r = g_test(t, "X", "Y", {}, 0.05);
  EXPECT_NEAR(r.statistic, 16 * std::log(2.0), 1e-12);
  EXPECT_EQ(r.dof, 1u);
  // One degree of freedom: P(chi2 > g) = erfc(sqrt(g / 2)).
  EXPECT_NEAR(r.p_value, std::erfc(std::sqrt(8 * std::log(2.0))), 1e-12);
  EXPECT_NEAR(r.p_value, 0.00087, 1e-5);
  EXPECT_FALSE(r.independent);
  EXPECT_FALSE(r.degenerate);
}

TEST(GTest, ConstantColumnIsDegenerate) {
  DataTable t({{"X", ColumnKind::binary(), {0, 0, 0, 0, 0, 0}}, {"Y", ColumnKind::binary(), {0, 1, 0, 1, 1, 0}}}, "Y");
  const auto r = g_test(t, "X", "Y", {}, 0.05);
  EXPECT_TRUE(r.independent);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.p_value, 1.0);
}

TEST(GTest, SmallStrataAreSkipped) {
  // Stratum Z=1 has 4 rows and must not contribute.
  DataTable t({{"X", ColumnKind::binary(), {0, 0, 1, 1, 0, 1, 0, 1, 0, 1}},
               {"Z", ColumnKind::binary(), {0, 0, 0, 0, 0, 0, 1, 1, 1, 1}},
               {"Y", ColumnKind::binary(), {0, 0, 1, 1, 0, 1, 1, 0, 1, 0}}},
              "Y");
  const auto r = g_test(t, "X", "Y", {"Z"}, 0.05);
  DataTable only({{"X", ColumnKind::binary(), {0, 0, 1, 1, 0, 1}}, {"Y", ColumnKind::binary(), {0, 0, 1, 1, 0, 1}}}, "Y");
  const auto want = g_test(only, "X", "Y", {}, 0.05);
  EXPECT_NEAR(r.statistic, want.statistic, 1e-12);
  EXPECT_EQ(r.dof, 1u);
}

TEST(GTest, ChainIsSeparatedByMiddle) {
  Scm chain({{"A", {}, LogisticBernoulli{0.2, {}}, true},
             {"B", {"A"}, LogisticBernoulli{-1.0, {{2.0, {"A"}}}}, true},
             {"Y", {"B"}, LogisticBernoulli{0.5, {{-1.5, {"B"}}}}, true}});
  int independent = 0, marginal_dependent = 0;
  for (int rep = 0; rep < 30; ++rep) {
    const auto t = sample(chain, 50000, rng::derive(20240917, rep));
    independent += g_test(t, "A", "Y", {"B"}, 0.05).independent;
    marginal_dependent += !g_test(t, "A", "Y", {}, 0.05).independent;
  }
  EXPECT_GE(independent, 27);
  EXPECT_EQ(marginal_dependent, 30);
}

TEST(GTest, CompressedStrataMatchDense) {
  rng::Stream s(3);
  const std::size_t n = 3000;
  std::vector<Column> cols;
  std::vector<double> z(n), x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = s.below(2);
    x[i] = s.uniform() < 0.3 + 0.4 * z[i];
    y[i] = s.uniform() < 0.2 + 0.5 * z[i] + 0.1 * x[i];
  }
  cols.push_back({"X", ColumnKind::binary(), x});
  std::vector<std::string> many;
  for (int k = 0; k < 18; ++k) {
    cols.push_back({"Z" + std::to_string(k), ColumnKind::binary(), z});
    many.push_back("Z" + std::to_string(k));
  }
  cols.push_back({"Y", ColumnKind::binary(), y});
  DataTable t(cols, "Y");
  const auto dense = g_test(t, "X", "Y", {"Z0"}, 0.05);
  const auto sparse = g_test(t, "X", "Y", many, 0.05);
  EXPECT_NEAR(sparse.statistic, dense.statistic, 1e-9 * dense.statistic);
  EXPECT_EQ(sparse.dof, dense.dof);
}

TEST(GTest, RejectsContinuous) {
  const auto t = normals(100, 1, 0.5);
  EXPECT_EQ(code_of([&] { g_test(t, "X", "Y", {}, 0.05); }), ErrorCode::NonDiscreteColumn);
}

TEST(FisherZ, PerfectCorrelation) {
  DataTable t({{"X", ColumnKind::continuous(), {1, 2, 3, 4, 5, 6}}, {"Y", ColumnKind::continuous(), {1, 2, 3, 4, 5, 6}}},
              "Y");
  const auto r = fisher_z_test(t, "X", "Y", {}, 0.05);
  EXPECT_EQ(r.p_value, 0.0);
  EXPECT_FALSE(r.independent);
}

TEST(FisherZ, NominalSizeUnderNull) {
  int rejections = 0;
  for (int rep = 0; rep < 200; ++rep) rejections += !fisher_z_test(normals(10000, 1000 + rep, 0.0), "X", "Y", {}, 0.05).independent;
  EXPECT_GE(rejections, 4);   // 2%
  EXPECT_LE(rejections, 16);  // 8%
}

TEST(FisherZ, DirectTermSurvivesConditioning) {
  rng::Stream s(9);
  const std::size_t n = 5000;
  std::vector<double> x(n), z(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = s.normal();
    x[i] = 0.8 * z[i] + 0.6 * s.normal();
    y[i] = x[i] + z[i] + 0.1 * s.normal();
  }
  DataTable t({{"X", ColumnKind::continuous(), x}, {"Z", ColumnKind::continuous(), z}, {"Y", ColumnKind::continuous(), y}},
              "Y");
  const auto r = fisher_z_test(t, "X", "Y", {"Z"}, 0.05);
  EXPECT_FALSE(r.independent);
  // Partial correlation of x and y given z by hand: residual x is 0.6 e1,
  // residual y is 0.6 e1 + 0.1 e2, so r = 0.6 / sqrt(0.36 + 0.01).
  const double want_r = 0.6 / std::sqrt(0.37);
  const double z_stat = 0.5 * std::log((1 + want_r) / (1 - want_r)) * std::sqrt(n - 4.0);
  EXPECT_NEAR(r.statistic, z_stat, 0.05 * z_stat);
}

TEST(FisherZ, CollinearConditioningIsDegenerate) {
  rng::Stream s(2);
  const std::size_t n = 200;
  std::vector<double> x(n), z(n), z2(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = s.normal();
    z2[i] = 2 * z[i];
    x[i] = s.normal();
    y[i] = s.normal();
  }
  DataTable t({{"X", ColumnKind::continuous(), x},
               {"Z", ColumnKind::continuous(), z},
               {"Z2", ColumnKind::continuous(), z2},
               {"Y", ColumnKind::continuous(), y}},
              "Y");
  const auto r = fisher_z_test(t, "X", "Y", {"Z", "Z2"}, 0.05);
  EXPECT_TRUE(r.degenerate);
  EXPECT_TRUE(r.independent);
}

TEST(FisherZ, SampleTooSmall) {
  DataTable t({{"X", ColumnKind::continuous(), {1, 2, 5}}, {"Y", ColumnKind::continuous(), {1, 3, 2}}}, "Y");
  EXPECT_EQ(code_of([&] { fisher_z_test(t, "X", "Y", {}, 0.05); }), ErrorCode::SampleTooSmall);
  DataTable four({{"X", ColumnKind::continuous(), {1, 2, 3, 5}}, {"Y", ColumnKind::continuous(), {1, 3, 2, 4}}}, "Y");
  EXPECT_NO_THROW(fisher_z_test(four, "X", "Y", {}, 0.05));
}

TEST(CiTest, DispatchAndSymmetry) {
  const auto g1 = sample(make_g1(), 4000, 5);
  const auto a = ci_test(g1, "X1", "X2", {"X3"}, 0.05);
  const auto b = ci_test(g1, "X2", "X1", {"X3"}, 0.05);
  const auto g = g_test(g1, "X1", "X2", {"X3"}, 0.05);
  EXPECT_EQ(a.statistic, b.statistic);
  EXPECT_EQ(a.p_value, b.p_value);
  EXPECT_EQ(a.dof, b.dof);
  EXPECT_EQ(a.statistic, g.statistic);

  const auto cont = normals(500, 4, 0.3);
  EXPECT_EQ(ci_test(cont, "X", "Y", {"Z"}, 0.05).statistic, fisher_z_test(cont, "X", "Y", {"Z"}, 0.05).statistic);
  const auto c1 = ci_test(cont, "Y", "X", {"Z"}, 0.05);
  const auto c2 = ci_test(cont, "X", "Y", {"Z"}, 0.05);
  EXPECT_EQ(c1.statistic, c2.statistic);

  // Binary x with a continuous conditioning variable goes to Fisher z.
  const auto mixed = sample(make_g1(), 500, 6);
  EXPECT_EQ(ci_test(mixed, "X1", "X2", {"Y"}, 0.05).statistic,
            fisher_z_test(mixed, "X1", "X2", {"Y"}, 0.05).statistic);
}

TEST(CiTest, DecisionIsExactlyPAboveAlpha) {
  const auto t = sample(make_g1(), 3000, 8);
  for (double alpha : {0.01, 0.05, 0.2}) {
    const auto r = ci_test(t, "X1", "X5", {"X2"}, alpha);
    EXPECT_EQ(r.independent, r.p_value > alpha);
    EXPECT_GE(r.p_value, 0.0);
    EXPECT_LE(r.p_value, 1.0);
  }
}

TEST(CiTest, ArgumentErrors) {
  const auto t = sample(make_g1(), 100, 8);
  EXPECT_EQ(code_of([&] { ci_test(t, "X1", "X1", {}, 0.05); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { ci_test(t, "X1", "X2", {"X1"}, 0.05); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { ci_test(t, "X1", "Q", {}, 0.05); }), ErrorCode::UnknownColumn);
  EXPECT_EQ(code_of([&] { ci_test(t, "X1", "X2", {}, 0.0); }), ErrorCode::InvalidArgument);
}
