#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numeric>

#include "mode/error.hpp"
#include "mode/rng.hpp"
#include "mode/scm.hpp"
#include "mode/stats.hpp"

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

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

// Reference d-separation: enumerate every simple path in the skeleton and
// check the blocking rule on each interior node.
bool d_separated_by_paths(const Dag& dag, std::size_t x, std::size_t y, const std::vector<std::size_t>& s) {
  const std::size_t m = dag.size();
  std::vector<std::vector<char>> edge(m, std::vector<char>(m, 0));  // edge[a][b]: a -> b
  for (std::size_t v = 0; v < m; ++v)
    for (auto p : dag.parents[v]) edge[p][v] = 1;
  std::vector<char> in_s(m, 0);
  for (auto v : s) in_s[v] = 1;
  // desc_in_s[v]: v or a descendant of v is in S.
  std::vector<char> desc_in_s(m, 0);
  for (std::size_t v = 0; v < m; ++v) {
    std::vector<char> seen(m, 0);
    std::vector<std::size_t> st{v};
    while (!st.empty()) {
      auto u = st.back();
      st.pop_back();
      if (seen[u]) continue;
      seen[u] = 1;
      if (in_s[u]) desc_in_s[v] = 1;
      for (std::size_t w = 0; w < m; ++w)
        if (edge[u][w]) st.push_back(w);
    }
  }
  std::vector<std::size_t> path{x};
  std::vector<char> on_path(m, 0);
  on_path[x] = 1;
  bool open_path = false;
  std::function<void(std::size_t)> walk = [&](std::size_t u) {
    if (open_path) return;
    if (u == y) {
      bool blocked = false;
      for (std::size_t k = 1; k + 1 < path.size(); ++k) {
        const auto a = path[k - 1], b = path[k], c = path[k + 1];
        const bool collider = edge[a][b] && edge[c][b];
        if (collider ? !desc_in_s[b] : in_s[b]) {
          blocked = true;
          break;
        }
      }
      if (!blocked) open_path = true;
      return;
    }
    for (std::size_t w = 0; w < m; ++w) {
      if (on_path[w] || !(edge[u][w] || edge[w][u])) continue;
      on_path[w] = 1;
      path.push_back(w);
      walk(w);
      path.pop_back();
      on_path[w] = 0;
    }
  };
  walk(x);
  return !open_path;
}

Dag random_dag(rng::Stream& s, std::size_t m) {
  Dag d;
  d.parents.resize(m);
  // Random order, then random forward edges.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = m - 1; i > 0; --i) std::swap(order[i], order[s.below(i + 1)]);
  const double density = 0.2 + 0.5 * s.uniform();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (s.uniform() < density) d.parents[order[j]].push_back(order[i]);
  return d;
}

}  // namespace

TEST(Generators, G1Shape) {
  const auto g1 = make_g1();
  EXPECT_EQ(g1.size(), 7u);
  EXPECT_EQ(g1.observed_names().size(), 6u);
  EXPECT_FALSE(g1.node(g1.index_of("U")).observed);
  EXPECT_EQ(g1.observed_feature_names(), (std::vector<std::string>{"X1", "X2", "X3", "X4", "X5"}));
}

TEST(Generators, G2ProductTerm) {
  const auto g2 = make_g2();
  const auto& x3 = g2.node(g2.index_of("X3"));
  const auto& mech = std::get<LogisticBernoulli>(x3.mechanism);
  ASSERT_EQ(mech.terms.size(), 1u);
  EXPECT_EQ(mech.terms[0].factors, (std::vector<std::string>{"U", "X2", "X4"}));
  EXPECT_EQ(mech.terms[0].coefficient, 1.0);
  EXPECT_EQ(mech.intercept, 0.0);
  // Declared out of topological order but sampled columns keep X1..X5 order.
  const auto t = sample(g2, 10, 1);
  EXPECT_EQ(t.feature_names(), (std::vector<std::string>{"X1", "X2", "X3", "X4", "X5"}));
}

TEST(Generators, G2ProductVanishesToHalf) {
  // When X2 * X4 = 0 the X3 probability is exactly 1/2.
  const auto g2 = mutilate(make_g2(), {{"X2", 0.0}, {"X4", 1.0}});
  const auto data = sample_all(g2, 200000, 4);
  EXPECT_NEAR(mean_of(data[g2.index_of("X3")]), 0.5, 0.005);
}

TEST(Generators, WineEnvironmentsShiftOnlyP) {
  const auto a = sample(make_wine(0), 100000, 8);
  const auto b = sample(make_wine(1), 100000, 8);
  EXPECT_EQ(a.column("Y").values, b.column("Y").values);
  EXPECT_EQ(a.column("X1").values, b.column("X1").values);
  const auto& pa = a.column("P").values;
  const auto& pb = b.column("P").values;
  for (std::size_t i = 0; i < 100; ++i) EXPECT_NEAR(pb[i] - pa[i], 2.0, 1e-12);
  EXPECT_EQ(a.feature_names(), (std::vector<std::string>{"X1", "X2", "X3", "P"}));
  EXPECT_THROW(make_wine(2), Error);
}

TEST(Sample, G1MeanOfY) {
  const auto t = sample(make_g1(), 100000, 2024);
  EXPECT_NEAR(mean_of(t.column("Y").values), 4.0, 0.05);
  for (const auto& name : {"X1", "X2", "X3", "X4", "X5"}) {
    EXPECT_EQ(t.column(name).kind.type, ColumnType::Binary);
    EXPECT_NEAR(mean_of(t.column(name).values), 0.5, 0.01);
  }
  EXPECT_EQ(t.column("Y").kind.type, ColumnType::Continuous);
}

TEST(Sample, DeterministicAndExecutionIndependent) {
  const auto g = make_g2();
  const auto a = sample(g, 5000, 77, kernels::Exec::Serial);
  const auto b = sample(g, 5000, 77, kernels::Exec::Parallel);
  const auto c = sample(g, 5000, 78);
  for (std::size_t i = 0; i < a.n_cols(); ++i) EXPECT_EQ(a.column(i).values, b.column(i).values);
  EXPECT_NE(a.column("Y").values, c.column("Y").values);
}

TEST(Sample, DegenerateBernoulli) {
  Scm s({{"A", {}, BernoulliConst{0.0}, true}, {"Y", {"A"}, LinearGaussian{0.0, {1.0}, 0.0}, true}});
  const auto t = sample(s, 50, 1);
  for (double v : t.column("A").values) EXPECT_EQ(v, 0.0);
}

TEST(Validation, Errors) {
  EXPECT_EQ(code_of([] {
              Scm({{"A", {"B"}, LogisticBernoulli{}, true}, {"B", {"A"}, LogisticBernoulli{}, true}}, "A");
            }),
            ErrorCode::InvalidScm);
  EXPECT_EQ(code_of([] { Scm({{"A", {"Q"}, LogisticBernoulli{}, true}}, "A"); }), ErrorCode::UnknownNode);
  EXPECT_EQ(code_of([] {
              Scm({{"A", {}, GaussianConst{}, true}, {"Y", {"A"}, LinearGaussian{0, {1, 2}, 1}, true}});
            }),
            ErrorCode::InvalidScm);
  EXPECT_EQ(code_of([] { Scm({{"Y", {}, BernoulliConst{1.5}, true}}); }), ErrorCode::InvalidScm);
  EXPECT_EQ(code_of([] { Scm({{"Y", {}, GaussianConst{0, -1}, true}}); }), ErrorCode::InvalidScm);
  EXPECT_EQ(code_of([] { Scm({{"Y", {}, GaussianConst{}, false}}); }), ErrorCode::InvalidScm);
  EXPECT_EQ(code_of([] {
              Scm({{"A", {}, GaussianConst{}, true},
                   {"Y", {"A"}, LogisticBernoulli{0, {{1.0, {"Z"}}}}, true}});
            }),
            ErrorCode::InvalidScm);
}

TEST(Mutilate, ReplacesMechanism) {
  const auto g1 = make_g1();
  const auto m = mutilate(g1, {{"X1", 1.0}});
  const auto i = m.index_of("X1");
  EXPECT_TRUE(m.parents(i).empty());
  EXPECT_TRUE(m.node(i).parents.empty());
  ASSERT_TRUE(std::holds_alternative<BernoulliConst>(m.node(i).mechanism));
  EXPECT_EQ(std::get<BernoulliConst>(m.node(i).mechanism).p, 1.0);
  // U -> X1 edge is gone.
  const auto& uc = m.children(m.index_of("U"));
  EXPECT_EQ(std::count(uc.begin(), uc.end(), i), 0);
  EXPECT_EQ(to_json(mutilate(g1, {})), to_json(g1));
  EXPECT_EQ(code_of([&] { mutilate(g1, {{"Q", 1.0}}); }), ErrorCode::UnknownNode);
  EXPECT_EQ(code_of([&] { mutilate(g1, {{"X1", 0.5}}); }), ErrorCode::InvalidArgument);
}

TEST(Mutilate, EveryNodeGivesConstantRow) {
  const auto g1 = make_g1();
  InterventionSpec all{{"U", 0.3}, {"X1", 1}, {"X2", 0}, {"X3", 1}, {"X4", 1}, {"X5", 0}, {"Y", 9.5}};
  const auto t = sample(mutilate(g1, all), 100, 3);
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    EXPECT_EQ(t.column("X1").values[r], 1.0);
    EXPECT_EQ(t.column("X2").values[r], 0.0);
    EXPECT_EQ(t.column("Y").values[r], 9.5);
  }
}

TEST(DSeparation, TextbookCases) {
  Scm chain({{"X", {}, BernoulliConst{0.5}, true},
             {"Z", {"X"}, LogisticBernoulli{0, {{1, {"X"}}}}, true},
             {"Y", {"Z"}, LogisticBernoulli{0, {{1, {"Z"}}}}, true}});
  EXPECT_TRUE(d_separated(chain, "X", "Y", {"Z"}));
  EXPECT_FALSE(d_separated(chain, "X", "Y", {}));
  Scm collider({{"X", {}, BernoulliConst{0.5}, true},
                {"Y", {}, BernoulliConst{0.5}, true},
                {"Z", {"X", "Y"}, LogisticBernoulli{0, {{1, {"X"}}, {1, {"Y"}}}}, true}},
               "Y");
  EXPECT_TRUE(d_separated(collider, "X", "Y", {}));
  EXPECT_FALSE(d_separated(collider, "X", "Y", {"Z"}));
  EXPECT_EQ(code_of([&] { d_separated(chain, "X", "Q", {}); }), ErrorCode::UnknownNode);
}

TEST(DSeparation, G1NonParent) {
  const auto g1 = make_g1();
  EXPECT_TRUE(d_separated(g1, "X5", "Y", {"X1", "X2", "X3", "X4"}));
  EXPECT_FALSE(d_separated(g1, "X5", "Y", {"X1", "X2", "X3"}));
  EXPECT_FALSE(d_separated(g1, "X5", "Y", {}));
  const auto g2 = make_g2();
  EXPECT_TRUE(d_separated(g2, "X5", "Y", {"X1", "X2", "X3", "X4"}));
}

TEST(DSeparation, AgreesWithPathEnumeration) {
  rng::Stream s(20240917);
  int checked = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t m = 2 + s.below(5);
    const auto dag = random_dag(s, m);
    const std::size_t x = s.below(m);
    std::size_t y = s.below(m - 1);
    if (y >= x) ++y;
    std::vector<std::size_t> cond;
    for (std::size_t v = 0; v < m; ++v)
      if (v != x && v != y && s.uniform() < 0.4) cond.push_back(v);
    ASSERT_EQ(d_separated(dag, x, y, cond), d_separated_by_paths(dag, x, y, cond)) << "rep " << rep;
    ++checked;
  }
  EXPECT_EQ(checked, 1000);
}

TEST(Oracle, TwoNodeInterventionalProbability) {
  const double lo = std::log(0.2 / 0.8), hi = std::log(0.8 / 0.2);
  Scm s({{"X", {}, BernoulliConst{0.3}, true}, {"Y", {"X"}, LogisticBernoulli{lo, {{hi - lo, {"X"}}}}, true}});
  const auto p = interventional_prob(s, {{"X", 1.0}}, {}, [](double y) { return y == 1.0; }, 200000, 5);
  EXPECT_NEAR(p.value, 0.8, 4 * p.std_error);
  EXPECT_EQ(p.support, 200000u);
}

TEST(Oracle, G1ContrastIsCoefficientInEveryContext) {
  const auto g1 = make_g1();
  for (int mask = 0; mask < 8; ++mask) {
    Instance ctx{{"X2", double(mask & 1)}, {"X3", double((mask >> 1) & 1)}, {"X4", double((mask >> 2) & 1)}};
    const auto t = interventional_mean(g1, {{"X1", 1.0}}, ctx, 400000, 11);
    const auto c = interventional_mean(g1, {{"X1", 0.0}}, ctx, 400000, 11);
    EXPECT_NEAR(t.value - c.value, 1.5, 5 * std::hypot(t.std_error, c.std_error)) << mask;
  }
}

TEST(Oracle, AllParentsForcedGivesPlugIn) {
  const auto g1 = make_g1();
  const auto m = interventional_mean(g1, {{"X1", 1}, {"X2", 0}, {"X3", 1}, {"X4", 1}}, {}, 200000, 3);
  EXPECT_NEAR(m.value, 1.0 + 1.5 * 3, 4 * m.std_error);
}

TEST(Oracle, EmptySupport) {
  const auto g1 = make_g1();
  EXPECT_EQ(code_of([&] { interventional_mean(g1, {{"X1", 1.0}}, Instance{{"X1", 0.0}}, 1000, 1); }),
            ErrorCode::EmptySupport);
}

TEST(Oracle, ExchangeabilityOnG1Parents) {
  const auto g1 = make_g1();
  const std::vector<std::string> parents{"X1", "X2", "X3", "X4"};
  for (int ctx = 0; ctx < 16; ctx += 5) {
    Instance obs;
    for (int k = 0; k < 4; ++k) obs.set(parents[k], (ctx >> k) & 1);
    const auto base = interventional_mean(g1, {}, obs, 200000, 21);
    for (int part = 1; part < 16; part += 3) {
      InterventionSpec spec;
      Instance cond;
      for (int k = 0; k < 4; ++k) {
        if ((part >> k) & 1) spec[parents[k]] = (ctx >> k) & 1;
        else cond.set(parents[k], (ctx >> k) & 1);
      }
      const auto m = interventional_mean(g1, spec, cond, 200000, 22);
      EXPECT_NEAR(m.value, base.value, 0.05) << ctx << "/" << part;
    }
  }
}

TEST(TrueCde, AnalyticPaths) {
  const auto g1 = make_g1();
  Instance ctx{{"X2", 1}, {"X3", 0}, {"X4", 1}, {"X5", 1}};
  const auto e = true_cde(g1, "X1", ctx, 1, 0);
  EXPECT_TRUE(e.exact);
  EXPECT_EQ(e.value, 1.5);
  Instance ctx5{{"X1", 0}, {"X2", 1}, {"X3", 0}, {"X4", 1}};
  const auto z = true_cde(g1, "X5", ctx5, 1, 0);
  EXPECT_TRUE(z.exact);
  EXPECT_EQ(z.value, 0.0);
  EXPECT_EQ(code_of([&] { true_cde(g1, "Q", ctx, 1, 0); }), ErrorCode::UnknownNode);
}

TEST(TrueCde, G2DirectEffectOnly) {
  const auto g2 = make_g2();
  Instance ctx{{"X1", 1}, {"X3", 0}, {"X4", 1}, {"X5", 0}};
  const auto e = true_cde(g2, "X2", ctx, 1, 0);
  EXPECT_TRUE(e.exact);
  EXPECT_EQ(e.value, 1.5);
  // Monte Carlo confirmation through the mutilated graph.
  InterventionSpec t{{"X1", 1}, {"X2", 1}, {"X3", 0}, {"X4", 1}, {"X5", 0}};
  InterventionSpec c = t;
  c["X2"] = 0;
  const auto mt = interventional_mean(g2, t, {}, 1000000, 8);
  const auto mc = interventional_mean(g2, c, {}, 1000000, 8);
  EXPECT_NEAR(mt.value - mc.value, 1.5, 1e-9);
  // Leaving X3 free opens the mediated route, forcing the sampling path.
  Instance partial{{"X1", 1}, {"X4", 1}, {"X5", 0}};
  const auto total = true_cde(g2, "X2", partial, 1, 0, {400000, 3, std::nullopt});
  EXPECT_FALSE(total.exact);
  EXPECT_GT(total.support, 0u);
}

TEST(TrueCde, NonParentUnderSamplingPathIsNull) {
  // Y is logistic so no closed form applies; X5 still has no route to Y.
  std::vector<ScmNode> nodes = make_g1().nodes();
  nodes.back() = {"Y", {"X1", "X2"}, LogisticBernoulli{-0.5, {{1.0, {"X1"}}, {0.5, {"X2"}}}}, true};
  const Scm s(nodes);
  const auto e = true_cde(s, "X5", Instance{{"X1", 1}}, 1, 0, {100000, 2, std::nullopt});
  EXPECT_TRUE(e.exact);
  EXPECT_EQ(e.value, 0.0);
  const auto x1 = true_cde(s, "X1", Instance{{"X2", 1}, {"X3", 0}, {"X4", 0}, {"X5", 0}}, 1, 0, {200000, 2, std::nullopt});
  EXPECT_FALSE(x1.exact);
  EXPECT_NEAR(x1.value, stats::sigmoid(1.0) - stats::sigmoid(0.0), 4 * x1.std_error + 1e-3);
}

TEST(TrueCde, ExceedanceClosedFormMatchesSampling) {
  const auto g1 = make_g1();
  Instance ctx{{"X2", 0}, {"X3", 1}, {"X4", 0}, {"X5", 1}};
  OracleOptions opt{400000, 4, 3.2};
  const auto exact = true_cde(g1, "X1", ctx, 1, 0, opt);
  EXPECT_TRUE(exact.exact);
  const double want = (1 - stats::normal_cdf(3.2 - 4.0)) - (1 - stats::normal_cdf(3.2 - 2.5));
  EXPECT_NEAR(exact.value, want, 1e-14);
  InterventionSpec t{{"X1", 1}, {"X2", 0}, {"X3", 1}, {"X4", 0}};
  InterventionSpec c = t;
  c["X1"] = 0;
  auto exceed = [](double y) { return y > 3.2; };
  const auto pt = interventional_prob(g1, t, {}, exceed, 400000, 6);
  const auto pc = interventional_prob(g1, c, {}, exceed, 400000, 6);
  EXPECT_NEAR(pt.value - pc.value, want, 5 * std::hypot(pt.std_error, pc.std_error));
}

TEST(TrueCate, ObservationOneAcrossLayouts) {
  const auto a = make_two_parent(TwoParentLayout::X2CausesX1);
  const auto b = make_two_parent(TwoParentLayout::X1CausesX2);
  for (double x2 : {0.0, 1.0}) {
    const auto cate = true_cate(a, "X1", Instance{{"X2", x2}}, 1, 0, {400000, 5, std::nullopt});
    const auto cde = true_cde(b, "X1", Instance{{"X2", x2}}, 1, 0, {400000, 5, std::nullopt});
    const double exact = stats::sigmoid(1.0 + x2) - stats::sigmoid(-1.0 + x2);
    EXPECT_NEAR(cate.value, exact, 5 * cate.std_error);
    EXPECT_NEAR(cde.value, exact, 5 * cde.std_error + 1e-3);
    EXPECT_NEAR(cate.value, cde.value, 5 * std::hypot(cate.std_error, cde.std_error) + 1e-3);
  }
}

TEST(TrueCate, EmptyConditionIsAte) {
  const auto g1 = make_g1();
  const auto cate = true_cate(g1, "X1", {}, 1, 0, {100000, 9, std::nullopt});
  const auto t = interventional_mean(g1, {{"X1", 1}}, {}, 100000, 9);
  const auto c = interventional_mean(g1, {{"X1", 0}}, {}, 100000, 9);
  EXPECT_EQ(cate.value, t.value - c.value);
  EXPECT_NEAR(cate.value, 1.5, 0.05);
}

TEST(TrueCate, G1ParentContext) {
  const auto g1 = make_g1();
  const auto cate = true_cate(g1, "X1", Instance{{"X2", 1}, {"X3", 0}, {"X4", 1}}, 1, 0, {400000, 9, std::nullopt});
  EXPECT_NEAR(cate.value, 1.5, 5 * cate.std_error);
}

TEST(Enumeration, TruncatedFactorization) {
  rng::Stream s(5);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t m = 2 + s.below(5);
    const auto dag = random_dag(s, m);
    // Random logistic CPTs over a DAG declared in index order is not
    // guaranteed topological, which the SCM accepts.
    std::vector<ScmNode> nodes;
    for (std::size_t v = 0; v < m; ++v) {
      LogisticBernoulli mech{s.normal(), {}};
      std::vector<std::string> parents;
      for (auto p : dag.parents[v]) {
        parents.push_back("V" + std::to_string(p));
        mech.terms.push_back({2 * s.normal(), {parents.back()}});
      }
      nodes.push_back({"V" + std::to_string(v), parents, mech, true});
    }
    const Scm scm(nodes, "V0");
    InterventionSpec spec;
    for (std::size_t v = 0; v < m; ++v)
      if (s.uniform() < 0.35) spec["V" + std::to_string(v)] = static_cast<double>(s.below(2));
    const auto joint = enumerate_joint(mutilate(scm, spec));

    // Truncated product over the original mechanisms.
    double tv = 0.0, total = 0.0;
    for (std::size_t mask = 0; mask < joint.size(); ++mask) {
      double p = 1.0;
      for (std::size_t v = 0; v < m; ++v) {
        const int val = (mask >> v) & 1;
        const std::string name = "V" + std::to_string(v);
        if (auto it = spec.find(name); it != spec.end()) {
          p *= val == static_cast<int>(it->second) ? 1.0 : 0.0;
          continue;
        }
        const auto& mech = std::get<LogisticBernoulli>(nodes[v].mechanism);
        double w = mech.intercept;
        for (std::size_t k = 0; k < dag.parents[v].size(); ++k)
          w += mech.terms[k].coefficient * ((mask >> dag.parents[v][k]) & 1);
        const double p1 = 1.0 / (1.0 + std::exp(-w));
        p *= val ? p1 : 1.0 - p1;
      }
      tv += std::abs(p - joint[mask]);
      total += joint[mask];
    }
    EXPECT_LE(0.5 * tv, 1e-12) << rep;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Enumeration, SamplingMatchesJoint) {
  Scm s({{"A", {}, LogisticBernoulli{0.3, {}}, true},
         {"B", {"A"}, LogisticBernoulli{-1, {{2, {"A"}}}}, true},
         {"Y", {"A", "B"}, LogisticBernoulli{0.5, {{-1, {"A", "B"}}}}, true}});
  const auto joint = enumerate_joint(s);
  const std::size_t n = 400000;
  const auto data = sample_all(s, n, 13);
  std::vector<double> freq(8, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    freq[int(data[0][r]) | (int(data[1][r]) << 1) | (int(data[2][r]) << 2)] += 1.0 / n;
  for (int k = 0; k < 8; ++k) EXPECT_NEAR(freq[k], joint[k], 4 * std::sqrt(joint[k] * (1 - joint[k]) / n) + 1e-6);
  EXPECT_EQ(code_of([] { enumerate_joint(make_g1()); }), ErrorCode::NotSupported);
}

TEST(Json, RoundTripAndVersion) {
  for (const auto& id : {"g1", "g2", "wine0", "wine1", "fig1a", "fig1b"}) {
    const auto s = make_named(id);
    const auto j = to_json(s);
    const auto back = scm_from_json(j);
    EXPECT_EQ(to_json(back), j);
    EXPECT_EQ(sample(back, 50, 1).column("Y").values, sample(s, 50, 1).column("Y").values);
  }
  auto j = to_json(make_g1());
  j["schema_version"] = 99;
  EXPECT_EQ(code_of([&] { scm_from_json(j); }), ErrorCode::SchemaVersionMismatch);
  EXPECT_EQ(code_of([] { scm_from_json(nlohmann::json{{"schema_version", 1}}); }), ErrorCode::CorruptFile);
}
