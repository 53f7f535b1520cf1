#include <gtest/gtest.h>

#include <algorithm>

#include "mode/discovery.hpp"
#include "mode/error.hpp"
#include "mode/rng.hpp"

using namespace mode;

namespace {

const std::vector<std::string> kParents{"X1", "X2", "X3", "X4"};

std::size_t choose(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

bool acyclic(const Dag& d) {
  std::vector<int> state(d.size(), 0);
  std::function<bool(std::size_t)> visit = [&](std::size_t v) {
    if (state[v] == 1) return false;
    if (state[v] == 2) return true;
    state[v] = 1;
    for (auto p : d.parents[v])
      if (!visit(p)) return false;
    state[v] = 2;
    return true;
  };
  for (std::size_t v = 0; v < d.size(); ++v)
    if (!visit(v)) return false;
  return true;
}

}  // namespace

TEST(FindParents, RecoversG1AndG2) {
  for (const auto& id : {"g1", "g2"}) {
    const auto t = sample(make_named(id), 10000, 20240917);
    const auto ps = find_parents(t);
    EXPECT_EQ(ps.parents, kParents) << id;
    EXPECT_FALSE(ps.trace.empty());
  }
}

TEST(FindParents, SubsetSearchAloneCannotRemoveX5) {
  // X5 is only separated from Y by all four parents.
  const auto t = sample(make_g1(), 10000, 20240917);
  const auto ps = find_parents(t, {0.05, 3, false});
  EXPECT_NE(std::find(ps.parents.begin(), ps.parents.end(), "X5"), ps.parents.end());
}

TEST(FindParents, ExactCopySurvives) {
  DataTable t({{"A", ColumnKind::binary(), {0, 1, 0, 1, 1, 0, 1, 0, 0, 1, 1, 0}},
               {"Y", ColumnKind::binary(), {0, 1, 0, 1, 1, 0, 1, 0, 0, 1, 1, 0}}},
              "Y");
  EXPECT_EQ(find_parents(t).parents, std::vector<std::string>{"A"});
}

TEST(FindParents, ChainKeepsMiddle) {
  Scm chain({{"A", {}, LogisticBernoulli{0.0, {}}, true},
             {"B", {"A"}, LogisticBernoulli{-1.0, {{2.0, {"A"}}}}, true},
             {"Y", {"B"}, LogisticBernoulli{-1.0, {{2.0, {"B"}}}}, true}});
  const auto t = sample(chain, 20000, 4);
  EXPECT_EQ(find_parents(t).parents, std::vector<std::string>{"B"});
  DSeparationOracle oracle(chain, t);
  EXPECT_EQ(find_parents(t, oracle).parents, std::vector<std::string>{"B"});
}

TEST(FindParents, DeterministicTrace) {
  const auto t = sample(make_g2(), 3000, 1);
  const auto a = find_parents(t);
  const auto b = find_parents(t);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(FindParents, NeverKeepsMarginallyIndependent) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto t = sample(make_g1(), 800, seed);
    const auto ps = find_parents(t);
    for (const auto& r : ps.trace)
      if (r.phase == TraceRecord::Phase::Marginal && r.independent)
        EXPECT_EQ(std::find(ps.parents.begin(), ps.parents.end(), r.feature), ps.parents.end());
  }
}

TEST(FindParents, TestCountBound) {
  const auto t = sample(make_g2(), 2000, 3);
  for (std::size_t max_cond : {0u, 1u, 2u, 3u}) {
    const auto ps = find_parents(t, {0.05, max_cond, true});
    const std::size_t m = 5;
    std::size_t bound = 0;
    for (std::size_t j = 0; j <= max_cond; ++j) bound += m * choose(m - 1, j);
    std::size_t markov = 0;
    for (const auto& r : ps.trace) markov += r.phase == TraceRecord::Phase::Markov;
    EXPECT_LE(ps.trace.size() - markov, bound);
    EXPECT_LE(markov, m * (m + 1));
  }
}

TEST(FindParents, EmptyFeatureSet) {
  DataTable t({{"Y", ColumnKind::binary(), {0, 1}}}, "Y");
  EXPECT_THROW(find_parents(t), Error);
  try {
    find_parents(t);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyFeatureSet);
  }
}

TEST(FindParents, OracleSoundOnAllSmallDags) {
  // Every DAG over four features, each combined with every parent set of a
  // sink outcome.
  const std::size_t f = 4;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < f; ++i)
    for (std::size_t j = i + 1; j < f; ++j) pairs.emplace_back(i, j);
  std::vector<Column> cols;
  for (std::size_t i = 0; i < f; ++i) cols.push_back({"V" + std::to_string(i), ColumnKind::binary(), {0, 1}});
  cols.push_back({"Y", ColumnKind::binary(), {0, 1}});
  const DataTable shell(cols, "Y");
  std::vector<std::size_t> identity{0, 1, 2, 3, 4};

  std::size_t dags = 0, cases = 0;
  std::size_t total = 1;
  for (std::size_t k = 0; k < pairs.size(); ++k) total *= 3;
  for (std::size_t code = 0; code < total; ++code) {
    Dag d;
    d.parents.assign(f + 1, {});
    std::size_t c = code;
    for (const auto& [i, j] : pairs) {
      const auto e = c % 3;
      c /= 3;
      if (e == 1) d.parents[j].push_back(i);
      if (e == 2) d.parents[i].push_back(j);
    }
    if (!acyclic(d)) continue;
    ++dags;
    for (std::size_t mask = 0; mask < (1u << f); ++mask) {
      Dag full = d;
      std::vector<std::string> want;
      for (std::size_t i = 0; i < f; ++i)
        if (mask >> i & 1) {
          full.parents[f].push_back(i);
          want.push_back("V" + std::to_string(i));
        }
      DSeparationOracle oracle(full, identity);
      for (std::size_t max_cond : {1u, 3u}) {
        const auto ps = find_parents(shell, oracle, {0.05, max_cond, true});
        ASSERT_EQ(ps.parents, want) << "code " << code << " mask " << mask << " max_cond " << max_cond;
      }
      ++cases;
    }
  }
  EXPECT_EQ(dags, 543u);
  EXPECT_EQ(cases, 543u * 16u);
}
