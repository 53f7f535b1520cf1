#include "mode/discovery.hpp"

#include <algorithm>

#include "mode/error.hpp"
#include "mode/kernels.hpp"

namespace mode {

DSeparationOracle::DSeparationOracle(const Scm& scm, const DataTable& table) : dag_(dag_of(scm)) {
  for (const auto& col : table.columns()) node_.push_back(scm.index_of(col.name));
}

CiResult DSeparationOracle::test(std::size_t x, std::size_t y, std::span<const std::size_t> s, double) const {
  std::vector<std::size_t> cond;
  for (auto v : s) cond.push_back(node_.at(v));
  const bool sep = d_separated(dag_, node_.at(x), node_.at(y), cond);
  return {0.0, 0, sep ? 1.0 : 0.0, sep, false};
}

std::string_view to_string(TraceRecord::Phase phase) {
  switch (phase) {
    case TraceRecord::Phase::Marginal: return "marginal";
    case TraceRecord::Phase::Subset: return "subset";
    case TraceRecord::Phase::Markov: return "markov";
  }
  return "unknown";
}

namespace {

TraceRecord record(const DataTable& t, TraceRecord::Phase phase, std::size_t x, std::span<const std::size_t> s,
                   const CiResult& r) {
  TraceRecord rec{phase, t.column(x).name, {}, r.statistic, r.p_value, r.independent};
  for (auto v : s) rec.conditioning.push_back(t.column(v).name);
  return rec;
}

// Advances idx to the next k-combination of [0, n) in lexicographic order.
bool next_combination(std::vector<std::size_t>& idx, std::size_t n) {
  const std::size_t k = idx.size();
  for (std::size_t i = k; i-- > 0;) {
    if (idx[i] < n - k + i) {
      ++idx[i];
      for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

ParentSet find_parents(const DataTable& table, const IndependenceTest& test, const DiscoveryOptions& options) {
  if (!(options.alpha > 0.0 && options.alpha < 1.0))
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  const auto features = table.feature_indices();
  if (features.empty()) throw Error(ErrorCode::EmptyFeatureSet, "table has no feature columns");
  const std::size_t y = table.outcome_index();
  ParentSet out;

  // Marginal screen. Tests are independent, so they run in parallel into
  // fixed slots and are recorded in column order.
  std::vector<CiResult> marginal(features.size());
  kernels::for_each_index(
      features.size(), [&](std::size_t i) { marginal[i] = test.test(features[i], y, {}, options.alpha); },
      kernels::Exec::Parallel);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < features.size(); ++i) {
    out.trace.push_back(record(table, TraceRecord::Phase::Marginal, features[i], {}, marginal[i]));
    if (!marginal[i].independent) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return marginal[a].statistic > marginal[b].statistic; });
  std::vector<std::size_t> cands;
  for (auto i : order) cands.push_back(features[i]);

  // Subset elimination with conditioning sets of size 1..max_cond drawn from
  // the current candidates.
  for (std::size_t k = 1; k <= options.max_cond && cands.size() > k; ++k) {
    for (std::size_t pos = 0; pos < cands.size();) {
      const std::size_t x = cands[pos];
      std::vector<std::size_t> others;
      for (auto c : cands)
        if (c != x) others.push_back(c);
      if (others.size() < k) {
        ++pos;
        continue;
      }
      std::vector<std::size_t> idx(k);
      for (std::size_t j = 0; j < k; ++j) idx[j] = j;
      bool removed = false;
      std::vector<std::size_t> s(k);
      do {
        for (std::size_t j = 0; j < k; ++j) s[j] = others[idx[j]];
        const auto r = test.test(x, y, s, options.alpha);
        out.trace.push_back(record(table, TraceRecord::Phase::Subset, x, s, r));
        if (r.independent) {
          removed = true;
          break;
        }
      } while (next_combination(idx, others.size()));
      if (removed) cands.erase(cands.begin() + static_cast<std::ptrdiff_t>(pos));
      else ++pos;
    }
  }

  // Markov pass: a non-parent is independent of Y given all true parents,
  // which may need a set larger than max_cond.
  if (options.markov_pass) {
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t pos = 0; pos < cands.size(); ++pos) {
        const std::size_t x = cands[pos];
        std::vector<std::size_t> s;
        for (auto c : cands)
          if (c != x) s.push_back(c);
        if (s.size() <= options.max_cond) continue;
        const auto r = test.test(x, y, s, options.alpha);
        out.trace.push_back(record(table, TraceRecord::Phase::Markov, x, s, r));
        if (r.independent) {
          cands.erase(cands.begin() + static_cast<std::ptrdiff_t>(pos));
          changed = true;
          break;
        }
      }
    }
  }

  std::sort(cands.begin(), cands.end());
  for (auto c : cands) out.parents.push_back(table.column(c).name);
  return out;
}

ParentSet find_parents(const DataTable& table, const DiscoveryOptions& options) {
  DataIndependenceTest test(table);
  return find_parents(table, test, options);
}

nlohmann::json to_json(const ParentSet& parents) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& r : parents.trace)
    trace.push_back({{"phase", to_string(r.phase)},
                     {"feature", r.feature},
                     {"conditioning", r.conditioning},
                     {"statistic", r.statistic},
                     {"p_value", r.p_value},
                     {"independent", r.independent}});
  return {{"parents", parents.parents}, {"trace", trace}};
}

}  // namespace mode
