#include "mode/scm.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <deque>
#include <queue>
#include <set>

#include "mode/error.hpp"
#include "mode/stats.hpp"

namespace mode {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::InvalidScm, message);
}

std::size_t parent_slot(const ScmNode& node, const std::string& name) {
  auto it = std::find(node.parents.begin(), node.parents.end(), name);
  check(it != node.parents.end(), "node '" + node.name + "': term factor '" + name + "' is not a parent");
  return static_cast<std::size_t>(it - node.parents.begin());
}

void validate_mechanism(const ScmNode& node) {
  std::visit(Overloaded{
                 [&](const LinearGaussian& m) {
                   check(m.coefficients.size() == node.parents.size(),
                         "node '" + node.name + "': coefficient count does not match parent count");
                   check(std::isfinite(m.intercept) && std::isfinite(m.noise_sd) && m.noise_sd >= 0.0,
                         "node '" + node.name + "': invalid intercept or noise sd");
                   for (double c : m.coefficients) check(std::isfinite(c), "node '" + node.name + "': non-finite coefficient");
                 },
                 [&](const LogisticBernoulli& m) {
                   check(std::isfinite(m.intercept), "node '" + node.name + "': non-finite intercept");
                   for (const auto& t : m.terms) {
                     check(std::isfinite(t.coefficient), "node '" + node.name + "': non-finite coefficient");
                     for (const auto& f : t.factors) parent_slot(node, f);
                   }
                 },
                 [&](const BernoulliConst& m) {
                   check(m.p >= 0.0 && m.p <= 1.0, "node '" + node.name + "': probability outside [0, 1]");
                   check(node.parents.empty(), "node '" + node.name + "': constant mechanism with parents");
                 },
                 [&](const GaussianConst& m) {
                   check(std::isfinite(m.mean) && std::isfinite(m.sd) && m.sd >= 0.0,
                         "node '" + node.name + "': invalid mean or sd");
                   check(node.parents.empty(), "node '" + node.name + "': constant mechanism with parents");
                 },
             },
             node.mechanism);
}

double bernoulli_p1(const Mechanism& mech, const ScmNode& node, const std::vector<std::size_t>& parent_idx,
                    const std::vector<int>& value) {
  if (const auto* c = std::get_if<BernoulliConst>(&mech)) return c->p;
  const auto& m = std::get<LogisticBernoulli>(mech);
  double w = m.intercept;
  for (const auto& t : m.terms) {
    double prod = t.coefficient;
    for (const auto& f : t.factors) prod *= value[parent_idx[parent_slot(node, f)]];
    w += prod;
  }
  return stats::sigmoid(w);
}

}  // namespace

bool is_binary(const Mechanism& m) {
  return std::holds_alternative<LogisticBernoulli>(m) || std::holds_alternative<BernoulliConst>(m);
}

Scm::Scm(std::vector<ScmNode> nodes, std::string outcome) : nodes_(std::move(nodes)), outcome_(std::move(outcome)) {
  const std::size_t m = nodes_.size();
  check(m > 0, "SCM has no nodes");
  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < m; ++i) {
    check(!nodes_[i].name.empty(), "node with empty name");
    check(index.emplace(nodes_[i].name, i).second, "duplicate node name '" + nodes_[i].name + "'");
  }
  parent_idx_.assign(m, {});
  child_idx_.assign(m, {});
  for (std::size_t i = 0; i < m; ++i) {
    std::set<std::string> seen;
    for (const auto& p : nodes_[i].parents) {
      auto it = index.find(p);
      if (it == index.end())
        throw Error(ErrorCode::UnknownNode, "node '" + nodes_[i].name + "' names unknown parent '" + p + "'");
      check(it->second != i, "node '" + p + "' lists itself as a parent");
      check(seen.insert(p).second, "node '" + nodes_[i].name + "' repeats parent '" + p + "'");
      parent_idx_[i].push_back(it->second);
      child_idx_[it->second].push_back(i);
    }
    validate_mechanism(nodes_[i]);
  }

  // Kahn's algorithm, lowest declaration index first.
  std::vector<std::size_t> indegree(m);
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < m; ++i) {
    indegree[i] = parent_idx_[i].size();
    if (indegree[i] == 0) ready.push(i);
  }
  while (!ready.empty()) {
    const std::size_t v = ready.top();
    ready.pop();
    topo_.push_back(v);
    for (auto c : child_idx_[v])
      if (--indegree[c] == 0) ready.push(c);
  }
  check(topo_.size() == m, "parent lists contain a cycle");
  pos_.assign(m, 0);
  for (std::size_t k = 0; k < m; ++k) pos_[topo_[k]] = k;

  auto it = index.find(outcome_);
  if (it == index.end()) throw Error(ErrorCode::UnknownNode, "outcome node '" + outcome_ + "' not in SCM");
  outcome_index_ = it->second;
  check(nodes_[outcome_index_].observed, "outcome node must be observed");

  using Kind = kernels::CompiledScm::Kind;
  compiled_.nodes.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = topo_[k];
    const auto& src = nodes_[i];
    auto& dst = compiled_.nodes[k];
    dst.key = i;
    for (auto p : parent_idx_[i]) dst.parents.push_back(static_cast<std::uint32_t>(pos_[p]));
    std::visit(Overloaded{
                   [&](const LinearGaussian& mm) {
                     dst.kind = Kind::LinearGaussian;
                     dst.intercept = mm.intercept;
                     dst.scale = mm.noise_sd;
                     dst.coefficients = mm.coefficients;
                   },
                   [&](const LogisticBernoulli& mm) {
                     dst.kind = Kind::LogisticBernoulli;
                     dst.intercept = mm.intercept;
                     for (const auto& t : mm.terms) {
                       kernels::CompiledScm::Term term{t.coefficient, {}};
                       for (const auto& f : t.factors) term.factors.push_back(dst.parents[parent_slot(src, f)]);
                       dst.terms.push_back(std::move(term));
                     }
                   },
                   [&](const BernoulliConst& mm) {
                     dst.kind = Kind::BernoulliConst;
                     dst.intercept = mm.p;
                   },
                   [&](const GaussianConst& mm) {
                     dst.kind = Kind::GaussianConst;
                     dst.intercept = mm.mean;
                     dst.scale = mm.sd;
                   },
               },
               src.mechanism);
  }
}

std::optional<std::size_t> Scm::find(std::string_view name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].name == name) return i;
  return std::nullopt;
}

std::size_t Scm::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw Error(ErrorCode::UnknownNode, "unknown node '" + std::string(name) + "'");
}

std::vector<std::string> Scm::observed_names() const {
  std::vector<std::string> out;
  for (const auto& n : nodes_)
    if (n.observed) out.push_back(n.name);
  return out;
}

std::vector<std::string> Scm::observed_feature_names() const {
  std::vector<std::string> out;
  for (const auto& n : nodes_)
    if (n.observed && n.name != outcome_) out.push_back(n.name);
  return out;
}

kernels::NodeMatrix sample_all(const Scm& scm, std::size_t n, std::uint64_t seed, kernels::Exec exec) {
  auto by_pos = exec == kernels::Exec::Serial ? kernels::serial::sample_nodes(scm.compiled(), n, seed)
                                              : kernels::parallel::sample_nodes(scm.compiled(), n, seed);
  kernels::NodeMatrix out(scm.size());
  for (std::size_t i = 0; i < scm.size(); ++i) out[i] = std::move(by_pos[scm.position(i)]);
  return out;
}

DataTable sample(const Scm& scm, std::size_t n, std::uint64_t seed, kernels::Exec exec) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "sample size must be at least 1");
  auto all = sample_all(scm, n, seed, exec);
  std::vector<Column> cols;
  for (std::size_t i = 0; i < scm.size(); ++i) {
    const auto& node = scm.node(i);
    if (!node.observed) continue;
    cols.push_back({node.name, scm.is_binary(i) ? ColumnKind::binary() : ColumnKind::continuous(), std::move(all[i])});
  }
  return DataTable(std::move(cols), scm.outcome());
}

Scm mutilate(const Scm& scm, const InterventionSpec& spec) {
  std::vector<ScmNode> nodes = scm.nodes();
  for (const auto& [name, value] : spec) {
    const std::size_t i = scm.index_of(name);
    if (!std::isfinite(value))
      throw Error(ErrorCode::InvalidArgument, "intervention value for '" + name + "' is not finite");
    if (scm.is_binary(i)) {
      if (value != 0.0 && value != 1.0)
        throw Error(ErrorCode::InvalidArgument, "binary node '" + name + "' can only be set to 0 or 1");
      nodes[i].mechanism = BernoulliConst{value};
    } else {
      nodes[i].mechanism = GaussianConst{value, 0.0};
    }
    nodes[i].parents.clear();
  }
  return Scm(std::move(nodes), scm.outcome());
}

// ---------------------------------------------------------------------------

std::vector<std::vector<std::size_t>> Dag::children() const {
  std::vector<std::vector<std::size_t>> ch(parents.size());
  for (std::size_t v = 0; v < parents.size(); ++v)
    for (auto p : parents[v]) ch[p].push_back(v);
  return ch;
}

Dag dag_of(const Scm& scm) {
  Dag d;
  for (std::size_t i = 0; i < scm.size(); ++i) d.parents.push_back(scm.parents(i));
  return d;
}

bool d_separated(const Dag& dag, std::size_t x, std::size_t y, const std::vector<std::size_t>& s) {
  const std::size_t m = dag.size();
  if (x >= m || y >= m) throw Error(ErrorCode::UnknownNode, "node index out of range");
  if (x == y) throw Error(ErrorCode::InvalidArgument, "d-separation query needs distinct nodes");
  std::vector<char> in_s(m, 0), anc(m, 0);
  for (auto v : s) {
    if (v >= m) throw Error(ErrorCode::UnknownNode, "node index out of range");
    if (v == x || v == y) throw Error(ErrorCode::InvalidArgument, "queried node appears in the conditioning set");
    in_s[v] = 1;
  }
  // Ancestors of S, S included.
  std::vector<std::size_t> stack(s.begin(), s.end());
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    if (anc[v]) continue;
    anc[v] = 1;
    for (auto p : dag.parents[v]) stack.push_back(p);
  }
  const auto children = dag.children();
  // Direction 0: entered from a child (moving up); 1: entered from a parent.
  std::vector<std::array<char, 2>> visited(m, {0, 0});
  std::deque<std::pair<std::size_t, int>> queue{{x, 0}};
  while (!queue.empty()) {
    const auto [v, dir] = queue.front();
    queue.pop_front();
    if (visited[v][dir]) continue;
    visited[v][dir] = 1;
    if (v == y && !in_s[v]) return false;
    if (dir == 0) {
      if (in_s[v]) continue;
      for (auto p : dag.parents[v]) queue.emplace_back(p, 0);
      for (auto c : children[v]) queue.emplace_back(c, 1);
    } else {
      if (!in_s[v])
        for (auto c : children[v]) queue.emplace_back(c, 1);
      if (anc[v])
        for (auto p : dag.parents[v]) queue.emplace_back(p, 0);
    }
  }
  return true;
}

bool d_separated(const Scm& scm, std::string_view x, std::string_view y, const std::vector<std::string>& s) {
  std::vector<std::size_t> idx;
  for (const auto& name : s) idx.push_back(scm.index_of(name));
  return d_separated(dag_of(scm), scm.index_of(x), scm.index_of(y), idx);
}

// ---------------------------------------------------------------------------

namespace {

kernels::ExactCondition compile_condition(const Scm& original, const Scm& mutilated, const InterventionSpec& spec,
                                          const Instance& condition) {
  kernels::ExactCondition out;
  for (const auto& [name, value] : condition.values()) {
    const std::size_t i = original.index_of(name);
    if (!original.node(i).observed)
      throw Error(ErrorCode::InvalidArgument, "cannot condition on unobserved node '" + name + "'");
    if (!original.is_binary(i) && !spec.contains(name))
      throw Error(ErrorCode::NotSupported, "exact-match conditioning needs a binary node, got '" + name + "'");
    out.emplace_back(mutilated.position(i), value);
  }
  return out;
}

McEstimate conditional(const Scm& scm, const InterventionSpec& spec, const Instance& condition,
                       const kernels::Statistic& statistic, std::size_t n_mc, std::uint64_t seed) {
  if (n_mc == 0) throw Error(ErrorCode::InvalidArgument, "n_mc must be at least 1");
  const Scm mut = mutilate(scm, spec);
  const auto cond = compile_condition(scm, mut, spec, condition);
  const auto mom =
      kernels::parallel::conditional_moments(mut.compiled(), cond, mut.position(mut.outcome_index()), statistic, n_mc, seed);
  if (mom.count == 0) throw Error(ErrorCode::EmptySupport, "no Monte Carlo draw matches the condition");
  return {mom.mean(), mom.count > 1 ? mom.std_error() : 0.0, mom.count, false};
}

kernels::Statistic outcome_statistic(const std::optional<double>& threshold) {
  if (!threshold) return [](double y) { return y; };
  const double t = *threshold;
  return [t](double y) { return y > t ? 1.0 : 0.0; };
}

// Does a directed path feature -> ... -> outcome exist that avoids `blocked`
// and is not the direct edge?
bool has_indirect_path(const Scm& scm, std::size_t feature, const std::set<std::size_t>& blocked) {
  const std::size_t y = scm.outcome_index();
  std::vector<char> seen(scm.size(), 0);
  std::vector<std::size_t> stack;
  for (auto c : scm.children(feature))
    if (c != y && !blocked.contains(c)) stack.push_back(c);
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    if (seen[v]) continue;
    seen[v] = 1;
    for (auto c : scm.children(v)) {
      if (c == y) return true;
      if (!blocked.contains(c)) stack.push_back(c);
    }
  }
  return false;
}

}  // namespace

McEstimate interventional_mean(const Scm& scm, const InterventionSpec& spec, const Instance& condition,
                               std::size_t n_mc, std::uint64_t seed) {
  return conditional(scm, spec, condition, [](double y) { return y; }, n_mc, seed);
}

McEstimate interventional_prob(const Scm& scm, const InterventionSpec& spec, const Instance& condition,
                               const std::function<bool(double)>& event, std::size_t n_mc, std::uint64_t seed) {
  return conditional(scm, spec, condition, [&event](double y) { return event(y) ? 1.0 : 0.0; }, n_mc, seed);
}

McEstimate true_cde(const Scm& scm, std::string_view feature, const Instance& context, double treated, double control,
                    const OracleOptions& options) {
  const std::size_t f = scm.index_of(feature);
  const std::size_t y = scm.outcome_index();
  if (f == y) throw Error(ErrorCode::InvalidArgument, "feature must differ from the outcome");
  if (!scm.node(f).observed)
    throw Error(ErrorCode::InvalidArgument, "feature '" + std::string(feature) + "' is unobserved");

  InterventionSpec spec;
  std::set<std::size_t> blocked;
  for (const auto& [name, value] : context.values()) {
    const std::size_t i = scm.index_of(name);
    if (i == f || i == y) continue;
    spec[name] = value;
    blocked.insert(i);
  }

  const auto& ypar = scm.parents(y);
  const auto slot = std::find(ypar.begin(), ypar.end(), f);
  const bool direct = slot != ypar.end();
  const bool indirect = has_indirect_path(scm, f, blocked);
  if (!direct && !indirect) return {0.0, 0.0, 0, true};

  if (const auto* lin = std::get_if<LinearGaussian>(&scm.node(y).mechanism); lin && !indirect) {
    const double coef = lin->coefficients[static_cast<std::size_t>(slot - ypar.begin())];
    if (!options.threshold) return {coef * (treated - control), 0.0, 0, true};
    bool all_fixed = true;
    double base = lin->intercept;
    for (std::size_t k = 0; k < ypar.size(); ++k) {
      if (ypar[k] == f) continue;
      auto it = spec.find(scm.node(ypar[k]).name);
      if (it == spec.end()) {
        all_fixed = false;
        break;
      }
      base += lin->coefficients[k] * it->second;
    }
    if (all_fixed) {
      const double t = *options.threshold;
      auto exceed = [&](double mu) {
        if (lin->noise_sd == 0.0) return mu > t ? 1.0 : 0.0;
        return 1.0 - stats::normal_cdf((t - mu) / lin->noise_sd);
      };
      return {exceed(base + coef * treated) - exceed(base + coef * control), 0.0, 0, true};
    }
  }

  if (options.n_mc == 0) throw Error(ErrorCode::InvalidArgument, "n_mc must be at least 1");
  InterventionSpec sa = spec, sb = spec;
  sa[std::string(feature)] = control;
  sb[std::string(feature)] = treated;
  const Scm a = mutilate(scm, sa);
  const Scm b = mutilate(scm, sb);
  const auto mom = kernels::parallel::paired_moments(a.compiled(), b.compiled(), a.position(y),
                                                     outcome_statistic(options.threshold), options.n_mc, options.seed);
  return {mom.mean(), mom.std_error(), mom.count, false};
}

McEstimate true_cate(const Scm& scm, std::string_view feature, const Instance& condition, double treated,
                     double control, const OracleOptions& options) {
  const std::size_t f = scm.index_of(feature);
  if (f == scm.outcome_index()) throw Error(ErrorCode::InvalidArgument, "feature must differ from the outcome");
  if (condition.contains(feature))
    throw Error(ErrorCode::InvalidArgument, "condition must not include the treatment");
  const auto stat = outcome_statistic(options.threshold);
  const auto t = conditional(scm, {{std::string(feature), treated}}, condition, stat, options.n_mc, options.seed);
  const auto c = conditional(scm, {{std::string(feature), control}}, condition, stat, options.n_mc, options.seed);
  return {t.value - c.value, std::hypot(t.std_error, c.std_error), std::min(t.support, c.support), false};
}

std::vector<double> enumerate_joint(const Scm& scm) {
  const std::size_t m = scm.size();
  if (m > 24) throw Error(ErrorCode::NotSupported, "joint enumeration limited to 24 nodes");
  for (std::size_t i = 0; i < m; ++i)
    if (!scm.is_binary(i))
      throw Error(ErrorCode::NotSupported, "joint enumeration needs Bernoulli mechanisms, node '" +
                                               scm.node(i).name + "' is not");
  std::vector<double> joint(std::size_t{1} << m);
  std::vector<int> value(m);
  for (std::size_t mask = 0; mask < joint.size(); ++mask) {
    for (std::size_t i = 0; i < m; ++i) value[i] = static_cast<int>((mask >> i) & 1U);
    double p = 1.0;
    for (std::size_t i = 0; i < m && p > 0.0; ++i) {
      const double p1 = bernoulli_p1(scm.node(i).mechanism, scm.node(i), scm.parents(i), value);
      p *= value[i] ? p1 : 1.0 - p1;
    }
    joint[mask] = p;
  }
  return joint;
}

// ---------------------------------------------------------------------------

namespace {

ScmNode sigmoid_of(std::string name, std::vector<std::string> factors) {
  return {std::move(name), factors, LogisticBernoulli{0.0, {{1.0, factors}}}, true};
}

ScmNode latent_normal(std::string name) { return {std::move(name), {}, GaussianConst{0.0, 1.0}, false}; }

ScmNode g_outcome() {
  return {"Y", {"X1", "X2", "X3", "X4"}, LinearGaussian{1.0, {1.5, 1.5, 1.5, 1.5}, 1.0}, true};
}

}  // namespace

Scm make_g1() {
  return Scm({latent_normal("U"), sigmoid_of("X1", {"U"}), sigmoid_of("X2", {"U"}), sigmoid_of("X3", {"U"}),
              sigmoid_of("X4", {"U"}), sigmoid_of("X5", {"U"}), g_outcome()});
}

Scm make_g2() {
  return Scm({latent_normal("U"), sigmoid_of("X1", {"U"}), sigmoid_of("X2", {"U", "X1"}),
              sigmoid_of("X3", {"U", "X2", "X4"}), sigmoid_of("X4", {"U"}), sigmoid_of("X5", {"U"}), g_outcome()});
}

Scm make_wine(int env) {
  if (env != 0 && env != 1) throw Error(ErrorCode::InvalidArgument, "environment must be 0 or 1");
  return Scm({
      latent_normal("U1"),
      {"U2", {}, BernoulliConst{static_cast<double>(env)}, false},
      sigmoid_of("X1", {"U1"}),
      sigmoid_of("X2", {"U1"}),
      sigmoid_of("X3", {"U1"}),
      {"Y", {"X1", "X2", "X3"}, LinearGaussian{1.0, {10.0, 10.0, 10.0}, 1.0}, true},
      {"P", {"Y", "U2"}, LinearGaussian{1.0, {0.8, 2.0}, 1.0}, true},
  });
}

Scm make_two_parent(TwoParentLayout layout, bool binary_outcome) {
  // Root ~ Bernoulli(0.5) and child ~ Bernoulli(sigmoid(-1 + 2 root)). The
  // child is then also Bernoulli(0.5) with the same conditional in reverse,
  // so both layouts share one joint over (X1, X2).
  auto root = [](std::string name) { return ScmNode{std::move(name), {}, LogisticBernoulli{0.0, {}}, true}; };
  auto child = [](std::string name, std::string parent) {
    return ScmNode{std::move(name), {parent}, LogisticBernoulli{-1.0, {{2.0, {parent}}}}, true};
  };
  ScmNode y = binary_outcome
                  ? ScmNode{"Y", {"X1", "X2"}, LogisticBernoulli{-1.0, {{2.0, {"X1"}}, {1.0, {"X2"}}}}, true}
                  : ScmNode{"Y", {"X1", "X2"}, LinearGaussian{1.0, {1.5, 1.0}, 1.0}, true};
  if (layout == TwoParentLayout::X2CausesX1) return Scm({child("X1", "X2"), root("X2"), y});
  return Scm({root("X1"), child("X2", "X1"), y});
}

Scm make_named(std::string_view id) {
  if (id == "g1") return make_g1();
  if (id == "g2") return make_g2();
  if (id == "wine0") return make_wine(0);
  if (id == "wine1") return make_wine(1);
  if (id == "fig1a") return make_two_parent(TwoParentLayout::X2CausesX1);
  if (id == "fig1b") return make_two_parent(TwoParentLayout::X1CausesX2);
  throw Error(ErrorCode::InvalidArgument, "unknown SCM id '" + std::string(id) + "'");
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const Scm& scm) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : scm.nodes()) {
    nlohmann::json mech = std::visit(
        Overloaded{
            [](const LinearGaussian& m) {
              return nlohmann::json{{"type", "linear_gaussian"},
                                    {"intercept", m.intercept},
                                    {"coefficients", m.coefficients},
                                    {"noise_sd", m.noise_sd}};
            },
            [](const LogisticBernoulli& m) {
              nlohmann::json terms = nlohmann::json::array();
              for (const auto& t : m.terms) terms.push_back({{"coefficient", t.coefficient}, {"factors", t.factors}});
              return nlohmann::json{{"type", "logistic_bernoulli"}, {"intercept", m.intercept}, {"terms", terms}};
            },
            [](const BernoulliConst& m) { return nlohmann::json{{"type", "bernoulli_const"}, {"p", m.p}}; },
            [](const GaussianConst& m) {
              return nlohmann::json{{"type", "gaussian_const"}, {"mean", m.mean}, {"sd", m.sd}};
            },
        },
        n.mechanism);
    nodes.push_back({{"name", n.name}, {"parents", n.parents}, {"observed", n.observed}, {"mechanism", mech}});
  }
  return {{"schema_version", kScmSchemaVersion}, {"outcome", scm.outcome()}, {"nodes", nodes}};
}

Scm scm_from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kScmSchemaVersion)
      throw Error(ErrorCode::SchemaVersionMismatch, "SCM schema_version " + std::to_string(version) +
                                                        " is not supported (expected " +
                                                        std::to_string(kScmSchemaVersion) + ")");
    std::vector<ScmNode> nodes;
    for (const auto& jn : j.at("nodes")) {
      ScmNode n;
      n.name = jn.at("name").get<std::string>();
      n.parents = jn.value("parents", std::vector<std::string>{});
      n.observed = jn.value("observed", true);
      const auto& jm = jn.at("mechanism");
      const auto type = jm.at("type").get<std::string>();
      if (type == "linear_gaussian") {
        n.mechanism = LinearGaussian{jm.value("intercept", 0.0), jm.value("coefficients", std::vector<double>{}),
                                     jm.value("noise_sd", 1.0)};
      } else if (type == "logistic_bernoulli") {
        LogisticBernoulli m{jm.value("intercept", 0.0), {}};
        for (const auto& jt : jm.value("terms", nlohmann::json::array()))
          m.terms.push_back({jt.value("coefficient", 1.0), jt.value("factors", std::vector<std::string>{})});
        n.mechanism = std::move(m);
      } else if (type == "bernoulli_const") {
        n.mechanism = BernoulliConst{jm.at("p").get<double>()};
      } else if (type == "gaussian_const") {
        n.mechanism = GaussianConst{jm.value("mean", 0.0), jm.value("sd", 0.0)};
      } else {
        throw Error(ErrorCode::CorruptFile, "unknown mechanism type '" + type + "'");
      }
      nodes.push_back(std::move(n));
    }
    return Scm(std::move(nodes), j.value("outcome", std::string("Y")));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("malformed SCM document: ") + e.what());
  }
}

}  // namespace mode
