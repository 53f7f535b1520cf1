#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mode/dataset.hpp"
#include "mode/kernels.hpp"

namespace mode {

struct LinearGaussian {
  double intercept = 0.0;
  std::vector<double> coefficients;  // one per parent, in parent order
  double noise_sd = 1.0;
};

/// One summand of a logistic weight: coefficient times the product of the
/// named parents. An empty factor list is a constant.
struct LogisticTerm {
  double coefficient = 1.0;
  std::vector<std::string> factors;
};

/// Bernoulli(sigmoid(intercept + sum of terms)).
struct LogisticBernoulli {
  double intercept = 0.0;
  std::vector<LogisticTerm> terms;
};

struct BernoulliConst {
  double p = 0.5;
};

struct GaussianConst {
  double mean = 0.0;
  double sd = 0.0;
};

using Mechanism = std::variant<LinearGaussian, LogisticBernoulli, BernoulliConst, GaussianConst>;

bool is_binary(const Mechanism& m);

struct ScmNode {
  std::string name;
  std::vector<std::string> parents;
  Mechanism mechanism;
  bool observed = true;
};

/// node name -> forced value
using InterventionSpec = std::map<std::string, double, std::less<>>;

/// Acyclic structural causal model. Nodes may be declared in any order that
/// admits a topological sort; sampled tables keep declaration order.
class Scm {
 public:
  Scm(std::vector<ScmNode> nodes, std::string outcome = "Y");

  const std::vector<ScmNode>& nodes() const noexcept { return nodes_; }
  const ScmNode& node(std::size_t i) const { return nodes_.at(i); }
  std::size_t size() const noexcept { return nodes_.size(); }
  const std::string& outcome() const noexcept { return outcome_; }
  std::size_t outcome_index() const noexcept { return outcome_index_; }

  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws UnknownNode.
  std::size_t index_of(std::string_view name) const;

  const std::vector<std::size_t>& parents(std::size_t i) const { return parent_idx_.at(i); }
  const std::vector<std::size_t>& children(std::size_t i) const { return child_idx_.at(i); }
  bool is_binary(std::size_t i) const { return mode::is_binary(nodes_.at(i).mechanism); }

  std::vector<std::string> observed_names() const;
  std::vector<std::string> observed_feature_names() const;

  /// Declaration indices in topological order.
  const std::vector<std::size_t>& topological_order() const noexcept { return topo_; }
  /// Flattened form indexed by topological position.
  const kernels::CompiledScm& compiled() const noexcept { return compiled_; }
  std::uint32_t position(std::size_t i) const { return static_cast<std::uint32_t>(pos_.at(i)); }

 private:
  std::vector<ScmNode> nodes_;
  std::string outcome_;
  std::size_t outcome_index_ = 0;
  std::vector<std::vector<std::size_t>> parent_idx_;
  std::vector<std::vector<std::size_t>> child_idx_;
  std::vector<std::size_t> topo_;
  std::vector<std::size_t> pos_;
  kernels::CompiledScm compiled_;
};

/// Observed columns of n ancestral draws. Bernoulli nodes become Binary
/// columns, everything else Continuous.
DataTable sample(const Scm& scm, std::size_t n, std::uint64_t seed,
                 kernels::Exec exec = kernels::Exec::Parallel);

/// Every node, declaration order: result[node][row].
kernels::NodeMatrix sample_all(const Scm& scm, std::size_t n, std::uint64_t seed,
                               kernels::Exec exec = kernels::Exec::Parallel);

Scm mutilate(const Scm& scm, const InterventionSpec& spec);

/// Plain parent-list DAG used by the graph queries.
struct Dag {
  std::vector<std::vector<std::size_t>> parents;

  std::size_t size() const { return parents.size(); }
  std::vector<std::vector<std::size_t>> children() const;
};

Dag dag_of(const Scm& scm);

/// Reachability (Bayes-ball) test for x _||_ y | s.
bool d_separated(const Dag& dag, std::size_t x, std::size_t y, const std::vector<std::size_t>& s);
bool d_separated(const Scm& scm, std::string_view x, std::string_view y,
                 const std::vector<std::string>& s);

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t support = 0;
  bool exact = false;
};

/// E[Y | do(spec), condition] by rejection on exact matches.
McEstimate interventional_mean(const Scm& scm, const InterventionSpec& spec, const Instance& condition,
                               std::size_t n_mc, std::uint64_t seed);
/// P(event(Y) | do(spec), condition).
McEstimate interventional_prob(const Scm& scm, const InterventionSpec& spec, const Instance& condition,
                               const std::function<bool(double)>& event, std::size_t n_mc,
                               std::uint64_t seed);

struct OracleOptions {
  std::size_t n_mc = 200'000;
  std::uint64_t seed = 0;
  /// When set the effect is on P(Y > threshold) instead of E[Y].
  std::optional<double> threshold;
};

/// E[Y | do(feature=treated), do(context)] - E[Y | do(feature=control), do(context)].
/// Closed form when the only causal route from the feature to a linear
/// Gaussian outcome is the direct edge; paired Monte Carlo otherwise.
McEstimate true_cde(const Scm& scm, std::string_view feature, const Instance& context,
                    double treated, double control, const OracleOptions& options = {});

/// Same contrast with the feature intervened and `condition` only observed.
McEstimate true_cate(const Scm& scm, std::string_view feature, const Instance& condition,
                     double treated, double control, const OracleOptions& options = {});

/// Exact joint over all nodes of an SCM whose mechanisms are all Bernoulli:
/// probability of the assignment whose bit j is the value of node j.
std::vector<double> enumerate_joint(const Scm& scm);

Scm make_g1();
Scm make_g2();
/// env sets the unobserved market flag U2.
Scm make_wine(int env);

enum class TwoParentLayout {
  X2CausesX1,  // X2 -> X1, both -> Y
  X1CausesX2,  // X1 -> X2, both -> Y
};
/// Pair of two-parent SCMs with identical joint distributions that differ only
/// in the direction of the edge between X1 and X2.
Scm make_two_parent(TwoParentLayout layout, bool binary_outcome = true);

/// Looks up "g1", "g2", "wine0", "wine1", "fig1a", "fig1b".
Scm make_named(std::string_view id);

inline constexpr int kScmSchemaVersion = 1;

nlohmann::json to_json(const Scm& scm);
Scm scm_from_json(const nlohmann::json& j);

}  // namespace mode
