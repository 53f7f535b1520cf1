#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mode/citest.hpp"
#include "mode/dataset.hpp"
#include "mode/scm.hpp"

namespace mode {

/// Conditional independence oracle over column indices of one table.
class IndependenceTest {
 public:
  virtual ~IndependenceTest() = default;
  virtual CiResult test(std::size_t x, std::size_t y, std::span<const std::size_t> s, double alpha) const = 0;
};

/// Finite-sample tests (G test or Fisher z, chosen per call).
class DataIndependenceTest final : public IndependenceTest {
 public:
  explicit DataIndependenceTest(const DataTable& table, CiMethod method = CiMethod::Auto)
      : tester_(table), method_(method) {}
  CiResult test(std::size_t x, std::size_t y, std::span<const std::size_t> s, double alpha) const override {
    return tester_.test(x, y, s, alpha, method_);
  }

 private:
  CiTester tester_;
  CiMethod method_;
};

/// Exact answers from d-separation in a known DAG. column_to_node maps each
/// table column to its DAG node.
class DSeparationOracle final : public IndependenceTest {
 public:
  DSeparationOracle(Dag dag, std::vector<std::size_t> column_to_node)
      : dag_(std::move(dag)), node_(std::move(column_to_node)) {}
  /// Columns matched to SCM nodes by name.
  DSeparationOracle(const Scm& scm, const DataTable& table);

  CiResult test(std::size_t x, std::size_t y, std::span<const std::size_t> s, double alpha) const override;

 private:
  Dag dag_;
  std::vector<std::size_t> node_;
};

struct TraceRecord {
  enum class Phase { Marginal, Subset, Markov };
  Phase phase = Phase::Marginal;
  std::string feature;
  std::vector<std::string> conditioning;
  double statistic = 0.0;
  double p_value = 1.0;
  bool independent = false;
};

std::string_view to_string(TraceRecord::Phase phase);

struct ParentSet {
  /// In table column order.
  std::vector<std::string> parents;
  std::vector<TraceRecord> trace;
};

struct DiscoveryOptions {
  double alpha = 0.05;
  std::size_t max_cond = 3;
  /// Re-test every survivor against all other survivors when that set is
  /// larger than max_cond.
  bool markov_pass = true;
};

/// Local search for the parents-and-children of the outcome: marginal screen,
/// then elimination by conditioning subsets of growing size.
ParentSet find_parents(const DataTable& table, const IndependenceTest& test, const DiscoveryOptions& options = {});
ParentSet find_parents(const DataTable& table, const DiscoveryOptions& options = {});

nlohmann::json to_json(const ParentSet& parents);

}  // namespace mode
