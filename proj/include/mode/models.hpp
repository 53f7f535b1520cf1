#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mode/dataset.hpp"
#include "mode/kernels.hpp"

namespace mode {

enum class ModelKind { LinearRegression, LogisticRegression, DecisionTree, RandomForest };
enum class OutcomeKind { Binary, Continuous };

/// Short CLI names: lr, logreg, dt, rf.
std::string_view to_string(ModelKind kind);
/// Accepts the short names and the full enumerator names. Throws InvalidArgument.
ModelKind model_kind_from_string(std::string_view text);
std::string_view to_string(OutcomeKind kind);

struct ModelSpec {
  ModelKind kind = ModelKind::RandomForest;
  /// Unlimited when empty.
  std::optional<std::size_t> max_depth;
  std::size_t min_leaf = 1;
  std::size_t n_trees = 500;
  /// Features tried per split. Defaults to ceil(sqrt(m)) for forests and m for
  /// single trees.
  std::optional<std::size_t> max_features;
  /// Newton step scale for logistic regression.
  double learning_rate = 1.0;
  std::size_t max_iters = 100;
  double l2_penalty = 1e-6;
  /// Leaf probability (k1 + 1) / (n + 2) instead of the raw fraction.
  bool laplace = true;
  /// Keep weighted outcome samples in regression leaves so exceedance
  /// probabilities can be read off the tree.
  bool keep_leaf_values = false;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument.
  void validate() const;
};

nlohmann::json to_json(const ModelSpec& spec);
/// Missing keys keep their defaults; unknown keys are rejected.
ModelSpec spec_from_json(const nlohmann::json& j);

struct Tree {
  struct Node {
    /// -1 marks a leaf.
    std::int32_t feature = -1;
    /// Index of the left child; the right child follows it.
    std::int32_t left = -1;
    double threshold = 0.0;
    /// Total bootstrap weight reaching the node.
    double weight = 0.0;
    /// Weighted mean outcome (class-1 fraction for classification).
    double value = 0.0;
  };
  std::vector<Node> nodes;
  /// Per node, sorted (outcome, weight) pairs for leaves when kept.
  std::vector<std::vector<std::pair<double, double>>> leaf_values;

  std::size_t leaf_of(std::span<const double> x) const;
  std::uint64_t structure_hash() const;
};

struct FeatureInfo {
  std::string name;
  ColumnType type = ColumnType::Continuous;
  double min = 0.0;
  double max = 0.0;
};

/// A fitted predictor over a fixed, ordered feature list. Immutable and safe
/// for concurrent prediction.
class TrainedModel {
 public:
  const ModelSpec& spec() const noexcept { return spec_; }
  ModelKind kind() const noexcept { return spec_.kind; }
  OutcomeKind outcome_kind() const noexcept { return outcome_kind_; }
  const std::string& outcome() const noexcept { return outcome_; }
  const std::vector<FeatureInfo>& features() const noexcept { return features_; }
  std::vector<std::string> feature_names() const;
  std::size_t n_train() const noexcept { return n_train_; }
  const std::vector<double>& loss_trace() const noexcept { return loss_trace_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  /// Linear models: intercept followed by one coefficient per feature.
  const std::vector<double>& coefficients() const noexcept { return coefficients_; }
  const std::vector<Tree>& trees() const noexcept { return trees_; }

  /// Feature vector in model order. Throws MissingFeature.
  std::vector<double> vectorize(const Instance& instance) const;
  /// P(Y = 1) for binary outcomes, the regression value otherwise.
  double evaluate(std::span<const double> x) const;
  /// P(Y > threshold) from kept leaf samples. Throws NotSupported.
  double exceedance(std::span<const double> x, double threshold) const;

 private:
  friend TrainedModel train(const ModelSpec&, const DataTable&, kernels::Exec);
  friend TrainedModel model_from_json(const nlohmann::json&);
  friend nlohmann::json to_json(const TrainedModel&);

  double tree_output(const Tree& tree, std::span<const double> x) const;

  ModelSpec spec_;
  OutcomeKind outcome_kind_ = OutcomeKind::Continuous;
  std::string outcome_;
  std::vector<FeatureInfo> features_;
  std::size_t n_train_ = 0;
  std::vector<double> loss_trace_;
  std::vector<std::string> warnings_;
  std::vector<double> coefficients_;
  std::vector<Tree> trees_;
};

/// Fits on every feature column of the table. Categorical features must be
/// one-hot encoded first.
TrainedModel train(const ModelSpec& spec, const DataTable& table,
                   kernels::Exec exec = kernels::Exec::Parallel);

/// Probability of class_of_interest (0 or 1). Throws WrongOutcomeKind.
double predict_proba(const TrainedModel& model, const Instance& instance, int class_of_interest = 1);
/// Throws WrongOutcomeKind.
double predict_value(const TrainedModel& model, const Instance& instance);
/// Whichever of the two applies to the model's outcome.
double predict(const TrainedModel& model, const Instance& instance);
/// One prediction per table row, columns matched by name.
std::vector<double> predict_table(const TrainedModel& model, const DataTable& table,
                                  kernels::Exec exec = kernels::Exec::Parallel);

/// Penalized log-loss of a logistic model with coefficients beta (intercept
/// first) on the table's features; optionally the analytic gradient.
double logistic_objective(const DataTable& table, std::span<const double> beta, double l2,
                          std::vector<double>* gradient = nullptr);

nlohmann::json to_json(const TrainedModel& model);
/// Throws SchemaVersionMismatch or CorruptFile.
TrainedModel model_from_json(const nlohmann::json& j);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace mode
