#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mode/dataset.hpp"
#include "mode/discovery.hpp"
#include "mode/models.hpp"

namespace mode {

struct CdeEstimate {
  std::string feature;
  /// The instance's current value of the feature.
  double control = 0.0;
  double treated = 0.0;
  double cde = 0.0;
  /// Model output at the treated value.
  double new_prediction = 0.0;
  std::size_t rank = 0;
};

enum class RankBy { Signed, Absolute };

struct WhatIfOptions {
  std::size_t k = 3;
  /// Step for continuous features.
  double delta = 1.0;
  std::map<std::string, double, std::less<>> delta_overrides;
  /// 0 or 1; binary outcomes only.
  int class_of_interest = 1;
  /// Shown in reports; defaults to the class code.
  std::string class_label;
  RankBy rank_by = RankBy::Signed;
  /// Continuous outcome read as P(Y > threshold). Needs a tree model with
  /// kept leaf values.
  std::optional<double> exceedance_threshold;
  /// Features left out by discovery, reported with CDE 0.
  std::vector<std::string> excluded;
  std::string model_ref;

  /// Throws InvalidArgument.
  void validate() const;
};

struct WhatIfReport {
  Instance instance;
  /// Probability of the class of interest, regression value, or exceedance
  /// probability.
  double predicted = 0.0;
  std::string prediction_kind;
  std::optional<std::string> class_of_interest;
  std::vector<CdeEstimate> top_k;
  /// Every model feature, ranked.
  std::vector<CdeEstimate> ranking;
  std::vector<std::string> parents;
  std::vector<std::string> excluded;
  std::string model_ref;
  std::vector<std::string> warnings;
};

/// Outcome the CDE is measured on: class probability, value or exceedance.
double model_output(const TrainedModel& model, std::span<const double> x, const WhatIfOptions& options);

/// Throws UnknownFeature or MissingFeature.
CdeEstimate estimate_cde(const TrainedModel& model, const Instance& instance, std::string_view feature,
                         const WhatIfOptions& options = {});

/// Prediction and ranked CDEs for every model feature at the instance.
WhatIfReport what_if(const TrainedModel& model, const Instance& instance, const WhatIfOptions& options = {});

struct InterventionResult {
  double new_prediction = 0.0;
  WhatIfReport report;
};

InterventionResult apply_intervention(const TrainedModel& model, const Instance& instance, std::string_view feature,
                                      double new_value, const WhatIfOptions& options = {});

/// Data made ready for the pipeline: categorical features one-hot encoded and
/// a two-level categorical outcome mapped to 0/1.
struct PreparedData {
  DataTable table;
  /// Label of outcome code 1 when the outcome was categorical.
  std::optional<std::string> positive_label;
};

/// positive_label picks which level becomes 1; defaults to the second level.
PreparedData prepare_data(const DataTable& table, const std::optional<std::string>& positive_label = std::nullopt);

struct ModeOptions {
  DiscoveryOptions discovery;
  /// Skip discovery and use every feature.
  bool all_features = false;
  ModelSpec spec;
  WhatIfOptions whatif;
};

struct ModeResult {
  ParentSet parents;
  /// Empty when discovery found no parents.
  std::optional<TrainedModel> model;
  WhatIfReport report;
};

/// Discovery, projection, training and the what-if report in one call.
ModeResult run_mode(const DataTable& table, const Instance& instance, const ModeOptions& options = {});

/// Deterministic short fingerprint of a serialized model.
std::string model_fingerprint(const TrainedModel& model);

nlohmann::json to_json(const CdeEstimate& estimate);
nlohmann::json to_json(const WhatIfReport& report);
nlohmann::json to_json(const Instance& instance);
/// Object of name -> number. Throws InvalidArgument.
Instance instance_from_json(const nlohmann::json& j);

}  // namespace mode
