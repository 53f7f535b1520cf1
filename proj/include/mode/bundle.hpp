#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mode/dataset.hpp"
#include "mode/discovery.hpp"
#include "mode/mode.hpp"
#include "mode/models.hpp"

namespace mode {

/// A trained model plus what the pipeline knew when it was fitted: the
/// features discovery left out and the outcome's class labels.
struct ModelBundle {
  TrainedModel model;
  std::vector<std::string> excluded;
  /// Labels of outcome codes 0 and 1 when the raw outcome was categorical.
  std::optional<std::pair<std::string, std::string>> outcome_labels;
};

struct FitOptions {
  ModelSpec spec;
  DiscoveryOptions discovery;
  bool all_features = false;
  std::optional<std::string> positive_label;
};

struct FitResult {
  ModelBundle bundle;
  ParentSet parents;
};

/// Prepare, discover, project and train. Throws EmptyFeatureSet when
/// discovery keeps nothing.
FitResult fit_bundle(const DataTable& raw, const FitOptions& options);

/// Class code for a label: "0", "1" or one of the outcome labels.
/// Throws InvalidArgument.
int class_code(const ModelBundle& bundle, std::string_view label);

/// Rejects instance keys that are neither model features nor excluded
/// features (UnknownFeature) and model features that are absent
/// (MissingFeature).
void check_instance(const ModelBundle& bundle, const Instance& instance);

/// What-if options carrying the bundle's exclusions, class label and
/// fingerprint.
WhatIfOptions whatif_defaults(const ModelBundle& bundle, int class_of_interest = 1);

nlohmann::json to_json(const ModelBundle& bundle);
/// Throws CorruptFile or SchemaVersionMismatch.
ModelBundle bundle_from_json(const nlohmann::json& j);
/// Throws IoError.
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path);
/// Throws IoError or CorruptFile.
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace mode
