#include "mode/bundle.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "mode/error.hpp"

namespace mode {

FitResult fit_bundle(const DataTable& raw, const FitOptions& options) {
  options.spec.validate();
  const auto prepared = prepare_data(raw, options.positive_label);
  const DataTable& data = prepared.table;
  FitResult out{{}, {}};
  if (options.all_features) out.parents.parents = data.feature_names();
  else out.parents = find_parents(data, options.discovery);
  if (out.parents.parents.empty())
    throw Error(ErrorCode::EmptyFeatureSet, "discovery found no parents of '" + data.outcome() +
                                                "'; raise alpha or train on all features");
  for (const auto& f : data.feature_names())
    if (std::find(out.parents.parents.begin(), out.parents.parents.end(), f) == out.parents.parents.end())
      out.bundle.excluded.push_back(f);
  out.bundle.model = train(options.spec, project(data, out.parents.parents));
  if (prepared.positive_label) {
    const auto& levels = raw.outcome_column().kind.levels;
    const auto neg = levels[0] == *prepared.positive_label ? levels[1] : levels[0];
    out.bundle.outcome_labels = std::make_pair(neg, *prepared.positive_label);
  }
  return out;
}

int class_code(const ModelBundle& bundle, std::string_view label) {
  if (bundle.model.outcome_kind() != OutcomeKind::Binary)
    throw Error(ErrorCode::InvalidArgument, "a class of interest only applies to binary outcomes");
  if (bundle.outcome_labels) {
    if (label == bundle.outcome_labels->first) return 0;
    if (label == bundle.outcome_labels->second) return 1;
  }
  if (label == "0") return 0;
  if (label == "1") return 1;
  throw Error(ErrorCode::InvalidArgument, "unknown class label '" + std::string(label) + "'");
}

void check_instance(const ModelBundle& bundle, const Instance& instance) {
  const auto names = bundle.model.feature_names();
  for (const auto& [k, v] : instance.values())
    if (std::find(names.begin(), names.end(), k) == names.end() &&
        std::find(bundle.excluded.begin(), bundle.excluded.end(), k) == bundle.excluded.end())
      throw Error(ErrorCode::UnknownFeature, "instance has unknown feature '" + k + "'");
  for (const auto& n : names)
    if (!instance.contains(n)) throw Error(ErrorCode::MissingFeature, "instance is missing feature '" + n + "'");
}

WhatIfOptions whatif_defaults(const ModelBundle& bundle, int class_of_interest) {
  WhatIfOptions o;
  o.class_of_interest = class_of_interest;
  if (bundle.outcome_labels)
    o.class_label = class_of_interest == 1 ? bundle.outcome_labels->second : bundle.outcome_labels->first;
  o.excluded = bundle.excluded;
  o.model_ref = model_fingerprint(bundle.model);
  return o;
}

nlohmann::json to_json(const ModelBundle& bundle) {
  nlohmann::json j = to_json(bundle.model);
  nlohmann::json pipeline{{"excluded", bundle.excluded}, {"outcome_labels", nullptr}};
  if (bundle.outcome_labels) pipeline["outcome_labels"] = {bundle.outcome_labels->first, bundle.outcome_labels->second};
  j["pipeline"] = std::move(pipeline);
  return j;
}

ModelBundle bundle_from_json(const nlohmann::json& j) {
  ModelBundle b{model_from_json(j), {}, std::nullopt};
  if (!j.contains("pipeline")) return b;
  try {
    const auto& p = j.at("pipeline");
    b.excluded = p.at("excluded").get<std::vector<std::string>>();
    const auto& labels = p.at("outcome_labels");
    if (!labels.is_null()) {
      const auto v = labels.get<std::vector<std::string>>();
      if (v.size() != 2) throw Error(ErrorCode::CorruptFile, "outcome_labels needs two entries");
      b.outcome_labels = std::make_pair(v[0], v[1]);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("malformed pipeline block: ") + e.what());
  }
  return b;
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << to_json(bundle).dump() << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
  return bundle_from_json(j);
}

}  // namespace mode
