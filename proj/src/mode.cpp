#include "mode/mode.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mode/error.hpp"
#include "mode/kernels.hpp"

namespace mode {
namespace {

constexpr const char* kExcludedProvenance = "excluded by discovery";

std::size_t feature_index(const TrainedModel& model, std::string_view feature) {
  const auto& fs = model.features();
  for (std::size_t i = 0; i < fs.size(); ++i)
    if (fs[i].name == feature) return i;
  throw Error(ErrorCode::UnknownFeature, "model has no feature '" + std::string(feature) + "'");
}

void check_binary_value(const FeatureInfo& f, double v) {
  if (f.type == ColumnType::Binary && v != 0.0 && v != 1.0)
    throw Error(ErrorCode::InvalidArgument, "binary feature '" + f.name + "' must be 0 or 1");
}

// CDE of feature i at x, given the model output at x.
CdeEstimate cde_at(const TrainedModel& model, std::vector<double> x, std::size_t i, double base,
                   const WhatIfOptions& options) {
  const auto& f = model.features()[i];
  CdeEstimate e;
  e.feature = f.name;
  e.control = x[i];
  if (f.type == ColumnType::Binary) {
    check_binary_value(f, x[i]);
    e.treated = 1.0 - x[i];
  } else {
    const auto it = options.delta_overrides.find(f.name);
    e.treated = x[i] + (it != options.delta_overrides.end() ? it->second : options.delta);
  }
  x[i] = e.treated;
  e.new_prediction = model_output(model, x, options);
  e.cde = e.new_prediction - base;
  return e;
}

std::string prediction_kind(const TrainedModel& model, const WhatIfOptions& options) {
  if (model.outcome_kind() == OutcomeKind::Binary) return "probability";
  return options.exceedance_threshold ? "exceedance" : "value";
}

std::optional<std::string> class_label(const TrainedModel* model, bool binary, const WhatIfOptions& options) {
  if (binary) return options.class_label.empty() ? std::to_string(options.class_of_interest) : options.class_label;
  if (options.exceedance_threshold) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", *options.exceedance_threshold);
    return (model ? model->outcome() : std::string("Y")) + " > " + buf;
  }
  return std::nullopt;
}

}  // namespace

void WhatIfOptions::validate() const {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (!std::isfinite(delta)) throw Error(ErrorCode::InvalidArgument, "delta must be finite");
  for (const auto& [name, d] : delta_overrides)
    if (!std::isfinite(d)) throw Error(ErrorCode::InvalidArgument, "delta for '" + name + "' must be finite");
  if (class_of_interest != 0 && class_of_interest != 1)
    throw Error(ErrorCode::InvalidArgument, "class of interest must be 0 or 1");
  if (exceedance_threshold && !std::isfinite(*exceedance_threshold))
    throw Error(ErrorCode::InvalidArgument, "exceedance threshold must be finite");
}

double model_output(const TrainedModel& model, std::span<const double> x, const WhatIfOptions& options) {
  if (model.outcome_kind() == OutcomeKind::Binary) {
    if (options.exceedance_threshold)
      throw Error(ErrorCode::NotSupported, "exceedance reporting applies to continuous outcomes only");
    const double p = model.evaluate(x);
    return options.class_of_interest == 1 ? p : 1.0 - p;
  }
  if (options.exceedance_threshold) return model.exceedance(x, *options.exceedance_threshold);
  return model.evaluate(x);
}

CdeEstimate estimate_cde(const TrainedModel& model, const Instance& instance, std::string_view feature,
                         const WhatIfOptions& options) {
  options.validate();
  const std::size_t i = feature_index(model, feature);
  const auto x = model.vectorize(instance);
  return cde_at(model, x, i, model_output(model, x, options), options);
}

WhatIfReport what_if(const TrainedModel& model, const Instance& instance, const WhatIfOptions& options) {
  options.validate();
  const auto x = model.vectorize(instance);
  WhatIfReport r;
  r.instance = instance;
  r.predicted = model_output(model, x, options);
  r.prediction_kind = prediction_kind(model, options);
  r.class_of_interest = class_label(&model, model.outcome_kind() == OutcomeKind::Binary, options);
  r.parents = model.feature_names();
  r.excluded = options.excluded;
  r.model_ref = options.model_ref;
  r.warnings = model.warnings();

  const std::size_t m = model.features().size();
  r.ranking.resize(m);
  kernels::for_each_index(
      m, [&](std::size_t i) { r.ranking[i] = cde_at(model, x, i, r.predicted, options); }, kernels::Exec::Parallel);
  // Model features are in column order, so a stable sort breaks ties by
  // column index.
  const auto key = [&](const CdeEstimate& e) { return options.rank_by == RankBy::Signed ? e.cde : std::abs(e.cde); };
  std::stable_sort(r.ranking.begin(), r.ranking.end(),
                   [&](const CdeEstimate& a, const CdeEstimate& b) { return key(a) > key(b); });
  for (std::size_t i = 0; i < m; ++i) r.ranking[i].rank = i + 1;
  r.top_k.assign(r.ranking.begin(), r.ranking.begin() + static_cast<std::ptrdiff_t>(std::min(options.k, m)));
  return r;
}

InterventionResult apply_intervention(const TrainedModel& model, const Instance& instance, std::string_view feature,
                                      double new_value, const WhatIfOptions& options) {
  options.validate();
  const std::size_t i = feature_index(model, feature);
  check_binary_value(model.features()[i], new_value);
  if (!std::isfinite(new_value)) throw Error(ErrorCode::InvalidArgument, "intervention value must be finite");
  Instance next = instance;
  next.set(std::string(feature), new_value);
  InterventionResult out;
  out.report = what_if(model, next, options);
  out.new_prediction = out.report.predicted;
  return out;
}

PreparedData prepare_data(const DataTable& table, const std::optional<std::string>& positive_label) {
  DataTable encoded = one_hot_encode(table);
  const auto& y = encoded.outcome_column();
  if (y.kind.type != ColumnType::Categorical) {
    if (positive_label && *positive_label != "1")
      throw Error(ErrorCode::InvalidArgument, "a positive label only applies to categorical outcomes");
    return {std::move(encoded), std::nullopt};
  }
  const auto& levels = y.kind.levels;
  if (levels.size() != 2)
    throw Error(ErrorCode::IncompatibleOutcome, "categorical outcome '" + y.name + "' has " + std::to_string(levels.size()) +
                                                    " levels; only two-level outcomes are supported");
  const std::string label = positive_label.value_or(levels[1]);
  const auto it = std::find(levels.begin(), levels.end(), label);
  if (it == levels.end()) throw Error(ErrorCode::InvalidArgument, "outcome has no level '" + label + "'");
  const double code = static_cast<double>(it - levels.begin());
  std::vector<Column> cols = encoded.columns();
  auto& out = cols[encoded.outcome_index()];
  for (double& v : out.values) v = v == code ? 1.0 : 0.0;
  out.kind = ColumnKind::binary();
  return {DataTable(std::move(cols), encoded.outcome()), label};
}

ModeResult run_mode(const DataTable& table, const Instance& instance, const ModeOptions& options) {
  options.whatif.validate();
  options.spec.validate();
  const auto prepared = prepare_data(table);
  const DataTable& data = prepared.table;
  WhatIfOptions wopts = options.whatif;
  if (prepared.positive_label && wopts.class_label.empty())
    wopts.class_label = wopts.class_of_interest == 1 ? *prepared.positive_label : "not " + *prepared.positive_label;

  ModeResult result;
  if (options.all_features) result.parents.parents = data.feature_names();
  else result.parents = find_parents(data, options.discovery);
  for (const auto& f : data.feature_names())
    if (std::find(result.parents.parents.begin(), result.parents.parents.end(), f) == result.parents.parents.end())
      wopts.excluded.push_back(f);

  if (result.parents.parents.empty()) {
    // Best constant model: the outcome mean.
    const auto& y = data.outcome_column();
    double mean = 0.0;
    for (double v : y.values) mean += v;
    mean /= static_cast<double>(y.values.size());
    const bool binary = y.kind.type == ColumnType::Binary;
    WhatIfReport& r = result.report;
    r.instance = instance;
    r.predicted = binary && wopts.class_of_interest == 0 ? 1.0 - mean : mean;
    r.prediction_kind = binary ? "probability" : "value";
    r.class_of_interest = class_label(nullptr, binary, wopts);
    r.excluded = wopts.excluded;
    r.model_ref = wopts.model_ref;
    r.warnings.push_back("empty parent set: constant prediction from the outcome mean");
    return result;
  }

  const DataTable projected = project(data, result.parents.parents);
  result.model = train(options.spec, projected);
  if (wopts.model_ref.empty()) wopts.model_ref = model_fingerprint(*result.model);
  result.report = what_if(*result.model, instance, wopts);
  return result;
}

std::string model_fingerprint(const TrainedModel& model) {
  const std::string text = to_json(model).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json to_json(const CdeEstimate& e) {
  return {{"feature", e.feature},       {"control", e.control}, {"treated", e.treated},
          {"cde", e.cde},               {"rank", e.rank},       {"new_prediction", e.new_prediction}};
}

nlohmann::json to_json(const Instance& instance) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : instance.values()) j[k] = v;
  return j;
}

Instance instance_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "instance must be a JSON object of name -> number");
  Instance out;
  for (const auto& [k, v] : j.items()) {
    if (v.is_boolean()) out.set(k, v.get<bool>() ? 1.0 : 0.0);
    else if (v.is_number()) out.set(k, v.get<double>());
    else throw Error(ErrorCode::InvalidArgument, "instance value for '" + k + "' is not a number");
  }
  return out;
}

nlohmann::json to_json(const WhatIfReport& r) {
  nlohmann::json entries = nlohmann::json::array(), ranking = nlohmann::json::array(), excluded = nlohmann::json::array();
  for (const auto& e : r.top_k) entries.push_back(to_json(e));
  for (const auto& e : r.ranking) ranking.push_back(to_json(e));
  for (const auto& f : r.excluded) excluded.push_back({{"feature", f}, {"cde", 0.0}, {"provenance", kExcludedProvenance}});
  return {{"instance", to_json(r.instance)},
          {"prediction", r.predicted},
          {"prediction_kind", r.prediction_kind},
          {"class_of_interest", r.class_of_interest ? nlohmann::json(*r.class_of_interest) : nlohmann::json(nullptr)},
          {"entries", std::move(entries)},
          {"ranking", std::move(ranking)},
          {"parents", r.parents},
          {"excluded", std::move(excluded)},
          {"model_ref", r.model_ref},
          {"warnings", r.warnings}};
}

}  // namespace mode
