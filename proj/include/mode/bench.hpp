#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mode/dataset.hpp"
#include "mode/kernels.hpp"
#include "mode/models.hpp"
#include "mode/scm.hpp"

namespace mode::bench {

enum class Variant { ParentsOnly, AllVariables };
std::string_view to_string(Variant v);

struct BiasRow {
  ModelKind model_kind = ModelKind::LinearRegression;
  std::size_t n = 0;
  Variant variant = Variant::ParentsOnly;
  double mean_abs_bias = 0.0;
  double std_abs_bias = 0.0;
  std::size_t reps = 0;
};

struct RobustRow {
  ModelKind model_kind = ModelKind::LinearRegression;
  Variant variant = Variant::ParentsOnly;
  /// Training and test environment.
  int train_env = 0;
  int test_env = 0;
  double mse_mean = 0.0;
  double mse_std = 0.0;
  double rmse_mean = 0.0;
  double rmse_std = 0.0;
  std::size_t reps = 0;
};

struct BiasConfig {
  std::string scm_id = "g1";
  std::vector<std::size_t> sizes{2000, 20000};
  std::size_t reps = 30;
  std::vector<ModelSpec> specs;
  std::uint64_t seed = 20240917;
  double alpha = 0.05;
  std::size_t max_cond = 3;
};

struct RobustConfig {
  std::size_t n = 10000;
  std::size_t reps = 30;
  std::vector<ModelSpec> specs;
  std::uint64_t seed = 20240917;
  double train_fraction = 0.7;
};

/// LR, DT and RF with default settings and the given seed.
std::vector<ModelSpec> default_specs(std::uint64_t seed);

/// Absolute bias of the CDE of X1, averaged over the observed contexts of the
/// other model features weighted by their support. The ParentsOnly variant
/// uses the discovered parents. One row per (spec, size, variant).
std::vector<BiasRow> bias_experiment(const BiasConfig& config, kernels::Exec exec = kernels::Exec::Parallel);

/// Wine SCM: train in one environment, test in the same or the other one.
/// One row per (spec, variant, environment pair).
std::vector<RobustRow> robustness_experiment(const RobustConfig& config, kernels::Exec exec = kernels::Exec::Parallel);

/// Per-replicate bias of the CDE of X1 for one dataset; exposed for tests.
double cde_bias(const TrainedModel& model, const DataTable& data, const Scm& scm);

enum class Format { Markdown, Csv };

struct ReportOptions {
  Format format = Format::Markdown;
  /// Multiply biases by 100 for display.
  bool scale100 = false;
};

std::string render(const std::vector<BiasRow>& rows, const ReportOptions& options = {});
std::string render(const std::vector<RobustRow>& rows, const ReportOptions& options = {});
/// Throws IoError.
void emit_report(const std::string& text, const std::filesystem::path& path);

/// Missing keys keep their defaults; unknown keys are rejected.
BiasConfig bias_config_from_json(const nlohmann::json& j);
RobustConfig robust_config_from_json(const nlohmann::json& j);

}  // namespace mode::bench
