#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mode {

enum class ColumnType { Binary, Continuous, Categorical };

std::string_view to_string(ColumnType type);

struct ColumnKind {
  ColumnType type = ColumnType::Continuous;
  /// Distinct labels in first-appearance order; Categorical only.
  std::vector<std::string> levels;

  static ColumnKind binary() { return {ColumnType::Binary, {}}; }
  static ColumnKind continuous() { return {ColumnType::Continuous, {}}; }
  static ColumnKind categorical(std::vector<std::string> levels);

  bool is_discrete() const { return type != ColumnType::Continuous; }
  /// Number of distinct codes for discrete kinds.
  std::size_t cardinality() const;

  bool operator==(const ColumnKind&) const = default;
};

/// Categorical cells hold the level index as a double.
struct Column {
  std::string name;
  ColumnKind kind;
  std::vector<double> values;
};

/// Columnar observational data with a designated outcome column. Immutable
/// once constructed.
class DataTable {
 public:
  DataTable(std::vector<Column> columns, std::string outcome);

  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_cols() const noexcept { return columns_.size(); }
  const std::string& outcome() const noexcept { return outcome_; }
  std::size_t outcome_index() const noexcept { return outcome_index_; }

  const std::vector<Column>& columns() const noexcept { return columns_; }
  const Column& column(std::size_t index) const { return columns_.at(index); }
  const Column& column(std::string_view name) const;
  const Column& outcome_column() const { return columns_[outcome_index_]; }

  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws UnknownColumn.
  std::size_t index_of(std::string_view name) const;

  /// All non-outcome column names in column order.
  std::vector<std::string> feature_names() const;
  std::vector<std::size_t> feature_indices() const;

  DataTable select_rows(std::span<const std::size_t> rows) const;

 private:
  std::vector<Column> columns_;
  std::string outcome_;
  std::size_t outcome_index_ = 0;
  std::size_t n_rows_ = 0;
};

/// Feature name -> scalar value for one individual.
class Instance {
 public:
  using Map = std::map<std::string, double, std::less<>>;

  Instance() = default;
  Instance(std::initializer_list<Map::value_type> values) : values_(values) {}
  explicit Instance(Map values) : values_(std::move(values)) {}

  void set(std::string name, double value) { values_[std::move(name)] = value; }
  bool contains(std::string_view name) const { return values_.find(name) != values_.end(); }
  /// Throws MissingFeature.
  double at(std::string_view name) const;
  const Map& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  bool operator==(const Instance&) const = default;

 private:
  Map values_;
};

using SchemaHint = std::map<std::string, ColumnKind, std::less<>>;

DataTable parse_csv(std::string_view text, std::string_view outcome, const SchemaHint& hint = {});
DataTable load_csv(const std::filesystem::path& path, std::string_view outcome,
                   const SchemaHint& hint = {});

std::string to_csv(const DataTable& table);
void write_csv(const DataTable& table, const std::filesystem::path& path);

/// Lower of the two middle order statistics for even n.
double lower_median(std::vector<double> values);

DataTable binarize_by_median(const DataTable& table, std::span<const std::string> columns);
DataTable one_hot_encode(const DataTable& table);
DataTable project(const DataTable& table, std::span<const std::string> columns);
std::pair<DataTable, DataTable> split(const DataTable& table, double train_fraction,
                                      std::uint64_t seed);

}  // namespace mode
