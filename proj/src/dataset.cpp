#include "mode/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "mode/error.hpp"
#include "mode/rng.hpp"

namespace mode {

std::string_view to_string(ColumnType type) {
  switch (type) {
    case ColumnType::Binary: return "binary";
    case ColumnType::Continuous: return "continuous";
    case ColumnType::Categorical: return "categorical";
  }
  return "unknown";
}

ColumnKind ColumnKind::categorical(std::vector<std::string> levels) {
  if (levels.empty()) throw Error(ErrorCode::InvalidArgument, "categorical kind needs at least one level");
  std::set<std::string> seen(levels.begin(), levels.end());
  if (seen.size() != levels.size())
    throw Error(ErrorCode::InvalidArgument, "categorical levels must be distinct");
  return {ColumnType::Categorical, std::move(levels)};
}

std::size_t ColumnKind::cardinality() const {
  switch (type) {
    case ColumnType::Binary: return 2;
    case ColumnType::Categorical: return levels.size();
    case ColumnType::Continuous: return 0;
  }
  return 0;
}

DataTable::DataTable(std::vector<Column> columns, std::string outcome)
    : columns_(std::move(columns)), outcome_(std::move(outcome)) {
  if (columns_.empty()) throw Error(ErrorCode::InvalidArgument, "table needs at least one column");
  n_rows_ = columns_.front().values.size();
  if (n_rows_ == 0) throw Error(ErrorCode::InvalidArgument, "table needs at least one row");
  std::unordered_set<std::string> names;
  for (const auto& col : columns_) {
    if (!names.insert(col.name).second)
      throw Error(ErrorCode::NameCollision, "duplicate column name '" + col.name + "'");
    if (col.values.size() != n_rows_)
      throw Error(ErrorCode::InvalidArgument, "column '" + col.name + "' has a different length");
    for (double v : col.values) {
      if (std::isnan(v)) throw Error(ErrorCode::MissingValue, "column '" + col.name + "' has a missing value");
      if (col.kind.type == ColumnType::Binary && v != 0.0 && v != 1.0)
        throw Error(ErrorCode::InvalidArgument, "binary column '" + col.name + "' holds a value other than 0/1");
      if (col.kind.type == ColumnType::Categorical &&
          (v < 0 || v >= static_cast<double>(col.kind.levels.size()) || v != std::floor(v)))
        throw Error(ErrorCode::InvalidArgument, "categorical column '" + col.name + "' holds an invalid level code");
    }
  }
  auto idx = find(outcome_);
  if (!idx) throw Error(ErrorCode::UnknownOutcomeColumn, "outcome column '" + outcome_ + "' not found");
  outcome_index_ = *idx;
}

const Column& DataTable::column(std::string_view name) const { return columns_[index_of(name)]; }

std::optional<std::size_t> DataTable::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i].name == name) return i;
  return std::nullopt;
}

std::size_t DataTable::index_of(std::string_view name) const {
  auto idx = find(name);
  if (!idx) throw Error(ErrorCode::UnknownColumn, "unknown column '" + std::string(name) + "'");
  return *idx;
}

std::vector<std::string> DataTable::feature_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (i != outcome_index_) out.push_back(columns_[i].name);
  return out;
}

std::vector<std::size_t> DataTable::feature_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (i != outcome_index_) out.push_back(i);
  return out;
}

DataTable DataTable::select_rows(std::span<const std::size_t> rows) const {
  std::vector<Column> out;
  out.reserve(columns_.size());
  for (const auto& col : columns_) {
    Column c{col.name, col.kind, {}};
    c.values.reserve(rows.size());
    for (std::size_t r : rows) c.values.push_back(col.values.at(r));
    out.push_back(std::move(c));
  }
  return DataTable(std::move(out), outcome_);
}

double Instance::at(std::string_view name) const {
  auto it = values_.find(name);
  if (it == values_.end())
    throw Error(ErrorCode::MissingFeature, "instance has no value for feature '" + std::string(name) + "'");
  return it->second;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

struct Record {
  std::vector<std::string> cells;
  std::vector<bool> quoted;
  std::size_t line = 0;
};

// RFC-4180 records; LF or CRLF line endings.
std::vector<Record> tokenize(std::string_view text) {
  std::vector<Record> records;
  Record current;
  std::string cell;
  bool in_quotes = false;
  bool cell_quoted = false;
  std::size_t line = 1;
  current.line = line;
  auto end_cell = [&] {
    current.cells.push_back(std::move(cell));
    current.quoted.push_back(cell_quoted);
    cell.clear();
    cell_quoted = false;
  };
  auto end_record = [&] {
    end_cell();
    bool blank = current.cells.size() == 1 && current.cells[0].empty() && !current.quoted[0];
    if (!blank) records.push_back(std::move(current));
    current = Record{};
    current.line = line;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        cell.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        in_quotes = true;
        cell_quoted = true;
        break;
      case ',':
        end_cell();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        cell.push_back(ch);
        break;
      case '\n':
        ++line;
        end_record();
        break;
      default:
        cell.push_back(ch);
    }
  }
  if (in_quotes) throw Error(ErrorCode::CorruptFile, "unterminated quoted field");
  if (!cell.empty() || cell_quoted || !current.cells.empty()) end_record();
  return records;
}

std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::string where(std::size_t data_row, std::size_t line, const std::string& column) {
  return "row " + std::to_string(data_row) + " (line " + std::to_string(line) + "), column '" +
         column + "'";
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

DataTable parse_csv(std::string_view text, std::string_view outcome, const SchemaHint& hint) {
  auto records = tokenize(text);
  if (records.empty()) throw Error(ErrorCode::CorruptFile, "CSV has no header row");
  const auto& header = records.front().cells;
  const std::size_t arity = header.size();
  if (std::find(header.begin(), header.end(), std::string(outcome)) == header.end())
    throw Error(ErrorCode::UnknownOutcomeColumn, "outcome column '" + std::string(outcome) + "' not in header");
  for (const auto& [name, kind] : hint)
    if (std::find(header.begin(), header.end(), name) == header.end())
      throw Error(ErrorCode::UnknownColumn, "schema hint names unknown column '" + name + "'");

  const std::size_t n = records.size() - 1;
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "CSV has no data rows");
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.cells.size() != arity)
      throw Error(ErrorCode::RaggedRow, "row " + std::to_string(r) + " (line " + std::to_string(rec.line) +
                                            ") has " + std::to_string(rec.cells.size()) + " cells, header has " +
                                            std::to_string(arity));
    for (std::size_t c = 0; c < arity; ++c)
      if (rec.cells[c].empty())
        throw Error(ErrorCode::MissingValue, "missing value at " + where(r, rec.line, header[c]));
  }

  std::vector<Column> columns;
  columns.reserve(arity);
  for (std::size_t c = 0; c < arity; ++c) {
    Column col{header[c], {}, std::vector<double>(n)};
    auto hinted = hint.find(header[c]);
    std::vector<std::optional<double>> numeric(n);
    bool all_numeric = true;
    bool all_binary = true;
    for (std::size_t r = 0; r < n; ++r) {
      const auto& rec = records[r + 1];
      numeric[r] = rec.quoted[c] ? std::nullopt : parse_number(rec.cells[c]);
      if (!numeric[r]) {
        all_numeric = false;
        all_binary = false;
      } else if (*numeric[r] != 0.0 && *numeric[r] != 1.0) {
        all_binary = false;
      }
    }
    ColumnType type = all_binary    ? ColumnType::Binary
                      : all_numeric ? ColumnType::Continuous
                                    : ColumnType::Categorical;
    if (hinted != hint.end()) type = hinted->second.type;

    if (type == ColumnType::Categorical) {
      std::vector<std::string> levels =
          hinted != hint.end() ? hinted->second.levels : std::vector<std::string>{};
      std::map<std::string, std::size_t> index;
      for (std::size_t i = 0; i < levels.size(); ++i) index[levels[i]] = i;
      const bool fixed_levels = !levels.empty();
      for (std::size_t r = 0; r < n; ++r) {
        const auto& label = records[r + 1].cells[c];
        auto it = index.find(label);
        if (it == index.end()) {
          if (fixed_levels)
            throw Error(ErrorCode::InvalidArgument,
                        "label '" + label + "' not among hinted levels at " + where(r + 1, records[r + 1].line, header[c]));
          it = index.emplace(label, levels.size()).first;
          levels.push_back(label);
        }
        col.values[r] = static_cast<double>(it->second);
      }
      col.kind = ColumnKind::categorical(std::move(levels));
    } else {
      for (std::size_t r = 0; r < n; ++r) {
        if (!numeric[r])
          throw Error(ErrorCode::UnparseableNumeric,
                      "cannot parse '" + records[r + 1].cells[c] + "' as a number at " +
                          where(r + 1, records[r + 1].line, header[c]));
        if (type == ColumnType::Binary && *numeric[r] != 0.0 && *numeric[r] != 1.0)
          throw Error(ErrorCode::InvalidArgument,
                      "non-binary value at " + where(r + 1, records[r + 1].line, header[c]));
        col.values[r] = *numeric[r];
      }
      col.kind = type == ColumnType::Binary ? ColumnKind::binary() : ColumnKind::continuous();
    }
    columns.push_back(std::move(col));
  }
  return DataTable(std::move(columns), std::string(outcome));
}

DataTable load_csv(const std::filesystem::path& path, std::string_view outcome, const SchemaHint& hint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), outcome, hint);
}

std::string to_csv(const DataTable& table) {
  std::string out;
  const auto& cols = table.columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (c) out.push_back(',');
    out += quote_if_needed(cols[c].name);
  }
  out.push_back('\n');
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) out.push_back(',');
      const auto& col = cols[c];
      const double v = col.values[r];
      switch (col.kind.type) {
        case ColumnType::Binary: out.push_back(v != 0.0 ? '1' : '0'); break;
        case ColumnType::Continuous: out += format_number(v); break;
        case ColumnType::Categorical: {
          // Labels that would parse as numbers are quoted so reloading keeps the kind.
          const auto& label = col.kind.levels[static_cast<std::size_t>(v)];
          if (parse_number(label)) out += "\"" + label + "\"";
          else out += quote_if_needed(label);
          break;
        }
      }
    }
    out.push_back('\n');
  }
  return out;
}

void write_csv(const DataTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << to_csv(table);
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Preprocessing

double lower_median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "median of an empty column");
  const std::size_t k = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  return values[k];
}

DataTable binarize_by_median(const DataTable& table, std::span<const std::string> columns) {
  std::vector<Column> cols = table.columns();
  for (const auto& name : columns) {
    auto& col = cols[table.index_of(name)];
    if (col.kind.type != ColumnType::Continuous)
      throw Error(ErrorCode::NotContinuous, "column '" + name + "' is not continuous");
    const double median = lower_median(col.values);
    for (double& v : col.values) v = v > median ? 1.0 : 0.0;
    col.kind = ColumnKind::binary();
  }
  return DataTable(std::move(cols), table.outcome());
}

DataTable one_hot_encode(const DataTable& table) {
  std::vector<Column> out;
  std::set<std::string> names;
  for (const auto& col : table.columns()) names.insert(col.name);
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    const auto& col = table.column(c);
    if (col.kind.type != ColumnType::Categorical || c == table.outcome_index()) {
      out.push_back(col);
      continue;
    }
    for (std::size_t level = 0; level < col.kind.levels.size(); ++level) {
      std::string name = col.name + "." + col.kind.levels[level];
      if (!names.insert(name).second)
        throw Error(ErrorCode::NameCollision, "one-hot column '" + name + "' already exists");
      Column bin{std::move(name), ColumnKind::binary(), std::vector<double>(table.n_rows())};
      for (std::size_t r = 0; r < table.n_rows(); ++r)
        bin.values[r] = col.values[r] == static_cast<double>(level) ? 1.0 : 0.0;
      out.push_back(std::move(bin));
    }
  }
  return DataTable(std::move(out), table.outcome());
}

DataTable project(const DataTable& table, std::span<const std::string> columns) {
  std::set<std::size_t> keep{table.outcome_index()};
  for (const auto& name : columns) keep.insert(table.index_of(name));
  std::vector<Column> out;
  for (std::size_t idx : keep) out.push_back(table.column(idx));
  return DataTable(std::move(out), table.outcome());
}

std::pair<DataTable, DataTable> split(const DataTable& table, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(ErrorCode::InvalidArgument, "train fraction must lie in (0, 1)");
  const std::size_t n = table.n_rows();
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "split needs at least two rows");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng::Stream stream(rng::derive(seed, 0x5e1175u));
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[stream.below(i + 1)]);
  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {table.select_rows(train), table.select_rows(test)};
}

}  // namespace mode
