#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mode/dataset.hpp"

namespace mode {

struct CiResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
  bool independent = true;  // p_value > alpha
  /// No usable information (every stratum skipped, zero variance, or a
  /// collinear conditioning set); reported as independent with p = 1.
  bool degenerate = false;
};

enum class CiMethod { Auto, GTest, FisherZ };

/// Index-based tester over one table. Caches integer codes for discrete
/// columns and, on first continuous query, the full covariance matrix.
/// Safe to call from several threads.
class CiTester {
 public:
  explicit CiTester(const DataTable& table);

  const DataTable& table() const noexcept { return table_; }

  CiResult test(std::size_t x, std::size_t y, std::span<const std::size_t> s, double alpha,
                CiMethod method = CiMethod::Auto) const;
  CiResult g_test(std::size_t x, std::size_t y, std::span<const std::size_t> s, double alpha) const;
  CiResult fisher_z(std::size_t x, std::size_t y, std::span<const std::size_t> s, double alpha) const;

  bool is_discrete(std::size_t column) const { return table_.column(column).kind.is_discrete(); }

 private:
  void check_args(std::size_t x, std::size_t y, std::span<const std::size_t> s, double alpha) const;
  const std::vector<double>& covariance() const;

  const DataTable& table_;
  std::vector<std::vector<std::uint32_t>> codes_;
  std::vector<std::size_t> levels_;
  mutable std::once_flag cov_once_;
  mutable std::vector<double> cov_;
};

/// G (likelihood-ratio) test of x _||_ y | s on discrete columns.
CiResult g_test(const DataTable& table, std::string_view x, std::string_view y,
                const std::vector<std::string>& s, double alpha);
/// Fisher z test on the partial correlation of x and y given s.
CiResult fisher_z_test(const DataTable& table, std::string_view x, std::string_view y,
                       const std::vector<std::string>& s, double alpha);
/// G test when every column involved is discrete, Fisher z otherwise.
CiResult ci_test(const DataTable& table, std::string_view x, std::string_view y,
                 const std::vector<std::string>& s, double alpha);

}  // namespace mode
