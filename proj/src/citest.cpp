#include "mode/citest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include <Eigen/Dense>

#include "mode/error.hpp"
#include "mode/kernels.hpp"
#include "mode/stats.hpp"

namespace mode {
namespace {

// Strata with fewer observations than this are ignored.
constexpr std::uint64_t kMinStratum = 5;

CiResult degenerate_result() { return {0.0, 0, 1.0, true, true}; }

std::vector<std::size_t> indices_of(const DataTable& t, std::string_view x, std::string_view y,
                                    const std::vector<std::string>& s) {
  std::vector<std::size_t> idx{t.index_of(x), t.index_of(y)};
  for (const auto& name : s) idx.push_back(t.index_of(name));
  return idx;
}

}  // namespace

CiTester::CiTester(const DataTable& table) : table_(table) {
  codes_.resize(table.n_cols());
  levels_.assign(table.n_cols(), 0);
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    const auto& col = table.column(c);
    if (!col.kind.is_discrete()) continue;
    levels_[c] = col.kind.cardinality();
    codes_[c].resize(table.n_rows());
    for (std::size_t r = 0; r < table.n_rows(); ++r) codes_[c][r] = static_cast<std::uint32_t>(col.values[r]);
  }
}

void CiTester::check_args(std::size_t x, std::size_t y, std::span<const std::size_t> s, double alpha) const {
  const std::size_t m = table_.n_cols();
  if (x >= m || y >= m) throw Error(ErrorCode::UnknownColumn, "column index out of range");
  if (x == y) throw Error(ErrorCode::InvalidArgument, "independence test needs two distinct columns");
  for (auto v : s) {
    if (v >= m) throw Error(ErrorCode::UnknownColumn, "column index out of range");
    if (v == x || v == y)
      throw Error(ErrorCode::InvalidArgument, "tested column '" + table_.column(v).name + "' is in the conditioning set");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
}

CiResult CiTester::test(std::size_t x, std::size_t y, std::span<const std::size_t> s, double alpha,
                        CiMethod method) const {
  if (method == CiMethod::GTest) return g_test(x, y, s, alpha);
  if (method == CiMethod::FisherZ) return fisher_z(x, y, s, alpha);
  bool discrete = is_discrete(x) && is_discrete(y);
  for (auto v : s) discrete = discrete && is_discrete(v);
  return discrete ? g_test(x, y, s, alpha) : fisher_z(x, y, s, alpha);
}

CiResult CiTester::g_test(std::size_t x, std::size_t y, std::span<const std::size_t> s, double alpha) const {
  check_args(x, y, s, alpha);
  for (auto v : {x, y})
    if (!is_discrete(v))
      throw Error(ErrorCode::NonDiscreteColumn, "G test needs discrete columns, '" + table_.column(v).name + "' is not");
  for (auto v : s)
    if (!is_discrete(v))
      throw Error(ErrorCode::NonDiscreteColumn, "G test needs discrete columns, '" + table_.column(v).name + "' is not");
  // Canonical orientation keeps the result bit-identical under swapping.
  if (x > y) std::swap(x, y);

  const std::size_t n = table_.n_rows();
  std::vector<std::uint32_t> stratum;
  std::size_t strata = 1;
  if (!s.empty()) {
    stratum.assign(n, 0);
    double radix_product = 1.0;
    for (auto v : s) radix_product *= static_cast<double>(levels_[v]);
    if (radix_product <= static_cast<double>(std::max<std::size_t>(n, 1 << 16))) {
      for (auto v : s) {
        const auto L = static_cast<std::uint32_t>(levels_[v]);
        for (std::size_t r = 0; r < n; ++r) stratum[r] = stratum[r] * L + codes_[v][r];
      }
      strata = static_cast<std::size_t>(radix_product);
    } else {
      // Too many combinations for a dense table: relabel observed ones.
      std::vector<std::uint64_t> id(n, 0);
      std::size_t next = 0;
      for (auto v : s) {
        std::unordered_map<std::uint64_t, std::uint64_t> relabel;
        relabel.reserve(n);
        next = 0;
        for (std::size_t r = 0; r < n; ++r) {
          const std::uint64_t key = id[r] * levels_[v] + codes_[v][r];
          auto [it, fresh] = relabel.emplace(key, next);
          if (fresh) ++next;
          id[r] = it->second;
        }
      }
      for (std::size_t r = 0; r < n; ++r) stratum[r] = static_cast<std::uint32_t>(id[r]);
      strata = next;
    }
  }

  const std::size_t lx = levels_[x], ly = levels_[y];
  const auto table = kernels::parallel::contingency(codes_[x], lx, codes_[y], ly, stratum, strata);

  double g = 0.0;
  std::size_t dof = 0;
  std::vector<std::uint64_t> row(lx), col(ly);
  for (std::size_t st = 0; st < strata; ++st) {
    std::fill(row.begin(), row.end(), 0);
    std::fill(col.begin(), col.end(), 0);
    std::uint64_t total = 0;
    for (std::size_t a = 0; a < lx; ++a)
      for (std::size_t b = 0; b < ly; ++b) {
        const auto o = table.at(st, a, b);
        row[a] += o;
        col[b] += o;
        total += o;
      }
    if (total < kMinStratum) continue;
    const auto rx = static_cast<std::size_t>(std::count_if(row.begin(), row.end(), [](auto c) { return c > 0; }));
    const auto ry = static_cast<std::size_t>(std::count_if(col.begin(), col.end(), [](auto c) { return c > 0; }));
    dof += (rx - 1) * (ry - 1);
    const double nt = static_cast<double>(total);
    for (std::size_t a = 0; a < lx; ++a)
      for (std::size_t b = 0; b < ly; ++b) {
        const auto o = table.at(st, a, b);
        if (o == 0) continue;
        const double od = static_cast<double>(o);
        g += od * std::log(od * nt / (static_cast<double>(row[a]) * static_cast<double>(col[b])));
      }
  }
  if (dof == 0) return degenerate_result();
  g = std::max(0.0, 2.0 * g);
  const double p = std::clamp(stats::chi_square_sf(g, static_cast<double>(dof)), 0.0, 1.0);
  return {g, dof, p, p > alpha, false};
}

const std::vector<double>& CiTester::covariance() const {
  std::call_once(cov_once_, [this] {
    std::vector<std::span<const double>> cols;
    for (const auto& c : table_.columns()) cols.emplace_back(c.values);
    cov_ = kernels::parallel::covariance(cols);
  });
  return cov_;
}

CiResult CiTester::fisher_z(std::size_t x, std::size_t y, std::span<const std::size_t> s, double alpha) const {
  check_args(x, y, s, alpha);
  if (x > y) std::swap(x, y);
  const std::size_t n = table_.n_rows();
  const std::size_t k = s.size();
  if (n <= k + 3)
    throw Error(ErrorCode::SampleTooSmall, "Fisher z test needs more than " + std::to_string(k + 3) + " rows");
  const auto& cov = covariance();
  const std::size_t m = table_.n_cols();
  auto c = [&](std::size_t i, std::size_t j) { return cov[i * m + j]; };

  // Residual covariance of (x, y) after regressing on s.
  Eigen::Matrix2d resid;
  resid << c(x, x), c(x, y), c(y, x), c(y, y);
  if (k > 0) {
    Eigen::MatrixXd ss(k, k);
    Eigen::MatrixXd sv(k, 2);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) ss(i, j) = c(s[i], s[j]);
      sv(i, 0) = c(s[i], x);
      sv(i, 1) = c(s[i], y);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(ss);
    lu.setThreshold(1e-10);
    if (lu.rank() < static_cast<Eigen::Index>(k)) return degenerate_result();
    resid -= sv.transpose() * lu.solve(sv);
  }
  const double vx = resid(0, 0), vy = resid(1, 1);
  const double scale_x = c(x, x), scale_y = c(y, y);
  if (!(vx > 1e-12 * scale_x) || !(vy > 1e-12 * scale_y)) return degenerate_result();
  double r = resid(0, 1) / std::sqrt(vx * vy);
  r = std::clamp(r, -1.0, 1.0);
  const double root = std::sqrt(static_cast<double>(n - k - 3));
  const double z = std::abs(r) >= 1.0 - 1e-15 ? std::numeric_limits<double>::infinity()
                                              : 0.5 * std::log((1.0 + r) / (1.0 - r)) * root;
  const double p = std::clamp(stats::normal_two_sided_p(z), 0.0, 1.0);
  return {std::abs(z), 1, p, p > alpha, false};
}

CiResult g_test(const DataTable& table, std::string_view x, std::string_view y, const std::vector<std::string>& s,
                double alpha) {
  const auto idx = indices_of(table, x, y, s);
  CiTester t(table);
  return t.g_test(idx[0], idx[1], std::span(idx).subspan(2), alpha);
}

CiResult fisher_z_test(const DataTable& table, std::string_view x, std::string_view y,
                       const std::vector<std::string>& s, double alpha) {
  const auto idx = indices_of(table, x, y, s);
  CiTester t(table);
  return t.fisher_z(idx[0], idx[1], std::span(idx).subspan(2), alpha);
}

CiResult ci_test(const DataTable& table, std::string_view x, std::string_view y, const std::vector<std::string>& s,
                 double alpha) {
  const auto idx = indices_of(table, x, y, s);
  CiTester t(table);
  return t.test(idx[0], idx[1], std::span(idx).subspan(2), alpha);
}

}  // namespace mode
