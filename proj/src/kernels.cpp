#include "mode/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include "mode/rng.hpp"
#include "mode/stats.hpp"

namespace mode::kernels {
namespace {

// Fixed block size for order-stable reductions.
constexpr std::size_t kBlock = 4096;

std::size_t block_count(std::size_t n) { return (n + kBlock - 1) / kBlock; }

}  // namespace

void sample_row(const CompiledScm& scm, std::uint64_t seed, std::uint64_t row, double* out) noexcept {
  const std::uint64_t row_key = rng::derive(seed, row);
  const std::size_t m = scm.nodes.size();
  for (std::size_t j = 0; j < m; ++j) {
    const auto& node = scm.nodes[j];
    const std::uint64_t bits = rng::derive(row_key, node.key);
    switch (node.kind) {
      case CompiledScm::Kind::LinearGaussian: {
        double v = node.intercept;
        for (std::size_t p = 0; p < node.parents.size(); ++p) v += node.coefficients[p] * out[node.parents[p]];
        if (node.scale != 0.0) v += node.scale * rng::standard_normal(bits);
        out[j] = v;
        break;
      }
      case CompiledScm::Kind::LogisticBernoulli: {
        double w = node.intercept;
        for (const auto& term : node.terms) {
          double prod = term.coefficient;
          for (auto f : term.factors) prod *= out[f];
          w += prod;
        }
        out[j] = rng::to_unit(bits) < stats::sigmoid(w) ? 1.0 : 0.0;
        break;
      }
      case CompiledScm::Kind::BernoulliConst:
        out[j] = rng::to_unit(bits) < node.intercept ? 1.0 : 0.0;
        break;
      case CompiledScm::Kind::GaussianConst:
        out[j] = node.scale != 0.0 ? node.intercept + node.scale * rng::standard_normal(bits) : node.intercept;
        break;
    }
  }
}

double Moments::std_error() const {
  if (count < 2) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(count);
  const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
  return std::sqrt(var / n);
}

// ---------------------------------------------------------------------------

namespace serial {

NodeMatrix sample_nodes(const CompiledScm& scm, std::size_t n, std::uint64_t seed) {
  const std::size_t m = scm.nodes.size();
  NodeMatrix out(m, std::vector<double>(n));
  std::vector<double> row(m);
  for (std::size_t r = 0; r < n; ++r) {
    sample_row(scm, seed, r, row.data());
    for (std::size_t j = 0; j < m; ++j) out[j][r] = row[j];
  }
  return out;
}

Moments conditional_moments(const CompiledScm& scm, const ExactCondition& condition, std::uint32_t target,
                            const Statistic& statistic, std::size_t n, std::uint64_t seed) {
  std::vector<double> row(scm.nodes.size());
  Moments m;
  for (std::size_t r = 0; r < n; ++r) {
    sample_row(scm, seed, r, row.data());
    bool keep = true;
    for (const auto& [node, value] : condition) keep = keep && row[node] == value;
    if (!keep) continue;
    const double s = statistic(row[target]);
    ++m.count;
    m.sum += s;
    m.sum_sq += s * s;
  }
  return m;
}

Moments paired_moments(const CompiledScm& a, const CompiledScm& b, std::uint32_t target,
                       const Statistic& statistic, std::size_t n, std::uint64_t seed) {
  std::vector<double> ra(a.nodes.size()), rb(b.nodes.size());
  Moments m;
  for (std::size_t r = 0; r < n; ++r) {
    sample_row(a, seed, r, ra.data());
    sample_row(b, seed, r, rb.data());
    const double d = statistic(rb[target]) - statistic(ra[target]);
    ++m.count;
    m.sum += d;
    m.sum_sq += d * d;
  }
  return m;
}

std::vector<double> covariance(std::span<const std::span<const double>> columns) {
  const std::size_t k = columns.size();
  std::vector<double> cov(k * k, 0.0);
  if (k == 0) return cov;
  const std::size_t n = columns[0].size();
  std::vector<double> mean(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    double s = 0.0;
    for (double v : columns[i]) s += v;
    mean[i] = s / static_cast<double>(n);
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r) s += (columns[i][r] - mean[i]) * (columns[j][r] - mean[j]);
      cov[i * k + j] = cov[j * k + i] = s / static_cast<double>(n - 1);
    }
  }
  return cov;
}

Contingency contingency(std::span<const std::uint32_t> x, std::size_t x_levels, std::span<const std::uint32_t> y,
                        std::size_t y_levels, std::span<const std::uint32_t> stratum, std::size_t strata) {
  Contingency t{strata, x_levels, y_levels, std::vector<std::uint64_t>(strata * x_levels * y_levels, 0)};
  for (std::size_t r = 0; r < x.size(); ++r) {
    const std::size_t s = stratum.empty() ? 0 : stratum[r];
    ++t.counts[(s * x_levels + x[r]) * y_levels + y[r]];
  }
  return t;
}

}  // namespace serial

// ---------------------------------------------------------------------------

namespace parallel {

NodeMatrix sample_nodes(const CompiledScm& scm, std::size_t n, std::uint64_t seed) {
  const std::size_t m = scm.nodes.size();
  NodeMatrix out(m, std::vector<double>(n));
  const auto blocks = static_cast<std::int64_t>(block_count(n));
#pragma omp parallel
  {
    std::vector<double> row(m);
#pragma omp for schedule(static)
    for (std::int64_t b = 0; b < blocks; ++b) {
      const std::size_t begin = static_cast<std::size_t>(b) * kBlock;
      const std::size_t end = std::min(n, begin + kBlock);
      for (std::size_t r = begin; r < end; ++r) {
        sample_row(scm, seed, r, row.data());
        for (std::size_t j = 0; j < m; ++j) out[j][r] = row[j];
      }
    }
  }
  return out;
}

Moments conditional_moments(const CompiledScm& scm, const ExactCondition& condition, std::uint32_t target,
                            const Statistic& statistic, std::size_t n, std::uint64_t seed) {
  const std::size_t blocks = block_count(n);
  std::vector<Moments> partial(blocks);
#pragma omp parallel
  {
    std::vector<double> row(scm.nodes.size());
#pragma omp for schedule(static)
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(blocks); ++b) {
      const std::size_t begin = static_cast<std::size_t>(b) * kBlock;
      const std::size_t end = std::min(n, begin + kBlock);
      Moments local;
      for (std::size_t r = begin; r < end; ++r) {
        sample_row(scm, seed, r, row.data());
        bool keep = true;
        for (const auto& [node, value] : condition) keep = keep && row[node] == value;
        if (!keep) continue;
        const double s = statistic(row[target]);
        ++local.count;
        local.sum += s;
        local.sum_sq += s * s;
      }
      partial[static_cast<std::size_t>(b)] = local;
    }
  }
  Moments total;
  for (const auto& p : partial) {
    total.count += p.count;
    total.sum += p.sum;
    total.sum_sq += p.sum_sq;
  }
  return total;
}

Moments paired_moments(const CompiledScm& a, const CompiledScm& b, std::uint32_t target,
                       const Statistic& statistic, std::size_t n, std::uint64_t seed) {
  const std::size_t blocks = block_count(n);
  std::vector<Moments> partial(blocks);
#pragma omp parallel
  {
    std::vector<double> ra(a.nodes.size()), rb(b.nodes.size());
#pragma omp for schedule(static)
    for (std::int64_t blk = 0; blk < static_cast<std::int64_t>(blocks); ++blk) {
      const std::size_t begin = static_cast<std::size_t>(blk) * kBlock;
      const std::size_t end = std::min(n, begin + kBlock);
      Moments local;
      for (std::size_t r = begin; r < end; ++r) {
        sample_row(a, seed, r, ra.data());
        sample_row(b, seed, r, rb.data());
        const double d = statistic(rb[target]) - statistic(ra[target]);
        ++local.count;
        local.sum += d;
        local.sum_sq += d * d;
      }
      partial[static_cast<std::size_t>(blk)] = local;
    }
  }
  Moments total;
  for (const auto& p : partial) {
    total.count += p.count;
    total.sum += p.sum;
    total.sum_sq += p.sum_sq;
  }
  return total;
}

std::vector<double> covariance(std::span<const std::span<const double>> columns) {
  const std::size_t k = columns.size();
  std::vector<double> cov(k * k, 0.0);
  if (k == 0) return cov;
  const std::size_t n = columns[0].size();
  std::vector<double> mean(k, 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(k); ++i) {
    double s = 0.0;
    for (double v : columns[static_cast<std::size_t>(i)]) s += v;
    mean[static_cast<std::size_t>(i)] = s / static_cast<double>(n);
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j < k; ++j) pairs.emplace_back(i, j);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t p = 0; p < static_cast<std::int64_t>(pairs.size()); ++p) {
    const auto [i, j] = pairs[static_cast<std::size_t>(p)];
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += (columns[i][r] - mean[i]) * (columns[j][r] - mean[j]);
    cov[i * k + j] = cov[j * k + i] = s / static_cast<double>(n - 1);
  }
  return cov;
}

Contingency contingency(std::span<const std::uint32_t> x, std::size_t x_levels, std::span<const std::uint32_t> y,
                        std::size_t y_levels, std::span<const std::uint32_t> stratum, std::size_t strata) {
  const std::size_t cells = strata * x_levels * y_levels;
  const std::size_t n = x.size();
  const std::size_t blocks = block_count(n);
  std::vector<std::vector<std::uint64_t>> partial(blocks);
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(blocks); ++b) {
    auto& local = partial[static_cast<std::size_t>(b)];
    local.assign(cells, 0);
    const std::size_t begin = static_cast<std::size_t>(b) * kBlock;
    const std::size_t end = std::min(n, begin + kBlock);
    for (std::size_t r = begin; r < end; ++r) {
      const std::size_t s = stratum.empty() ? 0 : stratum[r];
      ++local[(s * x_levels + x[r]) * y_levels + y[r]];
    }
  }
  Contingency t{strata, x_levels, y_levels, std::vector<std::uint64_t>(cells, 0)};
  for (const auto& local : partial)
    for (std::size_t c = 0; c < cells; ++c) t.counts[c] += local[c];
  return t;
}

}  // namespace parallel

void for_each_index(std::size_t count, const std::function<void(std::size_t)>& body, Exec exec) {
  if (exec == Exec::Serial) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(count); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace mode::kernels
