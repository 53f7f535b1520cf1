#pragma once

// Data-parallel inner loops. Each kernel exists twice: a plain serial
// reference (kept for tests and the benchmark target) and an OpenMP version
// that the library calls. Parallel kernels fix their reduction order, so
// their output never depends on the thread count.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace mode::kernels {

enum class Exec { Serial, Parallel };

/// Flattened SCM ready for row sampling. Parent references are global node
/// indices; nodes are stored in topological order.
struct CompiledScm {
  enum class Kind : std::uint8_t { LinearGaussian, LogisticBernoulli, BernoulliConst, GaussianConst };

  struct Term {
    double coefficient = 0.0;
    std::vector<std::uint32_t> factors;
  };

  struct Node {
    Kind kind = Kind::GaussianConst;
    double intercept = 0.0;  // mean (GaussianConst) or p (BernoulliConst)
    double scale = 0.0;      // noise sd
    std::uint64_t key = 0;   // random-stream label, stable under mutilation
    std::vector<std::uint32_t> parents;
    std::vector<double> coefficients;
    std::vector<Term> terms;
  };

  std::vector<Node> nodes;
};

/// Fills `out[0..nodes)` with one ancestral draw for `row`.
void sample_row(const CompiledScm& scm, std::uint64_t seed, std::uint64_t row, double* out) noexcept;

/// Node-major matrix: result[node][row].
using NodeMatrix = std::vector<std::vector<double>>;

namespace serial {
NodeMatrix sample_nodes(const CompiledScm& scm, std::size_t n, std::uint64_t seed);
}
namespace parallel {
NodeMatrix sample_nodes(const CompiledScm& scm, std::size_t n, std::uint64_t seed);
}

struct Moments {
  std::size_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
  /// Standard error of the mean (sample variance, n - 1).
  double std_error() const;
};

/// (node index, required value) pairs; a row is kept when all match exactly.
using ExactCondition = std::vector<std::pair<std::uint32_t, double>>;
using Statistic = std::function<double(double)>;

namespace serial {
Moments conditional_moments(const CompiledScm& scm, const ExactCondition& condition,
                            std::uint32_t target, const Statistic& statistic, std::size_t n,
                            std::uint64_t seed);
}
namespace parallel {
Moments conditional_moments(const CompiledScm& scm, const ExactCondition& condition,
                            std::uint32_t target, const Statistic& statistic, std::size_t n,
                            std::uint64_t seed);
}

/// Moments of statistic(b) - statistic(a) where both SCMs are driven by the
/// same per-row keys (common random numbers). Node layouts must match.
namespace serial {
Moments paired_moments(const CompiledScm& a, const CompiledScm& b, std::uint32_t target,
                       const Statistic& statistic, std::size_t n, std::uint64_t seed);
}
namespace parallel {
Moments paired_moments(const CompiledScm& a, const CompiledScm& b, std::uint32_t target,
                       const Statistic& statistic, std::size_t n, std::uint64_t seed);
}

/// Column-major covariance of equally long columns: result[i * k + j].
namespace serial {
std::vector<double> covariance(std::span<const std::span<const double>> columns);
}
namespace parallel {
std::vector<double> covariance(std::span<const std::span<const double>> columns);
}

/// Contingency counts, laid out [stratum][x][y].
struct Contingency {
  std::size_t strata = 0;
  std::size_t x_levels = 0;
  std::size_t y_levels = 0;
  std::vector<std::uint64_t> counts;

  std::uint64_t at(std::size_t s, std::size_t x, std::size_t y) const {
    return counts[(s * x_levels + x) * y_levels + y];
  }
};

namespace serial {
Contingency contingency(std::span<const std::uint32_t> x, std::size_t x_levels,
                        std::span<const std::uint32_t> y, std::size_t y_levels,
                        std::span<const std::uint32_t> stratum, std::size_t strata);
}
namespace parallel {
Contingency contingency(std::span<const std::uint32_t> x, std::size_t x_levels,
                        std::span<const std::uint32_t> y, std::size_t y_levels,
                        std::span<const std::uint32_t> stratum, std::size_t strata);
}

/// Runs body(i) for i in [0, count). The parallel variant schedules
/// dynamically; callers write results into per-index slots.
void for_each_index(std::size_t count, const std::function<void(std::size_t)>& body, Exec exec);

}  // namespace mode::kernels
