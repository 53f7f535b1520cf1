#include "mode/models.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "mode/error.hpp"
#include "mode/rng.hpp"
#include "mode/stats.hpp"

namespace mode {
namespace {

constexpr int kModelSchemaVersion = 1;
constexpr double kRidge = 1e-8;
constexpr double kGradientTolerance = 1e-8;
constexpr int kMaxHalvings = 30;

double softplus(double s) { return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }

std::size_t features_per_split(const ModelSpec& spec, std::size_t m) {
  if (spec.max_features) return std::min(*spec.max_features, m);
  if (spec.kind == ModelKind::RandomForest)
    return std::min<std::size_t>(m, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m)))));
  return m;
}

// Grows one CART tree from per-row weights (bootstrap counts). Rows are kept
// sorted per feature inside every node range, so each level costs O(n m).
class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
              const std::vector<std::vector<std::uint32_t>>& presorted, const ModelSpec& spec, std::size_t m_try)
      : x_(x), y_(y), presorted_(presorted), spec_(spec), m_try_(m_try) {}

  Tree build(const std::vector<double>& w, rng::Stream& stream) const {
    const std::size_t m = x_.size();
    std::vector<std::vector<std::uint32_t>> order(m);
    for (std::size_t f = 0; f < m; ++f) {
      order[f].reserve(presorted_[f].size());
      for (auto r : presorted_[f])
        if (w[r] > 0.0) order[f].push_back(r);
    }
    const std::size_t rows = order.empty() ? 0 : order[0].size();
    std::vector<std::uint8_t> goes_left(y_.size(), 0);
    std::vector<std::uint32_t> buffer(rows);
    std::vector<std::size_t> perm(m);

    Tree tree;
    tree.nodes.emplace_back();
    if (spec_.keep_leaf_values) tree.leaf_values.emplace_back();
    struct Pending {
      std::size_t node, begin, end, depth;
    };
    std::vector<Pending> stack{{0, 0, rows, 0}};
    while (!stack.empty()) {
      const Pending p = stack.back();
      stack.pop_back();
      const auto& rows_any = order[0];

      double W = 0.0, S = 0.0;
      for (std::size_t k = p.begin; k < p.end; ++k) {
        W += w[rows_any[k]];
        S += w[rows_any[k]] * y_[rows_any[k]];
      }
      const double mean = S / W;
      double sse = 0.0;
      for (std::size_t k = p.begin; k < p.end; ++k) {
        const double d = y_[rows_any[k]] - mean;
        sse += w[rows_any[k]] * d * d;
      }
      tree.nodes[p.node].weight = W;
      tree.nodes[p.node].value = mean;

      const double min_leaf = static_cast<double>(spec_.min_leaf);
      const bool depth_stop = spec_.max_depth && p.depth >= *spec_.max_depth;
      const bool pure = !(sse > 1e-14 * std::max(1.0, mean * mean * W));
      int best_f = -1;
      double best_thr = 0.0, best_gain = 0.0;
      if (!depth_stop && !pure && W >= 2.0 * min_leaf) {
        const double tol = 1e-12 * sse;
        auto scan = [&](std::size_t f) {
          const auto& ord = order[f];
          const auto& xf = x_[f];
          // Centred sums: the gain of a split is Sl^2 W / (Wl Wr).
          double wl = 0.0, sl = 0.0;
          for (std::size_t k = p.begin; k + 1 < p.end; ++k) {
            const auto r = ord[k];
            wl += w[r];
            sl += w[r] * (y_[r] - mean);
            const double a = xf[r], b = xf[ord[k + 1]];
            if (!(a < b)) continue;
            const double wr = W - wl;
            if (wl < min_leaf || wr < min_leaf) continue;
            const double gain = sl * sl * W / (wl * wr);
            if (gain > best_gain + tol) {
              best_gain = gain;
              best_f = static_cast<int>(f);
              double thr = a + (b - a) / 2;
              if (!(thr < b)) thr = a;
              best_thr = thr;
            }
          }
        };
        // The sampled features first, in index order; when none of them
        // splits, keep drawing from the rest of the permutation.
        const std::size_t tried = draw_features(stream, perm);
        std::vector<std::size_t> first(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(tried));
        std::sort(first.begin(), first.end());
        for (auto f : first) scan(f);
        for (std::size_t i = tried; i < m && best_f < 0; ++i) scan(perm[i]);
      }

      if (best_f < 0) {
        if (spec_.keep_leaf_values) {
          auto& vals = tree.leaf_values[p.node];
          for (std::size_t k = p.begin; k < p.end; ++k) vals.emplace_back(y_[rows_any[k]], w[rows_any[k]]);
          std::sort(vals.begin(), vals.end());
        }
        continue;
      }

      const auto& xf = x_[static_cast<std::size_t>(best_f)];
      std::size_t n_left = 0;
      for (std::size_t k = p.begin; k < p.end; ++k) {
        const auto r = rows_any[k];
        goes_left[r] = xf[r] <= best_thr;
        n_left += goes_left[r];
      }
      for (auto& ord : order) {
        std::size_t l = p.begin, rpos = 0;
        for (std::size_t k = p.begin; k < p.end; ++k) {
          if (goes_left[ord[k]]) ord[l++] = ord[k];
          else buffer[rpos++] = ord[k];
        }
        std::copy(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(rpos), ord.begin() + static_cast<std::ptrdiff_t>(l));
      }

      const auto left = tree.nodes.size();
      tree.nodes[p.node].feature = best_f;
      tree.nodes[p.node].threshold = best_thr;
      tree.nodes[p.node].left = static_cast<std::int32_t>(left);
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      if (spec_.keep_leaf_values) tree.leaf_values.resize(tree.nodes.size());
      const std::size_t mid = p.begin + n_left;
      // Right first so the left subtree is expanded first.
      stack.push_back({left + 1, mid, p.end, p.depth + 1});
      stack.push_back({left, p.begin, mid, p.depth + 1});
    }
    if (spec_.keep_leaf_values) tree.leaf_values.resize(tree.nodes.size());
    return tree;
  }

 private:
  // Shuffles perm so its first m_try entries are a uniform draw; returns m_try.
  std::size_t draw_features(rng::Stream& stream, std::vector<std::size_t>& perm) const {
    const std::size_t m = perm.size();
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    if (m_try_ >= m) return m;
    for (std::size_t i = 0; i < m; ++i) std::swap(perm[i], perm[i + stream.below(m - i)]);
    return m_try_;
  }

  const std::vector<std::vector<double>>& x_;
  const std::vector<double>& y_;
  const std::vector<std::vector<std::uint32_t>>& presorted_;
  const ModelSpec& spec_;
  std::size_t m_try_;
};

Eigen::MatrixXd design(const std::vector<std::vector<double>>& x, std::size_t n) {
  Eigen::MatrixXd d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(x.size() + 1));
  d.col(0).setOnes();
  for (std::size_t f = 0; f < x.size(); ++f)
    d.col(static_cast<Eigen::Index>(f + 1)) = Eigen::Map<const Eigen::VectorXd>(x[f].data(), static_cast<Eigen::Index>(n));
  return d;
}

// Penalized log-loss; the intercept is not penalized.
double logistic_loss(const Eigen::MatrixXd& d, const Eigen::VectorXd& y, const Eigen::VectorXd& beta, double l2) {
  const Eigen::VectorXd s = d * beta;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) loss += softplus(s[i]) - y[i] * s[i];
  return loss + 0.5 * l2 * beta.tail(beta.size() - 1).squaredNorm();
}

Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& d, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                                  double l2) {
  Eigen::VectorXd resid = (d * beta).unaryExpr([](double s) { return stats::sigmoid(s); }) - y;
  Eigen::VectorXd g = d.transpose() * resid;
  g.tail(g.size() - 1) += l2 * beta.tail(beta.size() - 1);
  return g;
}

void fit_linear(const Eigen::MatrixXd& d, const Eigen::VectorXd& y, std::vector<double>& coef,
                std::vector<double>& trace, std::vector<std::string>& warnings) {
  Eigen::MatrixXd a = d.transpose() * d;
  const Eigen::VectorXd b = d.transpose() * y;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  lu.setThreshold(1e-10);
  if (lu.rank() < a.rows()) {
    a.diagonal().array() += kRidge;
    warnings.push_back("singular design: ridge 1e-8 applied");
  }
  const Eigen::VectorXd beta = a.ldlt().solve(b);
  coef.assign(beta.data(), beta.data() + beta.size());
  trace.push_back((d * beta - y).squaredNorm() / static_cast<double>(y.size()));
}

void fit_logistic(const ModelSpec& spec, const Eigen::MatrixXd& d, const Eigen::VectorXd& y, std::vector<double>& coef,
                  std::vector<double>& trace, std::vector<std::string>& warnings) {
  const Eigen::Index p = d.cols();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double loss = logistic_loss(d, y, beta, spec.l2_penalty);
  Eigen::VectorXd grad = logistic_gradient(d, y, beta, spec.l2_penalty);
  trace.push_back(loss);
  for (std::size_t it = 0; it < spec.max_iters && grad.lpNorm<Eigen::Infinity>() > kGradientTolerance; ++it) {
    const Eigen::VectorXd prob = (d * beta).unaryExpr([](double s) { return stats::sigmoid(s); });
    const Eigen::VectorXd wts = prob.array() * (1.0 - prob.array());
    Eigen::MatrixXd h = d.transpose() * wts.asDiagonal() * d;
    h.diagonal().tail(p - 1).array() += spec.l2_penalty;
    const Eigen::VectorXd step = h.ldlt().solve(grad);
    double t = spec.learning_rate;
    bool accepted = false;
    for (int k = 0; k <= kMaxHalvings; ++k, t *= 0.5) {
      const Eigen::VectorXd cand = beta - t * step;
      const double cand_loss = logistic_loss(d, y, cand, spec.l2_penalty);
      if (cand_loss < loss) {
        beta = cand;
        loss = cand_loss;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    grad = logistic_gradient(d, y, beta, spec.l2_penalty);
    trace.push_back(loss);
  }
  if (grad.lpNorm<Eigen::Infinity>() > kGradientTolerance)
    warnings.push_back("logistic regression stopped with gradient norm " +
                       std::to_string(grad.lpNorm<Eigen::Infinity>()));
  coef.assign(beta.data(), beta.data() + beta.size());
}

std::uint64_t fnv(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xff;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::LinearRegression: return "lr";
    case ModelKind::LogisticRegression: return "logreg";
    case ModelKind::DecisionTree: return "dt";
    case ModelKind::RandomForest: return "rf";
  }
  return "unknown";
}

ModelKind model_kind_from_string(std::string_view text) {
  if (text == "lr" || text == "LinearRegression") return ModelKind::LinearRegression;
  if (text == "logreg" || text == "LogisticRegression") return ModelKind::LogisticRegression;
  if (text == "dt" || text == "DecisionTree") return ModelKind::DecisionTree;
  if (text == "rf" || text == "RandomForest") return ModelKind::RandomForest;
  throw Error(ErrorCode::InvalidArgument, "unknown model kind '" + std::string(text) + "' (lr, logreg, dt, rf)");
}

std::string_view to_string(OutcomeKind kind) { return kind == OutcomeKind::Binary ? "binary" : "continuous"; }

void ModelSpec::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (max_depth && *max_depth == 0) fail("max_depth must be positive");
  if (min_leaf == 0) fail("min_leaf must be positive");
  if (n_trees == 0) fail("n_trees must be positive");
  if (max_features && *max_features == 0) fail("max_features must be positive");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) fail("learning_rate must lie in (0, 1]");
  if (max_iters == 0) fail("max_iters must be positive");
  if (!(l2_penalty >= 0.0) || !std::isfinite(l2_penalty)) fail("l2_penalty must be finite and non-negative");
}

nlohmann::json to_json(const ModelSpec& spec) {
  nlohmann::json j{{"kind", to_string(spec.kind)},
                   {"min_leaf", spec.min_leaf},
                   {"n_trees", spec.n_trees},
                   {"learning_rate", spec.learning_rate},
                   {"max_iters", spec.max_iters},
                   {"l2_penalty", spec.l2_penalty},
                   {"laplace", spec.laplace},
                   {"keep_leaf_values", spec.keep_leaf_values},
                   {"seed", spec.seed}};
  j["max_depth"] = spec.max_depth ? nlohmann::json(*spec.max_depth) : nlohmann::json(nullptr);
  j["max_features"] = spec.max_features ? nlohmann::json(*spec.max_features) : nlohmann::json(nullptr);
  return j;
}

ModelSpec spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "model spec must be a JSON object");
  ModelSpec s;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "kind") s.kind = model_kind_from_string(v.get<std::string>());
      else if (key == "max_depth") s.max_depth = v.is_null() ? std::nullopt : std::optional(v.get<std::size_t>());
      else if (key == "max_features") s.max_features = v.is_null() ? std::nullopt : std::optional(v.get<std::size_t>());
      else if (key == "min_leaf") s.min_leaf = v.get<std::size_t>();
      else if (key == "n_trees") s.n_trees = v.get<std::size_t>();
      else if (key == "learning_rate") s.learning_rate = v.get<double>();
      else if (key == "max_iters") s.max_iters = v.get<std::size_t>();
      else if (key == "l2_penalty") s.l2_penalty = v.get<double>();
      else if (key == "laplace") s.laplace = v.get<bool>();
      else if (key == "keep_leaf_values") s.keep_leaf_values = v.get<bool>();
      else if (key == "seed") s.seed = v.get<std::uint64_t>();
      else throw Error(ErrorCode::InvalidArgument, "unknown model spec field '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed model spec: ") + e.what());
  }
  s.validate();
  return s;
}

std::size_t Tree::leaf_of(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.left + 1);
  }
  return i;
}

std::uint64_t Tree::structure_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& n : nodes) {
    h = fnv(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(n.feature)));
    h = fnv(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(n.left)));
    h = fnv(h, std::bit_cast<std::uint64_t>(n.threshold));
    h = fnv(h, std::bit_cast<std::uint64_t>(n.weight));
    h = fnv(h, std::bit_cast<std::uint64_t>(n.value));
  }
  return h;
}

std::vector<std::string> TrainedModel::feature_names() const {
  std::vector<std::string> out;
  for (const auto& f : features_) out.push_back(f.name);
  return out;
}

std::vector<double> TrainedModel::vectorize(const Instance& instance) const {
  std::vector<double> x;
  x.reserve(features_.size());
  for (const auto& f : features_) {
    if (!instance.contains(f.name)) throw Error(ErrorCode::MissingFeature, "instance has no value for feature '" + f.name + "'");
    x.push_back(instance.at(f.name));
  }
  return x;
}

double TrainedModel::tree_output(const Tree& tree, std::span<const double> x) const {
  const auto& leaf = tree.nodes[tree.leaf_of(x)];
  if (outcome_kind_ == OutcomeKind::Binary && spec_.laplace) return (leaf.value * leaf.weight + 1.0) / (leaf.weight + 2.0);
  return leaf.value;
}

double TrainedModel::evaluate(std::span<const double> x) const {
  if (x.size() != features_.size()) throw Error(ErrorCode::InvalidArgument, "feature vector has the wrong length");
  switch (spec_.kind) {
    case ModelKind::LinearRegression:
    case ModelKind::LogisticRegression: {
      double s = coefficients_[0];
      for (std::size_t f = 0; f < x.size(); ++f) s += coefficients_[f + 1] * x[f];
      return spec_.kind == ModelKind::LogisticRegression ? stats::sigmoid(s) : s;
    }
    case ModelKind::DecisionTree:
    case ModelKind::RandomForest: {
      double sum = 0.0;
      for (const auto& t : trees_) sum += tree_output(t, x);
      return sum / static_cast<double>(trees_.size());
    }
  }
  return 0.0;
}

double TrainedModel::exceedance(std::span<const double> x, double threshold) const {
  if (outcome_kind_ != OutcomeKind::Continuous || trees_.empty() || !spec_.keep_leaf_values)
    throw Error(ErrorCode::NotSupported,
                "exceedance probabilities need a tree or forest regression model trained with keep_leaf_values");
  double sum = 0.0;
  for (const auto& t : trees_) {
    const auto& vals = t.leaf_values[t.leaf_of(x)];
    double above = 0.0, total = 0.0;
    for (const auto& [v, w] : vals) {
      total += w;
      if (v > threshold) above += w;
    }
    sum += total > 0.0 ? above / total : 0.0;
  }
  return sum / static_cast<double>(trees_.size());
}

TrainedModel train(const ModelSpec& spec, const DataTable& table, kernels::Exec exec) {
  spec.validate();
  const auto fidx = table.feature_indices();
  if (fidx.empty()) throw Error(ErrorCode::EmptyFeatureSet, "cannot train without features");
  const std::size_t n = table.n_rows();
  if (n < 2) throw Error(ErrorCode::SampleTooSmall, "training needs at least 2 rows");

  TrainedModel model;
  model.spec_ = spec;
  model.outcome_ = table.outcome();
  model.n_train_ = n;
  const auto& ycol = table.outcome_column();
  switch (ycol.kind.type) {
    case ColumnType::Binary: model.outcome_kind_ = OutcomeKind::Binary; break;
    case ColumnType::Continuous: model.outcome_kind_ = OutcomeKind::Continuous; break;
    case ColumnType::Categorical:
      throw Error(ErrorCode::IncompatibleOutcome, "categorical outcome '" + ycol.name + "' must be binarized first");
  }
  if (spec.kind == ModelKind::LinearRegression && model.outcome_kind_ != OutcomeKind::Continuous)
    throw Error(ErrorCode::IncompatibleOutcome, "linear regression needs a continuous outcome");
  if (spec.kind == ModelKind::LogisticRegression && model.outcome_kind_ != OutcomeKind::Binary)
    throw Error(ErrorCode::IncompatibleOutcome, "logistic regression needs a binary outcome");

  std::vector<std::vector<double>> x;
  for (auto c : fidx) {
    const auto& col = table.column(c);
    if (col.kind.type == ColumnType::Categorical)
      throw Error(ErrorCode::InvalidArgument, "categorical feature '" + col.name + "' must be one-hot encoded");
    const auto [lo, hi] = std::minmax_element(col.values.begin(), col.values.end());
    model.features_.push_back({col.name, col.kind.type, *lo, *hi});
    x.push_back(col.values);
  }
  const auto& y = ycol.values;

  if (spec.kind == ModelKind::LinearRegression || spec.kind == ModelKind::LogisticRegression) {
    const Eigen::MatrixXd d = design(x, n);
    const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(n));
    if (spec.kind == ModelKind::LinearRegression) fit_linear(d, yv, model.coefficients_, model.loss_trace_, model.warnings_);
    else fit_logistic(spec, d, yv, model.coefficients_, model.loss_trace_, model.warnings_);
    return model;
  }

  std::vector<std::vector<std::uint32_t>> presorted(x.size());
  for (std::size_t f = 0; f < x.size(); ++f) {
    auto& ord = presorted[f];
    ord.resize(n);
    std::iota(ord.begin(), ord.end(), 0u);
    const auto& xf = x[f];
    std::sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) { return xf[a] < xf[b] || (xf[a] == xf[b] && a < b); });
  }
  const TreeBuilder builder(x, y, presorted, spec, features_per_split(spec, x.size()));
  const bool forest = spec.kind == ModelKind::RandomForest;
  const std::size_t n_trees = forest ? spec.n_trees : 1;
  model.trees_.resize(n_trees);
  kernels::for_each_index(
      n_trees,
      [&](std::size_t t) {
        rng::Stream stream(rng::derive(spec.seed, t));
        std::vector<double> w(n, forest ? 0.0 : 1.0);
        if (forest)
          for (std::size_t i = 0; i < n; ++i) w[stream.below(n)] += 1.0;
        model.trees_[t] = builder.build(w, stream);
      },
      exec);
  return model;
}

double predict_proba(const TrainedModel& model, const Instance& instance, int class_of_interest) {
  if (model.outcome_kind() != OutcomeKind::Binary)
    throw Error(ErrorCode::WrongOutcomeKind, "probabilities need a binary-outcome model");
  if (class_of_interest != 0 && class_of_interest != 1)
    throw Error(ErrorCode::InvalidArgument, "class of interest must be 0 or 1");
  const double p = model.evaluate(model.vectorize(instance));
  return class_of_interest == 1 ? p : 1.0 - p;
}

double predict_value(const TrainedModel& model, const Instance& instance) {
  if (model.outcome_kind() != OutcomeKind::Continuous)
    throw Error(ErrorCode::WrongOutcomeKind, "values need a continuous-outcome model");
  return model.evaluate(model.vectorize(instance));
}

double predict(const TrainedModel& model, const Instance& instance) { return model.evaluate(model.vectorize(instance)); }

std::vector<double> predict_table(const TrainedModel& model, const DataTable& table, kernels::Exec exec) {
  std::vector<const std::vector<double>*> cols;
  for (const auto& f : model.features()) {
    const auto idx = table.find(f.name);
    if (!idx) throw Error(ErrorCode::MissingFeature, "table has no column for feature '" + f.name + "'");
    cols.push_back(&table.column(*idx).values);
  }
  std::vector<double> out(table.n_rows());
  constexpr std::size_t kBlock = 256;
  const std::size_t blocks = (out.size() + kBlock - 1) / kBlock;
  kernels::for_each_index(
      blocks,
      [&](std::size_t b) {
        std::vector<double> x(cols.size());
        for (std::size_t r = b * kBlock; r < std::min(out.size(), (b + 1) * kBlock); ++r) {
          for (std::size_t f = 0; f < cols.size(); ++f) x[f] = (*cols[f])[r];
          out[r] = model.evaluate(x);
        }
      },
      exec);
  return out;
}

double logistic_objective(const DataTable& table, std::span<const double> beta, double l2,
                          std::vector<double>* gradient) {
  const auto fidx = table.feature_indices();
  if (beta.size() != fidx.size() + 1) throw Error(ErrorCode::InvalidArgument, "beta needs one entry per feature plus intercept");
  std::vector<std::vector<double>> x;
  for (auto c : fidx) x.push_back(table.column(c).values);
  const Eigen::MatrixXd d = design(x, table.n_rows());
  const Eigen::VectorXd yv =
      Eigen::Map<const Eigen::VectorXd>(table.outcome_column().values.data(), static_cast<Eigen::Index>(table.n_rows()));
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
  if (gradient) {
    const Eigen::VectorXd g = logistic_gradient(d, yv, b, l2);
    gradient->assign(g.data(), g.data() + g.size());
  }
  return logistic_loss(d, yv, b, l2);
}

nlohmann::json to_json(const TrainedModel& model) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : model.features_)
    features.push_back({{"name", f.name}, {"type", to_string(f.type)}, {"min", f.min}, {"max", f.max}});
  nlohmann::json params;
  if (model.trees_.empty()) {
    params["coefficients"] = model.coefficients_;
  } else {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : model.trees_) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto& n : t.nodes) nodes.push_back({n.feature, n.left, n.threshold, n.weight, n.value});
      nlohmann::json tree{{"nodes", std::move(nodes)}};
      if (!t.leaf_values.empty()) {
        nlohmann::json leaves = nlohmann::json::array();
        for (std::size_t i = 0; i < t.leaf_values.size(); ++i)
          if (!t.leaf_values[i].empty()) leaves.push_back({i, t.leaf_values[i]});
        tree["leaf_values"] = std::move(leaves);
      }
      trees.push_back(std::move(tree));
    }
    params["trees"] = std::move(trees);
  }
  return {{"schema_version", kModelSchemaVersion},
          {"spec", to_json(model.spec_)},
          {"outcome", model.outcome_},
          {"outcome_kind", to_string(model.outcome_kind_)},
          {"features", std::move(features)},
          {"n_train", model.n_train_},
          {"loss_trace", model.loss_trace_},
          {"warnings", model.warnings_},
          {"parameters", std::move(params)}};
}

TrainedModel model_from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kModelSchemaVersion)
      throw Error(ErrorCode::SchemaVersionMismatch, "model schema_version " + std::to_string(version) + " is not supported (expected " +
                                                        std::to_string(kModelSchemaVersion) + ")");
    TrainedModel m;
    m.spec_ = spec_from_json(j.at("spec"));
    m.outcome_ = j.at("outcome").get<std::string>();
    const auto ok = j.at("outcome_kind").get<std::string>();
    if (ok != "binary" && ok != "continuous") throw Error(ErrorCode::CorruptFile, "unknown outcome_kind '" + ok + "'");
    m.outcome_kind_ = ok == "binary" ? OutcomeKind::Binary : OutcomeKind::Continuous;
    for (const auto& f : j.at("features")) {
      const auto type = f.at("type").get<std::string>();
      if (type != "binary" && type != "continuous") throw Error(ErrorCode::CorruptFile, "unknown feature type '" + type + "'");
      m.features_.push_back({f.at("name").get<std::string>(), type == "binary" ? ColumnType::Binary : ColumnType::Continuous,
                             f.at("min").get<double>(), f.at("max").get<double>()});
    }
    m.n_train_ = j.at("n_train").get<std::size_t>();
    m.loss_trace_ = j.at("loss_trace").get<std::vector<double>>();
    m.warnings_ = j.at("warnings").get<std::vector<std::string>>();
    const auto& params = j.at("parameters");
    const std::size_t nf = m.features_.size();
    if (m.spec_.kind == ModelKind::LinearRegression || m.spec_.kind == ModelKind::LogisticRegression) {
      m.coefficients_ = params.at("coefficients").get<std::vector<double>>();
      if (m.coefficients_.size() != nf + 1) throw Error(ErrorCode::CorruptFile, "coefficient count does not match features");
    } else {
      for (const auto& tj : params.at("trees")) {
        Tree t;
        for (const auto& nj : tj.at("nodes")) {
          Tree::Node n;
          n.feature = nj.at(0).get<std::int32_t>();
          n.left = nj.at(1).get<std::int32_t>();
          n.threshold = nj.at(2).get<double>();
          n.weight = nj.at(3).get<double>();
          n.value = nj.at(4).get<double>();
          t.nodes.push_back(n);
        }
        const auto size = static_cast<std::int64_t>(t.nodes.size());
        if (size == 0) throw Error(ErrorCode::CorruptFile, "empty tree");
        for (std::int64_t i = 0; i < size; ++i) {
          const auto& n = t.nodes[static_cast<std::size_t>(i)];
          if (n.feature < 0) continue;
          if (n.feature >= static_cast<std::int64_t>(nf) || n.left <= i || n.left + 1 >= size)
            throw Error(ErrorCode::CorruptFile, "tree node " + std::to_string(i) + " is malformed");
        }
        if (tj.contains("leaf_values")) {
          t.leaf_values.resize(t.nodes.size());
          for (const auto& entry : tj.at("leaf_values")) {
            const auto idx = entry.at(0).get<std::size_t>();
            if (idx >= t.nodes.size()) throw Error(ErrorCode::CorruptFile, "leaf index out of range");
            t.leaf_values[idx] = entry.at(1).get<std::vector<std::pair<double, double>>>();
          }
        }
        m.trees_.push_back(std::move(t));
      }
      if (m.trees_.empty()) throw Error(ErrorCode::CorruptFile, "model has no trees");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("malformed model document: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) throw Error(ErrorCode::CorruptFile, e.what());
    throw;
  }
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << to_json(model).dump() << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

TrainedModel load_model(const std::filesystem::path& path) {
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
  return model_from_json(j);
}

}  // namespace mode
