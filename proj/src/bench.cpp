#include "mode/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>

#include "mode/discovery.hpp"
#include "mode/error.hpp"
#include "mode/mode.hpp"
#include "mode/rng.hpp"

namespace mode::bench {
namespace {

constexpr const char* kTreatment = "X1";

struct MeanStd {
  double mean = 0.0;
  double sd = 0.0;
};

// Sample standard deviation (n - 1); zero for a single value.
MeanStd summarize(const std::vector<double>& v) {
  MeanStd out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return out;
}

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string model_label(ModelKind k) {
  switch (k) {
    case ModelKind::LinearRegression: return "LR";
    case ModelKind::LogisticRegression: return "LogReg";
    case ModelKind::DecisionTree: return "DT";
    case ModelKind::RandomForest: return "RF";
  }
  return "?";
}

std::vector<ModelSpec> specs_from_json(const nlohmann::json& j) {
  std::vector<ModelSpec> out;
  for (const auto& e : j) {
    if (e.is_string()) {
      ModelSpec s;
      s.kind = model_kind_from_string(e.get<std::string>());
      out.push_back(s);
    } else {
      out.push_back(spec_from_json(e));
    }
  }
  return out;
}

double mse(const std::vector<double>& pred, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (pred[i] - y[i]) * (pred[i] - y[i]);
  return s / static_cast<double>(y.size());
}

}  // namespace

std::string_view to_string(Variant v) { return v == Variant::ParentsOnly ? "parents" : "all"; }

std::vector<ModelSpec> default_specs(std::uint64_t seed) {
  std::vector<ModelSpec> out;
  for (auto k : {ModelKind::LinearRegression, ModelKind::DecisionTree, ModelKind::RandomForest}) {
    ModelSpec s;
    s.kind = k;
    s.seed = seed;
    out.push_back(s);
  }
  return out;
}

double cde_bias(const TrainedModel& model, const DataTable& data, const Scm& scm) {
  const auto features = model.feature_names();
  const bool has_treatment = std::find(features.begin(), features.end(), kTreatment) != features.end();
  // Context variables: the other model features plus the other true parents,
  // so the oracle sees a full parent context.
  std::vector<std::string> context_vars;
  for (const auto& f : features)
    if (f != kTreatment) context_vars.push_back(f);
  std::vector<std::string> true_parents;
  for (auto p : scm.parents(scm.outcome_index()))
    if (scm.node(p).name != kTreatment) true_parents.push_back(scm.node(p).name);
  for (const auto& p : true_parents)
    if (std::find(context_vars.begin(), context_vars.end(), p) == context_vars.end()) context_vars.push_back(p);

  std::vector<const std::vector<double>*> cols;
  for (const auto& v : context_vars) cols.push_back(&data.column(v).values);
  std::map<std::vector<double>, std::size_t> support;
  std::vector<double> key(cols.size());
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) key[c] = (*cols[c])[r];
    ++support[key];
  }

  std::map<std::vector<double>, double> truth_cache;
  double bias = 0.0;
  for (const auto& [ctx, count] : support) {
    Instance inst;
    for (std::size_t c = 0; c < ctx.size(); ++c) inst.set(context_vars[c], ctx[c]);
    inst.set(kTreatment, 0.0);
    const double estimate = has_treatment ? estimate_cde(model, inst, kTreatment).cde : 0.0;
    std::vector<double> parent_ctx;
    Instance oracle_ctx;
    for (const auto& p : true_parents) {
      parent_ctx.push_back(inst.at(p));
      oracle_ctx.set(p, inst.at(p));
    }
    auto it = truth_cache.find(parent_ctx);
    if (it == truth_cache.end())
      it = truth_cache.emplace(parent_ctx, true_cde(scm, kTreatment, oracle_ctx, 1.0, 0.0).value).first;
    bias += static_cast<double>(count) * std::abs(estimate - it->second);
  }
  return bias / static_cast<double>(data.n_rows());
}

std::vector<BiasRow> bias_experiment(const BiasConfig& config, kernels::Exec exec) {
  if (config.sizes.empty() || config.reps == 0)
    throw Error(ErrorCode::InvalidArgument, "bias experiment needs sizes and at least one replicate");
  for (auto n : config.sizes)
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "sample sizes must be positive");
  const auto specs = config.specs.empty() ? default_specs(config.seed) : config.specs;
  for (const auto& s : specs) s.validate();
  const Scm scm = make_named(config.scm_id);
  const DiscoveryOptions discovery{config.alpha, config.max_cond, true};

  const std::size_t jobs = config.sizes.size() * config.reps;
  // bias[job][spec][variant]
  std::vector<std::vector<std::array<double, 2>>> bias(jobs, std::vector<std::array<double, 2>>(specs.size()));
  kernels::for_each_index(
      jobs,
      [&](std::size_t job) {
        const std::size_t si = job / config.reps, rep = job % config.reps;
        const std::size_t n = config.sizes[si];
        const auto data = sample(scm, n, rng::derive(config.seed, n, rep), kernels::Exec::Serial);
        const auto parents = find_parents(data, discovery).parents;
        const auto all = data.feature_names();
        for (std::size_t k = 0; k < specs.size(); ++k) {
          ModelSpec spec = specs[k];
          spec.seed = rng::derive(specs[k].seed, n, rep);
          for (int v = 0; v < 2; ++v) {
            const auto& features = v == 0 ? parents : all;
            if (features.empty()) {
              // Nothing discovered: every CDE is read as zero.
              bias[job][k][v] = std::abs(true_cde(scm, kTreatment, {}, 1.0, 0.0).value);
              continue;
            }
            const auto model = train(spec, project(data, features), kernels::Exec::Serial);
            bias[job][k][v] = cde_bias(model, data, scm);
          }
        }
      },
      exec);

  std::vector<BiasRow> rows;
  for (std::size_t k = 0; k < specs.size(); ++k)
    for (std::size_t si = 0; si < config.sizes.size(); ++si)
      for (int v = 0; v < 2; ++v) {
        std::vector<double> vals;
        for (std::size_t rep = 0; rep < config.reps; ++rep) vals.push_back(bias[si * config.reps + rep][k][v]);
        const auto s = summarize(vals);
        rows.push_back({specs[k].kind, config.sizes[si], v == 0 ? Variant::ParentsOnly : Variant::AllVariables, s.mean, s.sd,
                        config.reps});
      }
  return rows;
}

std::vector<RobustRow> robustness_experiment(const RobustConfig& config, kernels::Exec exec) {
  if (config.n < 100) throw Error(ErrorCode::InvalidArgument, "robustness experiment needs n >= 100");
  if (config.reps == 0) throw Error(ErrorCode::InvalidArgument, "robustness experiment needs at least one replicate");
  const auto specs = config.specs.empty() ? default_specs(config.seed) : config.specs;
  for (const auto& s : specs) s.validate();
  const std::array<Scm, 2> envs{make_wine(0), make_wine(1)};
  const std::array<std::vector<std::string>, 2> inputs{std::vector<std::string>{"X1", "X2", "X3"},
                                                       std::vector<std::string>{"X1", "X2", "X3", "P"}};
  constexpr std::array<std::pair<int, int>, 4> kPairs{{{0, 0}, {1, 1}, {0, 1}, {1, 0}}};

  // err[rep][spec][variant][pair]
  using Cell = std::array<std::array<double, 4>, 2>;
  std::vector<std::vector<Cell>> err(config.reps, std::vector<Cell>(specs.size()));
  kernels::for_each_index(
      config.reps,
      [&](std::size_t rep) {
        std::array<std::optional<DataTable>, 2> train_set, test_set;
        for (int e = 0; e < 2; ++e) {
          const auto data = sample(envs[e], config.n, rng::derive(config.seed, rep, e), kernels::Exec::Serial);
          auto [tr, te] = split(data, config.train_fraction, rng::derive(config.seed, rep, e + 2));
          train_set[e] = std::move(tr);
          test_set[e] = std::move(te);
        }
        for (std::size_t k = 0; k < specs.size(); ++k) {
          ModelSpec spec = specs[k];
          for (int v = 0; v < 2; ++v) {
            for (int a = 0; a < 2; ++a) {
              spec.seed = rng::derive(specs[k].seed, rep, a);
              const auto model = train(spec, project(*train_set[a], inputs[v]), kernels::Exec::Serial);
              for (std::size_t p = 0; p < kPairs.size(); ++p) {
                if (kPairs[p].first != a) continue;
                const auto& test = *test_set[kPairs[p].second];
                err[rep][k][v][p] = mse(predict_table(model, test, kernels::Exec::Serial), test.outcome_column().values);
              }
            }
          }
        }
      },
      exec);

  std::vector<RobustRow> rows;
  for (std::size_t k = 0; k < specs.size(); ++k)
    for (int v = 0; v < 2; ++v)
      for (std::size_t p = 0; p < kPairs.size(); ++p) {
        std::vector<double> m, r;
        for (std::size_t rep = 0; rep < config.reps; ++rep) {
          m.push_back(err[rep][k][v][p]);
          r.push_back(std::sqrt(err[rep][k][v][p]));
        }
        const auto ms = summarize(m), rs = summarize(r);
        rows.push_back({specs[k].kind, v == 0 ? Variant::ParentsOnly : Variant::AllVariables, kPairs[p].first,
                        kPairs[p].second, ms.mean, ms.sd, rs.mean, rs.sd, config.reps});
      }
  return rows;
}

std::string render(const std::vector<BiasRow>& rows, const ReportOptions& options) {
  const double scale = options.scale100 ? 100.0 : 1.0;
  const int digits = options.scale100 ? 2 : 4;
  std::string out;
  if (options.format == Format::Csv) {
    out = "model_kind,n,variant,mean_abs_bias,std_abs_bias,reps\n";
    for (const auto& r : rows)
      out += std::string(to_string(r.model_kind)) + "," + std::to_string(r.n) + "," + std::string(to_string(r.variant)) + "," +
             fmt(scale * r.mean_abs_bias, 8) + "," + fmt(scale * r.std_abs_bias, 8) + "," + std::to_string(r.reps) + "\n";
    return out;
  }
  out = std::string("Absolute CDE bias of X1") + (options.scale100 ? " (x100)" : "") +
        ". Rows marked ** use the discovered parents.\n\n| Model | n | Inputs | Bias (mean ± std) |\n|---|---|---|---|\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const bool first = i == 0 || rows[i - 1].model_kind != r.model_kind || rows[i - 1].n != r.n;
    const std::string cell = fmt(scale * r.mean_abs_bias, digits) + " ± " + fmt(scale * r.std_abs_bias, digits);
    const bool parents = r.variant == Variant::ParentsOnly;
    out += "| " + (first ? model_label(r.model_kind) : std::string()) + " | " + (first ? std::to_string(r.n) : std::string()) +
           " | " + (parents ? "**parents**" : "all variables") + " | " + (parents ? "**" + cell + "**" : cell) + " |\n";
  }
  return out;
}

std::string render(const std::vector<RobustRow>& rows, const ReportOptions& options) {
  std::string out;
  if (options.format == Format::Csv) {
    out = "model_kind,variant,env_pair,mse_mean,mse_std,rmse_mean,rmse_std,reps\n";
    for (const auto& r : rows)
      out += std::string(to_string(r.model_kind)) + "," + std::string(to_string(r.variant)) + "," +
             std::to_string(r.train_env) + "->" + std::to_string(r.test_env) + "," + fmt(r.mse_mean, 8) + "," +
             fmt(r.mse_std, 8) + "," + fmt(r.rmse_mean, 8) + "," + fmt(r.rmse_std, 8) + "," + std::to_string(r.reps) + "\n";
    return out;
  }
  // One line per (model, variant) with the four environment pairs as columns.
  auto table = [&](const std::string& title, bool use_mse) {
    std::string t = title + "\n\n| Model | Inputs | 0→0 | 1→1 | 0→1 | 1→0 |\n|---|---|---|---|---|---|\n";
    for (std::size_t i = 0; i < rows.size();) {
      const auto& head = rows[i];
      const bool parents = head.variant == Variant::ParentsOnly;
      t += "| " + model_label(head.model_kind) + " | " + (parents ? "**parents**" : "all variables") + " |";
      std::size_t j = i;
      for (; j < rows.size() && rows[j].model_kind == head.model_kind && rows[j].variant == head.variant; ++j) {
        const double m = use_mse ? rows[j].mse_mean : rows[j].rmse_mean;
        const double s = use_mse ? rows[j].mse_std : rows[j].rmse_std;
        t += " " + fmt(m, 3) + " ± " + fmt(s, 3) + " |";
      }
      t += "\n";
      i = j;
    }
    return t;
  };
  return table("Test MSE of Y by training → test environment.", true) + "\n" +
         table("Test RMSE of Y by training → test environment.", false);
}

void emit_report(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

BiasConfig bias_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "bias config must be a JSON object");
  BiasConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "scm") c.scm_id = v.get<std::string>();
      else if (key == "sizes") c.sizes = v.get<std::vector<std::size_t>>();
      else if (key == "reps") c.reps = v.get<std::size_t>();
      else if (key == "models") c.specs = specs_from_json(v);
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "alpha") c.alpha = v.get<double>();
      else if (key == "max_cond") c.max_cond = v.get<std::size_t>();
      else throw Error(ErrorCode::InvalidArgument, "unknown bias config field '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed bias config: ") + e.what());
  }
  if (c.scm_id != "g1" && c.scm_id != "g2") throw Error(ErrorCode::InvalidArgument, "bias experiment runs on g1 or g2");
  return c;
}

RobustConfig robust_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "robustness config must be a JSON object");
  RobustConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "n") c.n = v.get<std::size_t>();
      else if (key == "reps") c.reps = v.get<std::size_t>();
      else if (key == "models") c.specs = specs_from_json(v);
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "train_fraction") c.train_fraction = v.get<double>();
      else throw Error(ErrorCode::InvalidArgument, "unknown robustness config field '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed robustness config: ") + e.what());
  }
  return c;
}

}  // namespace mode::bench
