// mode: data generation, discovery, training, what-if queries, experiments
// and the HTTP service from one binary.
//
// Exit codes: 0 success, 1 internal error, 2 usage or validation error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mode/bench.hpp"
#include "mode/bundle.hpp"
#include "mode/error.hpp"
#include "mode/scm.hpp"
#include "mode/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kUsage = 2;
constexpr int kInternal = 1;

// --config PATH: a JSON object whose keys are long flag names; nested objects
// hold subcommand flags, e.g. {"seed": 7, "bench": {"bias": {"reps": 5}}}.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    walk(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void walk(const json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, v] : j.items()) {
      if (v.is_object()) {
        auto next = parents;
        next.push_back(key);
        walk(v, next, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (v.is_array())
        for (const auto& e : v) item.inputs.push_back(scalar(e));
      else
        item.inputs.push_back(scalar(v));
      out.push_back(std::move(item));
    }
  }
};

const CLI::Validator kOpenUnit(
    [](std::string& s) -> std::string {
      try {
        const double v = std::stod(s);
        if (v > 0.0 && v < 1.0) return {};
      } catch (...) {
      }
      return "must lie strictly between 0 and 1";
    },
    "(0,1)");

struct Globals {
  std::uint64_t seed = 20240917;
  bool verbose = false;
  bool json_out = false;
};

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

mode::Instance parse_instance(const std::string& arg) {
  std::error_code ec;
  if (!arg.empty() && arg.front() != '{' && fs::is_regular_file(arg, ec)) {
    std::ifstream in(arg);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      return mode::instance_from_json(json::parse(ss.str()));
    } catch (const json::exception& e) {
      throw mode::Error(mode::ErrorCode::InvalidArgument, "instance file '" + arg + "' is not valid JSON: " + e.what());
    }
  }
  if (!arg.empty() && arg.front() == '{') {
    try {
      return mode::instance_from_json(json::parse(arg));
    } catch (const json::exception& e) {
      throw mode::Error(mode::ErrorCode::InvalidArgument, std::string("inline instance is not valid JSON: ") + e.what());
    }
  }
  // name=value,name=value
  mode::Instance out;
  std::stringstream ss(arg);
  std::string pair;
  while (std::getline(ss, pair, ',')) {
    const auto eq = pair.find('=');
    if (eq == std::string::npos || eq == 0)
      throw mode::Error(mode::ErrorCode::InvalidArgument, "instance entry '" + pair + "' is not name=value");
    const std::string name = pair.substr(0, eq), value = pair.substr(eq + 1);
    if (value == "true" || value == "false") {
      out.set(name, value == "true" ? 1.0 : 0.0);
      continue;
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (...) {
      used = 0;
    }
    if (used == 0 || used != value.size())
      throw mode::Error(mode::ErrorCode::InvalidArgument, "instance value '" + value + "' for '" + name + "' is not a number");
    out.set(name, v);
  }
  if (out.size() == 0) throw mode::Error(mode::ErrorCode::InvalidArgument, "empty instance");
  return out;
}

std::vector<mode::ModelSpec> specs_for(const std::vector<std::string>& kinds, std::size_t trees, std::uint64_t seed) {
  std::vector<mode::ModelSpec> out;
  for (const auto& k : kinds) {
    mode::ModelSpec s;
    s.kind = mode::model_kind_from_string(k);
    s.n_trees = trees;
    s.seed = seed;
    out.push_back(s);
  }
  return out;
}

std::string fmt(double v, const char* f = "%.4f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void print_report(const mode::WhatIfReport& r) {
  std::cout << "prediction: " << fmt(r.predicted);
  if (r.prediction_kind == "probability") std::cout << " (probability of class " << r.class_of_interest.value_or("1") << ")";
  else if (r.prediction_kind == "exceedance") std::cout << " (P(" << r.class_of_interest.value_or("") << "))";
  std::cout << "\ntop " << r.top_k.size() << " of " << r.ranking.size() << " parents by CDE:\n";
  for (const auto& e : r.top_k)
    std::cout << "  " << e.rank << ". " << e.feature << "  " << fmt(e.control, "%g") << " -> " << fmt(e.treated, "%g")
              << "  cde " << fmt(e.cde, "%+.4f") << "  new prediction " << fmt(e.new_prediction) << '\n';
  if (!r.excluded.empty()) {
    std::cout << "excluded by discovery (cde 0):";
    for (const auto& f : r.excluded) std::cout << ' ' << f;
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-based causal what-if analysis"};
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file of flag values; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);

  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_flag("--verbose", g.verbose, "Diagnostics on stderr; discovery trace on stdout");
  app.add_flag("--json", g.json_out, "Machine-readable output");

  // gen
  auto* gen = app.add_subcommand("gen", "Sample a dataset from a built-in structural model");
  std::string scm_id, gen_out;
  std::size_t gen_n = 0;
  std::optional<int> env;
  bool binarize = false;
  gen->add_option("--scm", scm_id, "Model")->required()->check(CLI::IsMember({"g1", "g2", "wine", "fig1a", "fig1b"}));
  gen->add_option("--n", gen_n, "Rows")->required()->check(CLI::PositiveNumber);
  gen->add_option("--env", env, "Environment for wine")->check(CLI::IsMember({0, 1}));
  gen->add_flag("--binarize-outcome", binarize, "Outcome becomes 1 above its median");
  gen->add_option("--out", gen_out, "CSV path")->required();

  // discover
  auto* discover = app.add_subcommand("discover", "Find the parents of the outcome");
  std::string data_path, outcome;
  double alpha = 0.05;
  std::size_t max_cond = 3;
  discover->add_option("--data", data_path, "CSV path")->required();
  discover->add_option("--outcome", outcome, "Outcome column")->required();
  discover->add_option("--alpha", alpha, "Significance level")->check(kOpenUnit)->capture_default_str();
  discover->add_option("--max-cond", max_cond, "Largest conditioning set")->capture_default_str();

  // train
  auto* trainc = app.add_subcommand("train", "Discover parents and fit a model on them");
  std::string model_kind = "rf", model_out;
  std::optional<std::size_t> trees, max_depth, max_features, min_leaf;
  bool all_features = false, keep_leaf_values = false;
  std::optional<std::string> positive_label;
  trainc->add_option("--data", data_path, "CSV path")->required();
  trainc->add_option("--outcome", outcome, "Outcome column")->required();
  trainc->add_option("--model", model_kind, "lr|logreg|dt|rf")
      ->check(CLI::IsMember({"lr", "logreg", "dt", "rf"}))
      ->capture_default_str();
  trainc->add_option("--trees", trees, "Forest size")->check(CLI::PositiveNumber);
  trainc->add_option("--max-depth", max_depth, "Tree depth limit")->check(CLI::PositiveNumber);
  trainc->add_option("--min-leaf", min_leaf, "Minimum leaf size")->check(CLI::PositiveNumber);
  trainc->add_option("--max-features", max_features, "Features tried per split")->check(CLI::PositiveNumber);
  trainc->add_option("--alpha", alpha, "Significance level")->check(kOpenUnit)->capture_default_str();
  trainc->add_option("--max-cond", max_cond, "Largest conditioning set")->capture_default_str();
  trainc->add_option("--positive-label", positive_label, "Outcome level coded as 1");
  trainc->add_flag("--all-features", all_features, "Skip discovery and use every feature");
  trainc->add_flag("--keep-leaf-values", keep_leaf_values, "Store leaf samples for exceedance queries");
  trainc->add_option("--out", model_out, "Model file")->required();

  // whatif
  auto* whatif = app.add_subcommand("whatif", "Rank the controlled direct effects of each parent");
  std::string model_path, instance_arg, rank_by = "signed";
  std::optional<std::string> class_label;
  std::optional<double> exceedance;
  long long k = 3;
  double delta = 1.0;
  whatif->add_option("--model", model_path, "Model file")->required();
  whatif->add_option("--instance", instance_arg, "JSON file, inline JSON, or name=value,...")->required();
  whatif->add_option("--k", k, "Entries to report")->capture_default_str();
  whatif->add_option("--delta", delta, "Step for continuous features")->capture_default_str();
  whatif->add_option("--class-of-interest", class_label, "Outcome class whose probability is reported");
  whatif->add_option("--rank-by", rank_by, "signed|absolute")->check(CLI::IsMember({"signed", "absolute"}))->capture_default_str();
  whatif->add_option("--exceedance", exceedance, "Report P(Y > threshold) for continuous outcomes");

  // bench
  auto* benchc = app.add_subcommand("bench", "Run an experiment and write markdown and CSV reports");
  benchc->require_subcommand(1);
  std::string bench_out = ".";
  std::vector<std::string> kinds{"lr", "dt", "rf"};
  std::size_t reps = 30, bench_trees = 500;
  bool scale100 = false;
  auto* bias = benchc->add_subcommand("bias", "CDE bias with discovered parents against all variables");
  std::string bias_scm = "g1";
  std::vector<std::size_t> sizes{2000, 20000};
  bias->add_option("--scm", bias_scm, "g1|g2")->check(CLI::IsMember({"g1", "g2"}))->capture_default_str();
  bias->add_option("--sizes", sizes, "Sample sizes")->delimiter(',')->check(CLI::PositiveNumber);
  bias->add_option("--alpha", alpha, "Significance level")->check(kOpenUnit)->capture_default_str();
  bias->add_option("--max-cond", max_cond, "Largest conditioning set")->capture_default_str();
  bias->add_flag("--scale100", scale100, "Show biases multiplied by 100");
  auto* robust = benchc->add_subcommand("robust", "Prediction error under an environment shift");
  std::size_t robust_n = 10000;
  double train_fraction = 0.7;
  robust->add_option("--n", robust_n, "Rows per environment")->capture_default_str();
  robust->add_option("--train-fraction", train_fraction, "Training share of each sample")->check(kOpenUnit)->capture_default_str();
  for (auto* sub : {bias, robust}) {
    sub->add_option("--reps", reps, "Replicates")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--models", kinds, "Model kinds")->delimiter(',')->check(CLI::IsMember({"lr", "logreg", "dt", "rf"}));
    sub->add_option("--trees", bench_trees, "Forest size")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--out", bench_out, "Report directory")->capture_default_str();
  }

  // serve
  auto* servec = app.add_subcommand("serve", "HTTP JSON API over a model directory");
  std::optional<std::string> model_dir;
  int port = 8080;
  std::string bind = "127.0.0.1";
  std::vector<std::string> origins;
  servec->add_option("--model-dir", model_dir, "Directory of model files, also where new models are saved");
  servec->add_option("--port", port, "Port")->check(CLI::Range(1, 65535))->capture_default_str();
  servec->add_option("--bind", bind, "Address")->capture_default_str();
  servec->add_option("--cors-origin", origins, "Allowed browser origin (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  auto log = [&](const std::string& msg) {
    if (g.verbose) std::cerr << msg << '\n';
  };
  const auto t0 = std::chrono::steady_clock::now();

  try {
    if (gen->parsed()) {
      const bool wine = scm_id == "wine";
      if (wine != env.has_value())
        throw CLI::ValidationError("--env", wine ? "--env is required for --scm wine" : "--env only applies to --scm wine");
      const auto scm = mode::make_named(wine ? "wine" + std::to_string(*env) : scm_id);
      auto table = mode::sample(scm, gen_n, g.seed);
      if (binarize) table = mode::binarize_by_median(table, std::vector<std::string>{table.outcome()});
      mode::write_csv(table, gen_out);
      if (g.json_out) print_json({{"path", gen_out}, {"rows", table.n_rows()}, {"columns", table.n_cols()}, {"outcome", table.outcome()}});
      else std::cout << "wrote " << table.n_rows() << " rows x " << table.n_cols() << " columns to " << gen_out << '\n';
    } else if (discover->parsed()) {
      const auto data = mode::prepare_data(mode::load_csv(data_path, outcome)).table;
      const auto ps = mode::find_parents(data, {alpha, max_cond, true});
      log(std::to_string(ps.trace.size()) + " independence tests");
      if (g.json_out) {
        auto j = mode::to_json(ps);
        if (!g.verbose) j.erase("trace");
        print_json(j);
      } else {
        for (std::size_t i = 0; i < ps.parents.size(); ++i) std::cout << (i ? " " : "") << ps.parents[i];
        std::cout << '\n';
        if (g.verbose)
          for (const auto& t : ps.trace) {
            std::cout << mode::to_string(t.phase) << ' ' << t.feature << " | {";
            for (std::size_t i = 0; i < t.conditioning.size(); ++i) std::cout << (i ? "," : "") << t.conditioning[i];
            std::cout << "} p=" << fmt(t.p_value, "%.3g") << (t.independent ? " independent" : " dependent") << '\n';
          }
      }
    } else if (trainc->parsed()) {
      mode::FitOptions fit;
      fit.spec.kind = mode::model_kind_from_string(model_kind);
      fit.spec.seed = g.seed;
      if (trees) fit.spec.n_trees = *trees;
      if (max_depth) fit.spec.max_depth = *max_depth;
      if (min_leaf) fit.spec.min_leaf = *min_leaf;
      if (max_features) fit.spec.max_features = *max_features;
      fit.spec.keep_leaf_values = keep_leaf_values;
      fit.discovery = {alpha, max_cond, true};
      fit.all_features = all_features;
      fit.positive_label = positive_label;
      const auto res = mode::fit_bundle(mode::load_csv(data_path, outcome), fit);
      mode::save_bundle(res.bundle, model_out);
      for (const auto& w : res.bundle.model.warnings()) std::cerr << "warning: " << w << '\n';
      const auto ref = mode::model_fingerprint(res.bundle.model);
      if (g.json_out) {
        print_json({{"model_path", model_out},
                    {"model_ref", ref},
                    {"parents", res.parents.parents},
                    {"excluded", res.bundle.excluded},
                    {"warnings", res.bundle.model.warnings()}});
      } else {
        std::cout << "parents:";
        for (const auto& p : res.parents.parents) std::cout << ' ' << p;
        std::cout << "\nmodel " << ref << " written to " << model_out << '\n';
      }
    } else if (whatif->parsed()) {
      if (k < 1) throw CLI::ValidationError("--k", "must be at least 1");
      const auto bundle = mode::load_bundle(model_path);
      const auto instance = parse_instance(instance_arg);
      mode::check_instance(bundle, instance);
      // Same option parsing as the HTTP API so both produce identical reports.
      json req{{"k", k}, {"delta", delta}, {"rank_by", rank_by}};
      if (class_label) req["class_of_interest"] = *class_label;
      if (exceedance) req["exceedance_threshold"] = *exceedance;
      const auto report = mode::what_if(bundle.model, instance, mode::service::whatif_options(bundle, req));
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
      if (g.json_out) print_json(mode::to_json(report));
      else print_report(report);
    } else if (benchc->parsed()) {
      fs::create_directories(bench_out);
      const auto specs = specs_for(kinds, bench_trees, g.seed);
      std::string stem, md, csv;
      json rows_json = json::array();
      if (bias->parsed()) {
        mode::bench::BiasConfig c;
        c.scm_id = bias_scm;
        c.sizes = sizes;
        c.reps = reps;
        c.specs = specs;
        c.seed = g.seed;
        c.alpha = alpha;
        c.max_cond = max_cond;
        const auto rows = mode::bench::bias_experiment(c);
        stem = "bias";
        md = mode::bench::render(rows, {mode::bench::Format::Markdown, scale100});
        csv = mode::bench::render(rows, {mode::bench::Format::Csv, false});
        for (const auto& r : rows)
          rows_json.push_back({{"model_kind", mode::to_string(r.model_kind)}, {"n", r.n}, {"variant", mode::bench::to_string(r.variant)},
                               {"mean_abs_bias", r.mean_abs_bias}, {"std_abs_bias", r.std_abs_bias}, {"reps", r.reps}});
      } else {
        mode::bench::RobustConfig c;
        c.n = robust_n;
        c.reps = reps;
        c.specs = specs;
        c.seed = g.seed;
        c.train_fraction = train_fraction;
        const auto rows = mode::bench::robustness_experiment(c);
        stem = "robust";
        md = mode::bench::render(rows, {mode::bench::Format::Markdown, false});
        csv = mode::bench::render(rows, {mode::bench::Format::Csv, false});
        for (const auto& r : rows)
          rows_json.push_back({{"model_kind", mode::to_string(r.model_kind)}, {"variant", mode::bench::to_string(r.variant)},
                               {"train_env", r.train_env}, {"test_env", r.test_env}, {"mse_mean", r.mse_mean},
                               {"mse_std", r.mse_std}, {"rmse_mean", r.rmse_mean}, {"rmse_std", r.rmse_std}, {"reps", r.reps}});
      }
      mode::bench::emit_report(md, fs::path(bench_out) / (stem + ".md"));
      mode::bench::emit_report(csv, fs::path(bench_out) / (stem + ".csv"));
      if (g.json_out) print_json({{"experiment", stem}, {"rows", rows_json}});
      else std::cout << md;
    } else if (servec->parsed()) {
      mode::service::Options opts;
      opts.fixture_seed = g.seed;
      if (!origins.empty()) opts.cors_origins = origins;
      if (model_dir) {
        fs::create_directories(*model_dir);
        opts.model_dir = fs::path(*model_dir);
      }
      mode::service::Api api(opts);
      if (model_dir) std::cerr << "loaded " << api.load_model_dir(*model_dir) << " models from " << *model_dir << '\n';
      mode::service::HttpServer server(api);
      const int bound = server.bind(bind, port);
      std::cerr << "listening on http://" << bind << ':' << bound << '\n';
      server.run();
    }
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  } catch (const mode::Error& e) {
    std::cerr << "error [" << mode::to_string(e.code()) << "]: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  log("done in " + fmt(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), "%.2f") + " s");
  return 0;
}
