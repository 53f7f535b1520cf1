#include "mode/service.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <mutex>

#include <httplib.h>

#include "mode/error.hpp"
#include "mode/rng.hpp"
#include "mode/scm.hpp"

namespace mode::service {
namespace {

struct FixtureDef {
  const char* id;
  const char* scm;
  std::size_t n;
  bool binarize;
};

constexpr FixtureDef kFixtures[] = {
    {"g1-2k", "g1", 2000, false},          {"g1-10k", "g1", 10000, false},
    {"g1-20k", "g1", 20000, false},        {"g1-binary-10k", "g1", 10000, true},
    {"g2-2k", "g2", 2000, false},          {"g2-10k", "g2", 10000, false},
    {"wine0-10k", "wine0", 10000, false},  {"wine1-10k", "wine1", 10000, false},
    {"fig1a-10k", "fig1a", 10000, false},  {"fig1b-10k", "fig1b", 10000, false},
};

Response error(int status, std::string_view code, const std::string& detail) {
  return {status, {{"error", code}, {"detail", detail}}};
}

int status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError: return 500;
    default: return 400;
  }
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void reject_unknown_fields(const nlohmann::json& body, std::initializer_list<std::string_view> allowed) {
  if (!body.is_object()) throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
  for (const auto& [key, v] : body.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw Error(ErrorCode::InvalidArgument, "unknown field '" + key + "'");
}

std::vector<std::string_view> segments(std::string_view path) {
  std::vector<std::string_view> out;
  while (!path.empty()) {
    if (path.front() == '/') {
      path.remove_prefix(1);
      continue;
    }
    const auto end = path.find('/');
    out.push_back(path.substr(0, end));
    if (end == std::string_view::npos) break;
    path.remove_prefix(end);
  }
  return out;
}

// Converts JSON type errors into validation errors and library errors into
// structured bodies.
template <typename F>
Response guarded(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    return error(status_of(e.code()), to_string(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return error(400, "InvalidArgument", std::string("malformed request: ") + e.what());
  } catch (const std::exception&) {
    return error(500, "Internal", "internal error");
  }
}

}  // namespace

std::string Response::text() const { return body.dump(2); }

std::pair<Registry::EntryPtr, bool> Registry::insert(ModelEntry entry) {
  auto ptr = std::make_shared<const ModelEntry>(std::move(entry));
  std::unique_lock lock(mutex_);
  auto [it, inserted] = entries_.emplace(ptr->id, ptr);
  return {it->second, inserted};
}

Registry::EntryPtr Registry::find(std::string_view id) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : it->second;
}

std::vector<Registry::EntryPtr> Registry::list() const {
  std::shared_lock lock(mutex_);
  std::vector<EntryPtr> out;
  for (const auto& [id, e] : entries_) out.push_back(e);
  return out;
}

std::size_t Registry::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::vector<std::string> fixture_ids() {
  std::vector<std::string> out;
  for (const auto& f : kFixtures) out.emplace_back(f.id);
  return out;
}

std::optional<DataTable> fixture(std::string_view id, std::uint64_t seed) {
  for (std::size_t i = 0; i < std::size(kFixtures); ++i) {
    const auto& f = kFixtures[i];
    if (id != f.id) continue;
    DataTable t = sample(make_named(f.scm), f.n, rng::derive(seed, i));
    return f.binarize ? binarize_by_median(t, std::vector<std::string>{t.outcome()}) : t;
  }
  return std::nullopt;
}

bool url_safe(std::string_view id) {
  if (id.empty() || id.size() > 128) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
  });
}

nlohmann::json metadata(const ModelEntry& entry) {
  const auto& m = entry.bundle.model;
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : m.features())
    features.push_back({{"name", f.name}, {"kind", to_string(f.type)}, {"min", f.min}, {"max", f.max}});
  nlohmann::json classes = nullptr;
  if (m.outcome_kind() == OutcomeKind::Binary) {
    classes = entry.bundle.outcome_labels
                  ? nlohmann::json{entry.bundle.outcome_labels->first, entry.bundle.outcome_labels->second}
                  : nlohmann::json{"0", "1"};
  }
  return {{"model_id", entry.id},
          {"name", entry.name},
          {"created_at", entry.created_at},
          {"model_kind", to_string(m.kind())},
          {"outcome", m.outcome()},
          {"outcome_kind", to_string(m.outcome_kind())},
          {"classes", classes},
          {"class_of_interest", m.outcome_kind() == OutcomeKind::Binary ? classes[1] : nlohmann::json(nullptr)},
          {"features", std::move(features)},
          {"parents", m.feature_names()},
          {"excluded", entry.bundle.excluded},
          {"n_train", m.n_train()},
          {"model_ref", model_fingerprint(m)},
          {"warnings", m.warnings()}};
}

WhatIfOptions whatif_options(const ModelBundle& bundle, const nlohmann::json& body) {
  int cls = 1;
  if (body.contains("class_of_interest")) {
    const auto& c = body.at("class_of_interest");
    if (c.is_string()) cls = class_code(bundle, c.get<std::string>());
    else if (c.is_number_integer()) cls = class_code(bundle, std::to_string(c.get<long long>()));
    else throw Error(ErrorCode::InvalidArgument, "class_of_interest must be a label or 0/1");
  }
  WhatIfOptions o = whatif_defaults(bundle, cls);
  if (body.contains("k")) {
    const auto& k = body.at("k");
    if (!k.is_number_integer() || k.get<long long>() < 0) throw Error(ErrorCode::InvalidArgument, "k must be a positive integer");
    o.k = k.get<std::size_t>();
  }
  if (body.contains("delta")) o.delta = body.at("delta").get<double>();
  if (body.contains("delta_overrides"))
    for (const auto& [name, d] : body.at("delta_overrides").items()) o.delta_overrides[name] = d.get<double>();
  if (body.contains("rank_by")) {
    const auto r = body.at("rank_by").get<std::string>();
    if (r == "signed") o.rank_by = RankBy::Signed;
    else if (r == "absolute") o.rank_by = RankBy::Absolute;
    else throw Error(ErrorCode::InvalidArgument, "rank_by must be 'signed' or 'absolute'");
  }
  if (body.contains("exceedance_threshold") && !body.at("exceedance_threshold").is_null())
    o.exceedance_threshold = body.at("exceedance_threshold").get<double>();
  o.validate();
  return o;
}

Api::Api(Options options) : options_(std::move(options)) {}

std::optional<std::string> Api::allowed_origin(std::string_view origin) const {
  for (const auto& o : options_.cors_origins)
    if (o == "*" || o == origin) return std::string(origin);
  return std::nullopt;
}

std::string Api::add(ModelBundle bundle, std::string name, std::optional<std::string> id) {
  ModelEntry e;
  e.id = id ? *id : model_fingerprint(bundle.model);
  if (!url_safe(e.id)) throw Error(ErrorCode::InvalidArgument, "model id '" + e.id + "' is not URL-safe");
  e.name = name.empty() ? e.id : std::move(name);
  e.created_at = utc_now();
  e.bundle = std::move(bundle);
  auto [ptr, inserted] = registry_.insert(std::move(e));
  if (inserted && options_.model_dir) save_bundle(ptr->bundle, *options_.model_dir / (ptr->id + ".json"));
  return ptr->id;
}

std::size_t Api::load_model_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw Error(ErrorCode::IoError, "'" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& de : std::filesystem::directory_iterator(dir))
    if (de.is_regular_file() && de.path().extension() == ".json") files.push_back(de.path());
  std::sort(files.begin(), files.end());
  std::size_t loaded = 0;
  for (const auto& f : files) {
    const std::string stem = f.stem().string();
    if (!url_safe(stem)) continue;
    auto bundle = load_bundle(f);
    // Already on disk; keep the write-back off for this insert.
    ModelEntry e{stem, stem, utc_now(), std::move(bundle)};
    if (registry_.insert(std::move(e)).second) ++loaded;
  }
  return loaded;
}

Response Api::handle(std::string_view method, std::string_view path, std::string_view body) {
  if (body.size() > options_.max_body_bytes)
    return error(413, "PayloadTooLarge",
                 "request body exceeds " + std::to_string(options_.max_body_bytes) + " bytes; use the command line for large data");
  const auto seg = segments(path);
  if (seg.size() < 2 || seg[0] != "api") return error(404, "NotFound", "no route for '" + std::string(path) + "'");

  auto parse = [&](nlohmann::json& out) -> std::optional<Response> {
    try {
      out = body.empty() ? nlohmann::json::object() : nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      return error(400, "MalformedJson", e.what());
    }
    return std::nullopt;
  };
  auto not_allowed = [&] { return error(405, "MethodNotAllowed", std::string(method) + " is not allowed on '" + std::string(path) + "'"); };

  if (seg.size() == 2 && seg[1] == "health") {
    if (method != "GET") return not_allowed();
    return {200, {{"status", "ok"}}};
  }
  if (seg[1] != "models" || seg.size() > 4) return error(404, "NotFound", "no route for '" + std::string(path) + "'");
  nlohmann::json j;
  if (seg.size() == 2) {
    if (method == "GET") return list_models();
    if (method != "POST") return not_allowed();
    if (auto bad = parse(j)) return *bad;
    return guarded([&] { return create_model(j); });
  }
  const std::string_view id = seg[2];
  if (seg.size() == 3) {
    if (method != "GET") return not_allowed();
    return get_model(id);
  }
  if (seg[3] != "whatif" && seg[3] != "intervene") return error(404, "NotFound", "no route for '" + std::string(path) + "'");
  if (method != "POST") return not_allowed();
  if (auto bad = parse(j)) return *bad;
  return guarded([&] { return seg[3] == "whatif" ? whatif(id, j) : intervene(id, j); });
}

Response Api::create_model(const nlohmann::json& body) {
  reject_unknown_fields(body, {"csv", "fixture_id", "outcome", "model_spec", "alpha", "max_cond", "all_features",
                               "positive_label", "name"});
  const bool has_csv = body.contains("csv"), has_fixture = body.contains("fixture_id");
  if (has_csv == has_fixture) throw Error(ErrorCode::InvalidArgument, "give exactly one of 'csv' and 'fixture_id'");

  std::optional<DataTable> raw;
  std::string name;
  if (has_fixture) {
    const auto fid = body.at("fixture_id").get<std::string>();
    raw = fixture(fid, options_.fixture_seed);
    if (!raw) return error(404, "UnknownFixture", "no fixture '" + fid + "'");
    if (body.contains("outcome") && body.at("outcome").get<std::string>() != raw->outcome())
      throw Error(ErrorCode::UnknownOutcomeColumn, "fixture outcome is '" + raw->outcome() + "'");
    name = fid;
  } else {
    if (!body.contains("outcome")) throw Error(ErrorCode::InvalidArgument, "'outcome' is required with inline csv");
    raw = parse_csv(body.at("csv").get<std::string>(), body.at("outcome").get<std::string>());
  }

  FitOptions fit;
  if (body.contains("model_spec")) fit.spec = spec_from_json(body.at("model_spec"));
  if (body.contains("alpha")) fit.discovery.alpha = body.at("alpha").get<double>();
  if (body.contains("max_cond")) fit.discovery.max_cond = body.at("max_cond").get<std::size_t>();
  if (body.contains("all_features")) fit.all_features = body.at("all_features").get<bool>();
  if (body.contains("positive_label")) fit.positive_label = body.at("positive_label").get<std::string>();
  if (body.contains("name")) name = body.at("name").get<std::string>();
  if (!(fit.discovery.alpha > 0.0 && fit.discovery.alpha < 1.0))
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");

  auto result = fit_bundle(*raw, fit);
  const auto warnings = result.bundle.model.warnings();
  const std::string id = add(std::move(result.bundle), name);
  return {201, {{"model_id", id}, {"parents", result.parents.parents}, {"warnings", warnings}}};
}

Response Api::list_models() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : registry_.list()) out.push_back(metadata(*e));
  return {200, {{"models", std::move(out)}}};
}

Response Api::get_model(std::string_view id) const {
  const auto e = registry_.find(id);
  if (!e) return error(404, "UnknownModel", "no model '" + std::string(id) + "'");
  return {200, metadata(*e)};
}

Response Api::whatif(std::string_view id, const nlohmann::json& body) const {
  const auto e = registry_.find(id);
  if (!e) return error(404, "UnknownModel", "no model '" + std::string(id) + "'");
  reject_unknown_fields(body, {"instance", "k", "delta", "delta_overrides", "class_of_interest", "rank_by",
                               "exceedance_threshold"});
  if (!body.contains("instance")) throw Error(ErrorCode::InvalidArgument, "'instance' is required");
  const Instance inst = instance_from_json(body.at("instance"));
  check_instance(e->bundle, inst);
  return {200, to_json(what_if(e->bundle.model, inst, whatif_options(e->bundle, body)))};
}

Response Api::intervene(std::string_view id, const nlohmann::json& body) const {
  const auto e = registry_.find(id);
  if (!e) return error(404, "UnknownModel", "no model '" + std::string(id) + "'");
  reject_unknown_fields(body, {"instance", "feature", "new_value", "k", "delta", "delta_overrides", "class_of_interest",
                               "rank_by", "exceedance_threshold"});
  for (const char* key : {"instance", "feature", "new_value"})
    if (!body.contains(key)) throw Error(ErrorCode::InvalidArgument, std::string("'") + key + "' is required");
  const Instance inst = instance_from_json(body.at("instance"));
  check_instance(e->bundle, inst);
  const auto feature = body.at("feature").get<std::string>();
  const auto& nv = body.at("new_value");
  const double value = nv.is_boolean() ? (nv.get<bool>() ? 1.0 : 0.0) : nv.get<double>();
  const auto r = apply_intervention(e->bundle.model, inst, feature, value, whatif_options(e->bundle, body));
  return {200, {{"new_prediction", r.new_prediction}, {"report", to_json(r.report)}}};
}

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(Api& api) : impl_(std::make_unique<Impl>()) {
  auto& server = impl_->server;
  server.set_payload_max_length(api.options().max_body_bytes);
  auto dispatch = [&api](const httplib::Request& req, httplib::Response& res) {
    const auto r = api.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.text(), "application/json");
  };
  server.set_post_routing_handler([&api](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_header("Origin")) return;
    if (const auto o = api.allowed_origin(req.get_header_value("Origin"))) {
      res.set_header("Access-Control-Allow-Origin", *o);
      res.set_header("Vary", "Origin");
    }
  });
  server.Get(".*", dispatch);
  server.Post(".*", dispatch);
  server.Put(".*", dispatch);
  server.Delete(".*", dispatch);
  server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.set_header("Access-Control-Max-Age", "600");
  });
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& address, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(address) : (impl_->server.bind_to_port(address, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::IoError, "cannot bind " + address + ":" + std::to_string(port));
  return bound;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

void serve(Api& api, const std::string& bind, int port) {
  HttpServer server(api);
  server.bind(bind, port);
  server.run();
}

}  // namespace mode::service
