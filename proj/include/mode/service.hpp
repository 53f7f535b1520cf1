#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mode/bundle.hpp"
#include "mode/dataset.hpp"

namespace mode::service {

struct Response {
  int status = 200;
  nlohmann::json body;

  /// Body as sent over the wire.
  std::string text() const;
};

struct ModelEntry {
  std::string id;
  std::string name;
  std::string created_at;
  ModelBundle bundle;
};

/// Insert-once map. Entries are published whole and never change.
class Registry {
 public:
  using EntryPtr = std::shared_ptr<const ModelEntry>;

  /// Returns the stored entry and whether it was new. An existing id keeps
  /// its first entry.
  std::pair<EntryPtr, bool> insert(ModelEntry entry);
  EntryPtr find(std::string_view id) const;
  /// Ordered by id.
  std::vector<EntryPtr> list() const;
  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, EntryPtr, std::less<>> entries_;
};

struct Options {
  std::vector<std::string> cors_origins{"http://localhost:5173", "http://127.0.0.1:5173"};
  std::size_t max_body_bytes = 10 * 1024 * 1024;
  std::uint64_t fixture_seed = 20240917;
  /// Newly registered models are also written here when set.
  std::optional<std::filesystem::path> model_dir;
};

/// Ids accepted by the fixture_id field, e.g. "g1-10k".
std::vector<std::string> fixture_ids();
/// Sampled fixture table. Returns nothing for an unknown id.
std::optional<DataTable> fixture(std::string_view id, std::uint64_t seed);

/// Letters, digits, '-' and '_' only.
bool url_safe(std::string_view id);

/// Transport-free request handling; the HTTP server is a thin shell over it.
class Api {
 public:
  explicit Api(Options options = {});

  Response handle(std::string_view method, std::string_view path, std::string_view body);

  /// Registers every *.json model bundle in the directory under its file stem.
  /// Returns the number loaded. Throws IoError or CorruptFile.
  std::size_t load_model_dir(const std::filesystem::path& dir);
  /// Registers a bundle directly. Returns the model id.
  std::string add(ModelBundle bundle, std::string name, std::optional<std::string> id = std::nullopt);

  /// Value for Access-Control-Allow-Origin, if the origin is allowed.
  std::optional<std::string> allowed_origin(std::string_view origin) const;

  const Registry& registry() const noexcept { return registry_; }
  const Options& options() const noexcept { return options_; }

 private:
  Response create_model(const nlohmann::json& body);
  Response list_models() const;
  Response get_model(std::string_view id) const;
  Response whatif(std::string_view id, const nlohmann::json& body) const;
  Response intervene(std::string_view id, const nlohmann::json& body) const;

  Options options_;
  Registry registry_;
};

/// Metadata document served by GET /api/models/{id}.
nlohmann::json metadata(const ModelEntry& entry);

/// Parses the optional what-if fields (k, delta, delta_overrides,
/// class_of_interest, rank_by, exceedance_threshold) of a request body.
WhatIfOptions whatif_options(const ModelBundle& bundle, const nlohmann::json& body);

/// HTTP front for an Api: CORS for allowed origins, body size limit, JSON
/// responses.
class HttpServer {
 public:
  explicit HttpServer(Api& api);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Port 0 picks a free port. Returns the bound port. Throws IoError.
  int bind(const std::string& address, int port);
  /// Blocks until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Bind and run. Throws IoError when the address cannot be bound.
void serve(Api& api, const std::string& bind, int port);

}  // namespace mode::service
