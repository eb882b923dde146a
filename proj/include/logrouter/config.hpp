#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "logrouter/engine.hpp"

namespace logrouter {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  // Snapshots are loaded from here at startup when present and written
  // after each ingest.
  std::optional<std::filesystem::path> snapshot_dir;
  // Router vocabulary file; the built-in vocabulary when absent.
  std::optional<std::filesystem::path> vocab_path;
  std::string cors_origin = "*";
  EngineConfig engine;
};

// Every numeric field is checked against its module's invariants; the error
// message names the offending field. Throws kInvalidConfig.
ServiceConfig service_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ServiceConfig& cfg);

ServiceConfig load_service_config(const std::filesystem::path& path);
// LOGROUTER_CONFIG when set, else defaults.
ServiceConfig service_config_from_env();

}  // namespace logrouter
