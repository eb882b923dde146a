#include "logrouter/config.hpp"

#include <cstdlib>
#include <fstream>

#include "logrouter/error.hpp"

namespace logrouter {

using nlohmann::json;

namespace {

const json& section(const json& j, const char* name) {
  static const json kEmpty = json::object();
  if (!j.contains(name) || j[name].is_null()) return kEmpty;
  if (!j[name].is_object()) {
    throw Error(ErrorCode::kInvalidConfig, std::string(name) + " must be an object");
  }
  return j[name];
}

template <typename T>
T field(const json& j, const char* sect, const char* name, T fallback) {
  if (!j.contains(name) || j[name].is_null()) return fallback;
  try {
    return j[name].get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kInvalidConfig,
                std::string(sect) + "." + name + " has the wrong type: " + j[name].dump());
  }
}

void positive(long long v, const char* path) {
  if (v <= 0) {
    throw Error(ErrorCode::kInvalidConfig, std::string(path) + " must be positive, got " + std::to_string(v));
  }
}

}  // namespace

ServiceConfig service_config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "config must be a JSON object");
  ServiceConfig c;

  const json& listen = section(j, "listen");
  c.host = field(listen, "listen", "host", c.host);
  c.port = field(listen, "listen", "port", c.port);
  if (c.port < 0 || c.port > 65535) {
    throw Error(ErrorCode::kInvalidConfig, "listen.port must be in [0, 65535], got " + std::to_string(c.port));
  }
  if (auto p = field(j, "config", "snapshot_dir", std::string()); !p.empty()) c.snapshot_dir = p;
  if (auto p = field(j, "config", "vocab_path", std::string()); !p.empty()) c.vocab_path = p;
  c.cors_origin = field(j, "config", "cors_origin", c.cors_origin);

  EngineConfig& e = c.engine;
  const json& chunker = section(j, "chunker");
  e.chunker.window = field(chunker, "chunker", "window", e.chunker.window);
  e.chunker.overlap = field(chunker, "chunker", "overlap", e.chunker.overlap);
  e.chunker.validate();

  const json& drain = section(j, "drain");
  e.drain.depth = field(drain, "drain", "depth", e.drain.depth);
  e.drain.sim_th = field(drain, "drain", "sim_th", e.drain.sim_th);
  e.drain.max_children = field(drain, "drain", "max_children", e.drain.max_children);
  e.drain.id_prefix_len = field(drain, "drain", "id_prefix_len", e.drain.id_prefix_len);
  e.drain.validate();

  e.router = router_config_from_json(section(j, "router"));
  e.embedding = embedding_config_from_json(section(j, "embedding"));
  e.generator = generator_config_from_json(section(j, "generator"));

  const json& retrieval = section(j, "retrieval");
  std::string strategy = field(retrieval, "retrieval", "strategy", std::string("hybrid"));
  auto parsed = parse_strategy(strategy);
  if (!parsed) {
    throw Error(ErrorCode::kInvalidConfig,
                "retrieval.strategy must be hybrid, dense_only or keyword_only, got '" + strategy + "'");
  }
  e.strategy = *parsed;
  long long top_k = field(retrieval, "retrieval", "top_k", static_cast<long long>(e.top_k));
  long long per_backend = field(retrieval, "retrieval", "per_backend", static_cast<long long>(e.per_backend));
  positive(top_k, "retrieval.top_k");
  positive(per_backend, "retrieval.per_backend");
  e.top_k = static_cast<std::size_t>(top_k);
  e.per_backend = static_cast<std::size_t>(per_backend);
  e.k_rrf = field(retrieval, "retrieval", "k_rrf", e.k_rrf);
  positive(e.k_rrf, "retrieval.k_rrf");

  const json& keyword = section(j, "keyword");
  long long top_n = field(keyword, "keyword", "top_n", static_cast<long long>(e.keyword_top_n));
  positive(top_n, "keyword.top_n");
  e.keyword_top_n = static_cast<std::size_t>(top_n);
  e.keyword_summary = field(keyword, "keyword", "summary", e.keyword_summary);

  e.ablation = parse_ablation(field(j, "config", "ablation", std::string("full")));
  if (j.contains("trace_seed") && !j["trace_seed"].is_null()) {
    e.trace_seed = field(j, "config", "trace_seed", std::uint64_t{0});
  }
  if (auto p = field(j, "config", "trace_log", std::string()); !p.empty()) e.trace_log = p;
  return c;
}

json to_json(const ServiceConfig& c) {
  const EngineConfig& e = c.engine;
  json j{{"listen", {{"host", c.host}, {"port", c.port}}},
         {"snapshot_dir", nullptr},
         {"vocab_path", nullptr},
         {"cors_origin", c.cors_origin},
         {"chunker", {{"window", e.chunker.window}, {"overlap", e.chunker.overlap}}},
         {"drain",
          {{"depth", e.drain.depth},
           {"sim_th", e.drain.sim_th},
           {"max_children", e.drain.max_children},
           {"id_prefix_len", e.drain.id_prefix_len}}},
         {"router", to_json(e.router)},
         {"embedding", to_json(e.embedding)},
         {"generator", to_json(e.generator)},
         {"retrieval",
          {{"strategy", strategy_name(e.strategy)},
           {"top_k", e.top_k},
           {"per_backend", e.per_backend},
           {"k_rrf", e.k_rrf}}},
         {"keyword", {{"top_n", e.keyword_top_n}, {"summary", e.keyword_summary}}},
         {"ablation", ablation_name(e.ablation)},
         {"trace_seed", nullptr},
         {"trace_log", nullptr}};
  if (c.snapshot_dir) j["snapshot_dir"] = c.snapshot_dir->string();
  if (c.vocab_path) j["vocab_path"] = c.vocab_path->string();
  if (e.trace_seed) j["trace_seed"] = *e.trace_seed;
  if (e.trace_log) j["trace_log"] = e.trace_log->string();
  return j;
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return service_config_from_json(j);
}

ServiceConfig service_config_from_env() {
  if (const char* p = std::getenv("LOGROUTER_CONFIG"); p && *p) return load_service_config(p);
  return ServiceConfig{};
}

}  // namespace logrouter
