#include "logrouter/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

#include <httplib.h>

#include "logrouter/error.hpp"
#include "logrouter/text.hpp"

namespace logrouter {

using nlohmann::json;

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kStoreContract, "cosine: dimension mismatch " +
                                               std::to_string(a.size()) + " vs " +
                                               std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  return cosine(std::span<const float>(a.values), std::span<const float>(b.values));
}

int EmbeddingProviderConfig::effective_dim() const {
  if (dim > 0) return dim;
  return kind == EmbeddingKind::kRemote ? 768 : 256;
}

void EmbeddingProviderConfig::validate() const {
  if (dim < 0) throw Error(ErrorCode::kInvalidConfig, "embedding.dim must be positive");
  if (kind == EmbeddingKind::kRemote) {
    if (!endpoint || endpoint->empty())
      throw Error(ErrorCode::kInvalidConfig, "embedding.endpoint is required for kind=remote");
    if (!model_tag || model_tag->empty())
      throw Error(ErrorCode::kInvalidConfig, "embedding.model_tag is required for kind=remote");
  }
  if (timeout.count() <= 0)
    throw Error(ErrorCode::kInvalidConfig, "embedding.timeout_ms must be positive");
  if (max_in_flight < 1 || max_in_flight > 64)
    throw Error(ErrorCode::kInvalidConfig, "embedding.max_in_flight must be in [1, 64]");
}

json to_json(const EmbeddingProviderConfig& cfg) {
  json j = {{"kind", cfg.kind == EmbeddingKind::kRemote ? "remote" : "hashed"},
            {"dim", cfg.effective_dim()},
            {"timeout_ms", cfg.timeout.count()},
            {"seed", cfg.seed},
            {"max_in_flight", cfg.max_in_flight}};
  j["endpoint"] = cfg.endpoint ? json(*cfg.endpoint) : json(nullptr);
  j["model_tag"] = cfg.model_tag ? json(*cfg.model_tag) : json(nullptr);
  return j;
}

EmbeddingProviderConfig embedding_config_from_json(const json& j) {
  EmbeddingProviderConfig cfg;
  const std::string kind = j.value("kind", "hashed");
  if (kind == "remote") {
    cfg.kind = EmbeddingKind::kRemote;
  } else if (kind == "hashed") {
    cfg.kind = EmbeddingKind::kHashed;
  } else {
    throw Error(ErrorCode::kInvalidConfig, "embedding.kind must be 'remote' or 'hashed', got '" + kind + "'");
  }
  if (j.contains("endpoint") && j["endpoint"].is_string()) cfg.endpoint = j["endpoint"].get<std::string>();
  if (j.contains("model_tag") && j["model_tag"].is_string()) cfg.model_tag = j["model_tag"].get<std::string>();
  cfg.dim = j.value("dim", 0);
  cfg.timeout = std::chrono::milliseconds(j.value("timeout_ms", 10000));
  cfg.seed = j.value("seed", std::uint64_t{0x5eed});
  cfg.max_in_flight = j.value("max_in_flight", 4);
  cfg.validate();
  return cfg;
}

std::vector<EmbeddingVector> EmbeddingProvider::embed_batch(
    const std::vector<std::string>& texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

HashedEmbedder::HashedEmbedder(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim <= 0) throw Error(ErrorCode::kInvalidConfig, "hashed embedder dim must be positive");
}

std::string HashedEmbedder::tag() const {
  return "hashed-" + std::to_string(dim_) + "-" + std::to_string(seed_);
}

std::vector<std::string> HashedEmbedder::tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) return;
    if (is_ipv4_shaped(cur)) {
      out.push_back(cur);
    } else {
      std::size_t start = 0;
      while (start <= cur.size()) {
        std::size_t dot = cur.find('.', start);
        if (dot == std::string::npos) dot = cur.size();
        if (dot > start) out.push_back(cur.substr(start, dot - start));
        start = dot + 1;
      }
    }
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || ch == '.') {
      cur += static_cast<char>(std::tolower(c));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

EmbeddingVector HashedEmbedder::embed(std::string_view text) const {
  if (trim(text).empty()) {
    throw Error(ErrorCode::kInvalidInput, "cannot embed empty text");
  }
  auto tokens = tokenize(text);
  if (tokens.empty()) tokens.emplace_back(trim(text));
  std::vector<double> acc(static_cast<std::size_t>(dim_), 0.0);
  for (const auto& tok : tokens) {
    const std::uint64_t h = splitmix64(fnv1a(tok) ^ seed_);
    const std::size_t bucket = (h & 0xffffffffULL) % static_cast<std::uint64_t>(dim_);
    acc[bucket] += (h >> 63) ? -1.0 : 1.0;
  }
  double norm = 0.0;
  for (double v : acc) norm += v * v;
  norm = std::sqrt(norm);
  EmbeddingVector out;
  out.provider_tag = tag();
  out.values.resize(acc.size());
  if (norm == 0.0) {
    // Every bucket cancelled out; fall back to the unsigned counts.
    for (const auto& tok : tokens) {
      const std::uint64_t h = splitmix64(fnv1a(tok) ^ seed_);
      acc[(h & 0xffffffffULL) % static_cast<std::uint64_t>(dim_)] += 1.0;
    }
    norm = 0.0;
    for (double& v : acc) {
      v = std::abs(v);
      norm += v * v;
    }
    norm = std::sqrt(norm);
  }
  for (std::size_t i = 0; i < acc.size(); ++i) out.values[i] = static_cast<float>(acc[i] / norm);
  return out;
}

RemoteEmbedder::RemoteEmbedder(EmbeddingProviderConfig cfg)
    : cfg_(std::move(cfg)), in_flight_(std::clamp(cfg_.max_in_flight, 1, 64)) {
  cfg_.validate();
}

std::string RemoteEmbedder::tag() const { return "remote-" + cfg_.model_tag.value_or(""); }

namespace {

void configure(httplib::Client& cli, std::chrono::milliseconds timeout) {
  const auto sec = timeout.count() / 1000;
  const auto usec = (timeout.count() % 1000) * 1000;
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);
}

}  // namespace

EmbeddingVector RemoteEmbedder::embed(std::string_view text) const {
  if (trim(text).empty()) throw Error(ErrorCode::kInvalidInput, "cannot embed empty text");
  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<64>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  httplib::Client cli(*cfg_.endpoint);
  configure(cli, cfg_.timeout);
  const json body = {{"model", *cfg_.model_tag}, {"prompt", std::string(text)}};
  auto res = cli.Post("/api/embeddings", body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::kProviderUnavailable,
                "embedding endpoint " + *cfg_.endpoint + " unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kProviderUnavailable,
                "embedding endpoint returned HTTP " + std::to_string(res->status));
  }
  EmbeddingVector out;
  out.provider_tag = tag();
  try {
    const json reply = json::parse(res->body);
    out.values = reply.at("embedding").get<std::vector<float>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProviderContract, std::string("malformed embedding response: ") + e.what());
  }
  if (static_cast<int>(out.values.size()) != dim()) {
    throw Error(ErrorCode::kProviderContract, "embedding dim " + std::to_string(out.values.size()) +
                                                  " does not match configured dim " + std::to_string(dim()));
  }
  return out;
}

bool RemoteEmbedder::reachable() const {
  httplib::Client cli(*cfg_.endpoint);
  configure(cli, std::min(cfg_.timeout, std::chrono::milliseconds(2000)));
  auto res = cli.Get("/");
  return static_cast<bool>(res);
}

std::shared_ptr<EmbeddingProvider> make_embedding_provider(EmbeddingProviderConfig cfg) {
  if (const char* url = std::getenv("LOGROUTER_EMBED_URL"); url && *url) {
    cfg.endpoint = url;
  }
  cfg.validate();
  if (cfg.kind == EmbeddingKind::kRemote) return std::make_shared<RemoteEmbedder>(std::move(cfg));
  return std::make_shared<HashedEmbedder>(cfg.effective_dim(), cfg.seed);
}

}  // namespace logrouter
