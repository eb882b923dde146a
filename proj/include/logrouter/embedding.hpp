#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace logrouter {

struct EmbeddingVector {
  std::vector<float> values;
  std::string provider_tag;

  std::size_t dim() const { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

// Cosine similarity; 0 when either side is the zero vector. Throws
// kStoreContract on a dimension mismatch.
double cosine(std::span<const float> a, std::span<const float> b);
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

enum class EmbeddingKind { kRemote, kHashed };

struct EmbeddingProviderConfig {
  EmbeddingKind kind = EmbeddingKind::kHashed;
  std::optional<std::string> endpoint;
  std::optional<std::string> model_tag;
  // 0 means the kind's default: 768 for remote, 256 for hashed.
  int dim = 0;
  std::chrono::milliseconds timeout{10000};
  std::uint64_t seed = 0x5eed;
  int max_in_flight = 4;

  int effective_dim() const;
  // Throws kInvalidConfig when remote lacks an endpoint or model tag.
  void validate() const;
};

nlohmann::json to_json(const EmbeddingProviderConfig& cfg);
EmbeddingProviderConfig embedding_config_from_json(const nlohmann::json& j);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  // Throws kProviderUnavailable on transport failure and kProviderContract
  // when the returned vector has the wrong dimension.
  virtual EmbeddingVector embed(std::string_view text) const = 0;
  // Order preserving; any failure fails the whole batch.
  virtual std::vector<EmbeddingVector> embed_batch(
      const std::vector<std::string>& texts) const;

  virtual int dim() const = 0;
  virtual std::string tag() const = 0;
  virtual bool reachable() const { return true; }
};

// Signed feature hashing over the lowercase token stream, L2-normalized.
class HashedEmbedder final : public EmbeddingProvider {
 public:
  explicit HashedEmbedder(int dim = 256, std::uint64_t seed = 0x5eed);

  EmbeddingVector embed(std::string_view text) const override;
  int dim() const override { return dim_; }
  std::string tag() const override;

  // Lowercase; split on non-alphanumerics, keeping dots inside IPv4 tokens.
  static std::vector<std::string> tokenize(std::string_view text);

 private:
  int dim_;
  std::uint64_t seed_;
};

// POST {endpoint}/api/embeddings {"model", "prompt"} -> {"embedding": [...]}
class RemoteEmbedder final : public EmbeddingProvider {
 public:
  explicit RemoteEmbedder(EmbeddingProviderConfig cfg);

  EmbeddingVector embed(std::string_view text) const override;
  int dim() const override { return cfg_.effective_dim(); }
  std::string tag() const override;
  bool reachable() const override;

 private:
  EmbeddingProviderConfig cfg_;
  mutable std::counting_semaphore<64> in_flight_;
};

// Builds the configured provider. LOGROUTER_EMBED_URL overrides the remote
// endpoint.
std::shared_ptr<EmbeddingProvider> make_embedding_provider(
    EmbeddingProviderConfig cfg);

}  // namespace logrouter
