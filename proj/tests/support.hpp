#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "logrouter/engine.hpp"
#include "logrouter/ingest.hpp"

namespace logrouter::fixtures {

inline std::filesystem::path data_dir() { return LOGROUTER_TEST_DATA; }
inline std::filesystem::path mini_dir() { return LOGROUTER_MINI_DIR; }
inline std::filesystem::path linux_fixture() { return data_dir() / "linux_2k.log"; }

inline std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

inline SourceDescriptor linux_source() {
  SourceDescriptor src;
  src.dataset = "linux";
  src.default_year = 2005;
  return src;
}

inline std::vector<LogRecord> linux_records() {
  std::vector<LogRecord> out;
  ingest_file(linux_fixture(), linux_source().validated(), [&](LogRecord&& r) { out.push_back(std::move(r)); });
  return out;
}

// Hashed embedder, stub generator, seeded trace ids.
inline EngineConfig offline_config(std::uint64_t seed = 7) {
  EngineConfig cfg;
  cfg.trace_seed = seed;
  return cfg;
}

inline std::unique_ptr<Engine> offline_engine(EngineConfig cfg = offline_config(),
                                              std::shared_ptr<TraceSink> traces = nullptr) {
  return std::make_unique<Engine>(cfg, std::make_shared<HashedEmbedder>(), std::make_shared<StubGenerator>(),
                                  std::move(traces));
}

inline std::unique_ptr<Engine> linux_engine(EngineConfig cfg = offline_config(),
                                            std::shared_ptr<TraceSink> traces = nullptr) {
  auto e = offline_engine(cfg, std::move(traces));
  e->ingest_file(linux_fixture(), linux_source());
  return e;
}

// Fails every call, as an unreachable endpoint would.
class DownEmbedder final : public EmbeddingProvider {
 public:
  EmbeddingVector embed(std::string_view) const override {
    throw Error(ErrorCode::kProviderUnavailable, "embedding endpoint unreachable");
  }
  int dim() const override { return 256; }
  std::string tag() const override { return "hashed-256"; }
  bool reachable() const override { return false; }
};

class DownGenerator final : public Generator {
 public:
  std::string generate(const GenerationRequest&) override {
    throw Error(ErrorCode::kGeneratorUnavailable, "generator endpoint unreachable");
  }
  bool reachable() const override { return false; }
};

}  // namespace logrouter::fixtures
