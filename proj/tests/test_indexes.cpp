#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "logrouter/embedding.hpp"
#include "logrouter/error.hpp"
#include "logrouter/keyword_index.hpp"
#include "logrouter/vector_store.hpp"

using namespace logrouter;

TEST(Embedding, HashedIsNormalizedAndDeterministic) {
  HashedEmbedder e;
  auto a = e.embed("disk full on node alpha");
  EXPECT_EQ(a.dim(), 256u);
  double n = 0;
  for (float v : a.values) n += double(v) * v;
  EXPECT_NEAR(n, 1.0, 1e-6);
  EXPECT_EQ(a, e.embed("disk full on node alpha"));
  EXPECT_NEAR(cosine(a, e.embed("alpha node on full disk")), 1.0, 1e-6);
  EXPECT_THROW(e.embed("   "), Error);
}

TEST(Embedding, TokenizerKeepsIps) {
  EXPECT_EQ(HashedEmbedder::tokenize("From 10.0.0.1, port 22"),
            (std::vector<std::string>{"from", "10.0.0.1", "port", "22"}));
}

TEST(Embedding, CosineEdgeCases) {
  std::vector<float> z(4, 0.f), x{1, 0, 0, 0}, y{0, 1, 0, 0};
  EXPECT_EQ(cosine(z, x), 0.0);
  EXPECT_EQ(cosine(x, y), 0.0);
  EXPECT_NEAR(cosine(x, x), 1.0, 1e-12);
  std::vector<float> short_vec{1, 2};
  EXPECT_THROW(cosine(x, short_vec), Error);
}

TEST(Embedding, RemoteNeedsEndpoint) {
  EmbeddingProviderConfig c;
  c.kind = EmbeddingKind::kRemote;
  EXPECT_THROW(c.validate(), Error);
  c.endpoint = "http://127.0.0.1:1";
  c.model_tag = "nomic-embed-text";
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.effective_dim(), 768);
}

TEST(Embedding, UnreachableRemoteThrowsUnavailable) {
  EmbeddingProviderConfig c;
  c.kind = EmbeddingKind::kRemote;
  c.endpoint = "http://127.0.0.1:1";
  c.model_tag = "m";
  c.timeout = std::chrono::milliseconds(500);
  RemoteEmbedder r(c);
  try {
    r.embed("hello");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProviderUnavailable);
  }
  EXPECT_FALSE(r.reachable());
}

TEST(Fts, Tokenizer) {
  EXPECT_EQ(fts_tokenize("GET /api returned 503; host=web-01"),
            (std::vector<std::string>{"get", "api", "returned", "503", "host", "web-01", "web", "01"}));
}

// Scores computed independently with a Python BM25 (k1 = 1.2, b = 0.75,
// idf = ln(1 + (N - df + .5) / (df + .5))).
TEST(Bm25, MatchesReferenceScores) {
  const std::vector<std::string> docs = {"disk full on node alpha", "disk error on node beta disk",
                                         "network timeout alpha", "kernel panic on node gamma",
                                         "disk disk disk"};
  Bm25Index idx;
  for (std::size_t i = 0; i < docs.size(); ++i) idx.add(docs[i], i);
  const std::vector<std::pair<std::string, std::vector<double>>> expected = {
      {"disk", {0.51051723357068624, 0.6723564596768572, 0, 0, 0.908969708552685}},
      {"disk alpha", {1.3397283272679223, 0.6723564596768572, 1.0064771232287115, 0, 0.908969708552685}},
      {"node", {0.51051723357068624, 0.46919839272413777, 0, 0.51051723357068624, 0}},
      {"panic gamma", {0, 0, 0, 2.626091862160576, 0}},
  };
  for (const auto& [q, scores] : expected) {
    auto hits = idx.search(q, 10);
    std::vector<double> got(docs.size(), 0.0);
    for (const auto& h : hits) got[h.doc] = h.score;
    for (std::size_t i = 0; i < docs.size(); ++i) EXPECT_NEAR(got[i], scores[i], 1e-12) << q << " doc " << i;
    for (std::size_t i = 1; i < hits.size(); ++i) EXPECT_GE(hits[i - 1].score, hits[i].score);
  }
}

TEST(Bm25, TiesByOrderKey) {
  Bm25Index idx;
  idx.add("alpha beta", 5);
  idx.add("alpha beta", 1);
  auto hits = idx.search("alpha", 2);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].doc, 1u);
}

TEST(LineIndex, RegexAndFts) {
  LineIndex li;
  for (int i = 0; i < 5; ++i) {
    LogRecord r;
    r.dataset = i < 3 ? "a" : "b";
    r.namespace_ = r.app = r.pod = "x";
    r.line_no = static_cast<std::size_t>(i);
    r.line = "req " + std::to_string(i) + (i % 2 ? " status 503" : " status 200");
    li.add(r);
  }
  auto rx = li.regex_search("status 503", 10);
  ASSERT_EQ(rx.size(), 2u);
  EXPECT_EQ(li.line(rx[0]), "req 1 status 503");
  EXPECT_EQ(li.regex_search("STATUS 503", 10, true, std::string("b")).size(), 1u);
  EXPECT_THROW(li.regex_search("(", 10), Error);
  auto fts = li.fts_search("503", 10);
  EXPECT_EQ(fts.size(), 2u);
  EXPECT_TRUE(li.fts_search(";;", 10).empty());
}

namespace {

Chunk make_chunk(int i, const std::string& app) {
  Chunk c;
  c.dataset = "d";
  c.namespace_ = "ns";
  c.app = app;
  c.pod = "p";
  c.source_key = "ns/" + app + "/p";
  c.start_line = static_cast<std::size_t>(i);
  c.line_count = 1;
  char id[32];
  std::snprintf(id, sizeof id, "c%03d", i);
  c.chunk_id = id;
  c.text = "chunk " + std::to_string(i);
  return c;
}

}  // namespace

// Store ranking equals a brute-force cosine sort.
TEST(VectorStore, MatchesBruteForce) {
  std::mt19937 rng(5);
  std::normal_distribution<float> nd;
  const int dim = 16;
  VectorStore store(dim, "t");
  std::vector<std::pair<std::string, std::vector<float>>> all;
  for (int i = 0; i < 200; ++i) {
    EmbeddingVector v;
    v.provider_tag = "t";
    for (int d = 0; d < dim; ++d) v.values.push_back(nd(rng));
    Chunk c = make_chunk(i, i % 3 ? "web" : "db");
    all.emplace_back(c.chunk_id, v.values);
    store.add(c, v);
  }
  for (int q = 0; q < 20; ++q) {
    EmbeddingVector query;
    for (int d = 0; d < dim; ++d) query.values.push_back(nd(rng));
    std::vector<std::pair<double, std::string>> brute;
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (q % 2 && i % 3 != 0) continue;
      double dot = 0, na = 0, nb = 0;
      for (int d = 0; d < dim; ++d) {
        dot += double(query.values[d]) * all[i].second[d];
        na += double(query.values[d]) * query.values[d];
        nb += double(all[i].second[d]) * all[i].second[d];
      }
      brute.emplace_back(-dot / std::sqrt(na * nb), all[i].first);
    }
    std::sort(brute.begin(), brute.end());
    MetadataFilter f;
    if (q % 2) f["app"] = "db";
    auto got = store.search(query, f, 20);
    ASSERT_EQ(got.size(), std::min<std::size_t>(20, brute.size()));
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].first, brute[i].second);
      EXPECT_NEAR(got[i].second, -brute[i].first, 1e-9);
    }
  }
}

TEST(VectorStore, ContractsAndPersistence) {
  VectorStore store(4, "t");
  EmbeddingVector bad{{1, 2, 3}, "t"};
  EXPECT_THROW(store.add(make_chunk(1, "a"), bad), Error);
  store.add(make_chunk(1, "a"), {{1, 0, 0, 0}, "t"});
  store.add(make_chunk(2, "b"), {{0, 1, 0, 0}, "t"});
  MetadataFilter unknown{{"colour", "red"}};
  EXPECT_TRUE(store.search({{1, 0, 0, 0}, "t"}, unknown).empty());
  auto dir = std::filesystem::temp_directory_path();
  store.save(dir / "lr_vec.bin", dir / "lr_vec.jsonl");
  VectorStore back(4, "t");
  back.load(dir / "lr_vec.bin", dir / "lr_vec.jsonl");
  EXPECT_EQ(back.size(), 2u);
  EXPECT_EQ(back.search({{0, 1, 0, 0}, "t"})[0].first, "c002");
  EXPECT_EQ(back.find("c001")->app, "a");
}
