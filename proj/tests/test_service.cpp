#include <gtest/gtest.h>

#include <httplib.h>

#include <thread>

#include "logrouter/service.hpp"
#include "support.hpp"

using namespace logrouter;
using nlohmann::json;

namespace {

// Runs a Service on a free local port for the lifetime of the object.
class LiveService {
 public:
  explicit LiveService(ServiceConfig cfg, std::shared_ptr<Engine> engine = nullptr) {
    cfg.port = 0;
    if (!engine) engine = Engine::create(cfg.engine);
    service_ = std::make_unique<Service>(cfg, engine);
    port_ = service_->bind();
    thread_ = std::thread([this] { service_->run(); });
    service_->wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(30, 0);
  }
  ~LiveService() {
    service_->stop();
    thread_.join();
  }
  httplib::Client& http() { return *client_; }
  Engine& engine() { return service_->engine(); }

  json post(const std::string& path, const json& body, int expect = 200) {
    auto res = client_->Post(path, body.dump(), "application/json");
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, expect) << res->body;
    return json::parse(res->body);
  }
  json get(const std::string& path, int expect = 200) {
    auto res = client_->Get(path);
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, expect) << res->body;
    return json::parse(res->body);
  }

 private:
  std::unique_ptr<Service> service_;
  int port_ = 0;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

json ingest_fixture_body() {
  return json{{"dataset", "linux"}, {"file", fixtures::linux_fixture().string()}, {"default_year", 2005}};
}

}  // namespace

TEST(Service, EndpointsRoundTrip) {
  ServiceConfig cfg;
  cfg.engine.trace_seed = 1;
  LiveService svc(cfg);
  json ing = svc.post("/ingest", ingest_fixture_body());
  EXPECT_EQ(ing["report"]["records"], 2000);

  json q = svc.post("/query", {{"question", "How many lines per level?"}});
  EXPECT_EQ(q["route"]["path"], "sql");
  EXPECT_EQ(q["answer"], "UNKNOWN: 1921\nERROR: 40\nWARN: 39");
  EXPECT_TRUE(q["l2"].is_null());
  EXPECT_TRUE(is_uuid_v4(q["trace_id"].get<std::string>()));

  json t = svc.get("/templates");
  EXPECT_EQ(t["count"], t["templates"].size());
  EXPECT_GT(t["count"].get<int>(), 5);

  json ex = svc.get("/routes/explain?q=Find%20lines%20containing%20error%20503");
  EXPECT_EQ(ex["route"]["path"], "keyword");
  EXPECT_EQ(ex["route"]["matched_patterns"][0], "P0");
  EXPECT_EQ(ex["question"], "Find lines containing error 503");

  json h = svc.get("/health");
  EXPECT_EQ(h["counts"]["records"], 2000);
  json c = svc.get("/config");
  EXPECT_EQ(c["retrieval"]["k_rrf"], 60);

  auto opt = svc.http().Options("/query");
  ASSERT_TRUE(opt);
  EXPECT_EQ(opt->status, 204);
  EXPECT_EQ(opt->get_header_value("Access-Control-Allow-Origin"), "*");
}

TEST(Service, ErrorsAreJson) {
  LiveService svc(ServiceConfig{});
  json e = svc.post("/query", {{"question", ""}}, 400);
  EXPECT_EQ(e["error"], "invalid-input");
  auto res = svc.http().Post("/query", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  e = svc.post("/query", {{"question", "hi"}, {"ablation", "nonsense"}}, 400);
  EXPECT_EQ(e["error"], "invalid-config");
  e = svc.post("/ingest", {{"dataset", "x"}}, 400);
  e = svc.post("/ingest", {{"dataset", "x"}, {"file", "/nonexistent.log"}}, 400);
  EXPECT_EQ(e["error"], "ingestion-failed");
  svc.get("/routes/explain", 400);
}

TEST(Service, GeneratorUnreachable) {
  ServiceConfig cfg;
  cfg.engine.generator.kind = GeneratorKind::kRemote;
  cfg.engine.generator.endpoint = "http://127.0.0.1:1";
  cfg.engine.generator.timeout = std::chrono::milliseconds(1000);
  LiveService svc(cfg);
  svc.post("/ingest", ingest_fixture_body());
  for (const char* q : {"Why do hard disk devices stop responding?", "hello",
                        "How many ERROR events occurred in the last hour?"}) {
    json r = svc.post("/query", {{"question", q}});
    EXPECT_TRUE(r["degraded"].get<bool>()) << q;
    EXPECT_NE(r["answer"].get<std::string>().find("Service unavailable"), std::string::npos) << q;
  }
  json h = svc.get("/health");
  EXPECT_FALSE(h["providers"]["generator"]["reachable"].get<bool>());
}

TEST(Service, EmbedderUnreachable) {
  ServiceConfig cfg;
  cfg.engine.embedding.kind = EmbeddingKind::kRemote;
  cfg.engine.embedding.endpoint = "http://127.0.0.1:1";
  cfg.engine.embedding.model_tag = "nomic-embed-text";
  cfg.engine.embedding.timeout = std::chrono::milliseconds(1000);
  LiveService svc(cfg);
  json ing = svc.post("/ingest", ingest_fixture_body());
  EXPECT_EQ(ing["embedded"], 0);
  json r = svc.post("/query", {{"question", "Why do hard disk devices stop responding?"}});
  EXPECT_EQ(r["route"]["path"], "semantic");
  EXPECT_TRUE(r["degraded"].get<bool>());
  EXPECT_EQ(r["strategy"], "keyword_only");
  EXPECT_FALSE(r["evidence"].empty());
}
