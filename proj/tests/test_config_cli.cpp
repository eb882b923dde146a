#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <sys/wait.h>

#include "logrouter/config.hpp"
#include "logrouter/error.hpp"
#include "support.hpp"

using namespace logrouter;
using nlohmann::json;

namespace {

struct CliRun {
  int status = -1;
  std::string out;
};

CliRun cli(const std::string& args) {
  std::string cmd = std::string(LOGROUTER_CLI) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  std::array<char, 4096> buf{};
  while (std::size_t n = fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
  int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string config_error(const json& j) {
  try {
    service_config_from_json(j);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig);
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, Defaults) {
  ServiceConfig c = service_config_from_json(json::object());
  EXPECT_EQ(c.port, 8080);
  EXPECT_EQ(c.engine.chunker.window, 25);
  EXPECT_EQ(c.engine.chunker.overlap, 3);
  EXPECT_EQ(c.engine.k_rrf, 60);
  EXPECT_EQ(c.engine.top_k, 10u);
  EXPECT_EQ(c.engine.per_backend, 20u);
  EXPECT_DOUBLE_EQ(c.engine.router.sql_threshold, 0.3);
  EXPECT_DOUBLE_EQ(c.engine.router.event_threshold, 0.5);
  EXPECT_EQ(c.engine.embedding.effective_dim(), 256);
  ServiceConfig back = service_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
}

TEST(Config, FieldPreciseErrors) {
  EXPECT_NE(config_error({{"chunker", {{"overlap", 30}}}}).find("overlap"), std::string::npos);
  EXPECT_NE(config_error({{"drain", {{"sim_th", 2.0}}}}).find("sim_th"), std::string::npos);
  EXPECT_NE(config_error({{"retrieval", {{"strategy", "psychic"}}}}).find("strategy"), std::string::npos);
  EXPECT_NE(config_error({{"ablation", "no_brain"}}).find("no_brain"), std::string::npos);
  EXPECT_NE(config_error({{"listen", {{"port", 70000}}}}).find("port"), std::string::npos);
  EXPECT_NE(config_error({{"embedding", {{"kind", "remote"}}}}).find("endpoint"), std::string::npos);
}

TEST(Cli, UnknownSubcommandExitsTwo) {
  EXPECT_EQ(cli("frobnicate").status, 2);
  EXPECT_EQ(cli("").status, 2);
}

TEST(Cli, ExplainPrintsRoute) {
  CliRun r = cli("explain --question \"What is the IP address?\"");
  ASSERT_EQ(r.status, 0);
  json j = json::parse(r.out);
  EXPECT_EQ(j["route"]["path"], "keyword");
  EXPECT_EQ(j["route"]["matched_patterns"][0], "P1");
}

TEST(Cli, IngestThenQueryThroughSnapshot) {
  auto dir = std::filesystem::temp_directory_path() / "logrouter_cli_snap";
  std::filesystem::remove_all(dir);
  CliRun ing = cli("--snapshot " + dir.string() + " ingest --dataset linux --year 2005 --file " +
                fixtures::linux_fixture().string());
  ASSERT_EQ(ing.status, 0);
  EXPECT_EQ(json::parse(ing.out)["report"]["records"], 2000);
  CliRun q = cli("--snapshot " + dir.string() + " query -q \"How many lines per level?\"");
  ASSERT_EQ(q.status, 0);
  EXPECT_EQ(q.out, "UNKNOWN: 1921\nERROR: 40\nWARN: 39\n");
  EXPECT_EQ(cli("--snapshot " + dir.string() + " freeze-drain").status, 0);
  std::filesystem::remove_all(dir);
}

TEST(Cli, BadAblationIsConfigError) {
  EXPECT_EQ(cli("explain -q hi --ablation nope").status, 1);
}
