// logrouter command line: indexing, queries, the HTTP service and the
// evaluation harness.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "logrouter/config.hpp"
#include "logrouter/engine.hpp"
#include "logrouter/error.hpp"
#include "logrouter/eval.hpp"
#include "logrouter/service.hpp"

namespace fs = std::filesystem;
using namespace logrouter;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::string snapshot;
  std::string vocab;
};

ServiceConfig load_config(const Common& c) {
  ServiceConfig cfg = c.config.empty() ? service_config_from_env() : load_service_config(c.config);
  if (!c.snapshot.empty()) cfg.snapshot_dir = c.snapshot;
  if (!c.vocab.empty()) cfg.vocab_path = c.vocab;
  return cfg;
}

bool has_snapshot(const std::optional<fs::path>& dir) {
  return dir && fs::exists(*dir / "meta.json");
}

std::unique_ptr<Engine> open_engine(const ServiceConfig& cfg) {
  auto engine = Engine::create(cfg.engine, nullptr, cfg.vocab_path);
  if (has_snapshot(cfg.snapshot_dir)) engine->load(*cfg.snapshot_dir);
  return engine;
}

SourceDescriptor source_for(const std::string& dataset, const std::string& ts_format, int year) {
  SourceDescriptor src;
  src.dataset = dataset;
  if (!ts_format.empty()) src.ts_format = ts_format;
  src.default_year = year;
  return src;
}

QueryOptions query_options(const std::string& ablation, const std::string& strategy, const std::string& dataset) {
  QueryOptions o;
  if (!ablation.empty()) o.ablation = parse_ablation(ablation);
  if (!strategy.empty()) {
    o.strategy = parse_strategy(strategy);
    if (!o.strategy) throw Error(ErrorCode::kInvalidConfig, "unknown retrieval strategy '" + strategy + "'");
  }
  if (!dataset.empty()) o.dataset = dataset;
  return o;
}

void print_response(const QueryResponse& r, bool as_json) {
  if (as_json) {
    std::cout << to_json(r).dump(2) << "\n";
    return;
  }
  std::cout << r.answer << "\n";
  std::cerr << "[route=" << route_path_name(r.route.path) << " tier=" << model_tier_name(r.tier)
            << " trace=" << r.trace_id << (r.degraded ? " degraded" : "") << "]\n";
}

Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"logrouter: routed question answering over logs"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config, "JSON config file (default: LOGROUTER_CONFIG)");
  app.add_option("--snapshot", common.snapshot, "Snapshot directory");
  app.add_option("--vocab", common.vocab, "Router vocabulary file");

  std::string file, dataset, ts_format, question, ablation, strategy, out, questions, data_root;
  int year = 1970;
  bool as_json = false;

  auto* ingest = app.add_subcommand("ingest", "Ingest a log file into the snapshot");
  ingest->add_option("--file", file, "Log file")->required()->check(CLI::ExistingFile);
  ingest->add_option("--dataset", dataset, "Dataset name")->required();
  ingest->add_option("--ts-format", ts_format, "Timestamp format, e.g. \"%b %d %H:%M:%S\"");
  ingest->add_option("--year", year, "Year for formats without one");
  ingest->add_flag("--freeze", "Freeze the template miner afterwards");

  auto* train = app.add_subcommand("train-drain", "Mine templates from a file and write the miner state");
  train->add_option("--file", file, "Log file")->required()->check(CLI::ExistingFile);
  train->add_option("--out", out, "Output JSON")->required();
  train->add_flag("--freeze", "Write the state frozen");

  auto* freeze = app.add_subcommand("freeze-drain", "Freeze the template miner in a snapshot");

  auto* query = app.add_subcommand("query", "Answer one question");
  query->add_option("--question,-q", question, "Question")->required();
  query->add_option("--ablation,--condition", ablation, "Ablation condition");
  query->add_option("--strategy", strategy, "Retrieval strategy");
  query->add_option("--dataset", dataset, "Restrict to a dataset");
  query->add_flag("--json", as_json, "Print the full response as JSON");

  auto* repl = app.add_subcommand("repl", "Answer questions read from stdin");
  repl->add_option("--ablation,--condition", ablation, "Ablation condition");
  repl->add_option("--strategy", strategy, "Retrieval strategy");
  repl->add_flag("--json", as_json, "Print full responses as JSON");

  auto* explain = app.add_subcommand("explain", "Show routing decisions for a question");
  explain->add_option("--question,-q", question, "Question")->required();
  explain->add_option("--ablation,--condition", ablation, "Ablation condition");

  std::string host;
  int port = -1;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--host", host, "Listen host");
  serve->add_option("--port", port, "Listen port (0 picks one)");

  std::uint64_t seed = 20240601;
  std::size_t k = 10;
  bool offline = false;
  std::vector<std::string> conditions;
  auto* eval = app.add_subcommand("eval", "Run the evaluation harness");
  eval->add_option("--questions", questions, "Question set (JSONL)")->required()->check(CLI::ExistingFile);
  eval->add_option("--condition,--ablation", conditions, "Conditions (repeatable, or 'all')");
  eval->add_option("--out", out, "Output directory")->required();
  eval->add_option("--data-root", data_root, "Directory holding <dataset>.log files");
  eval->add_option("--seed", seed, "Trace id seed");
  eval->add_option("--year", year, "Year for syslog timestamps without one");
  eval->add_option("--k", k, "Cut-off for retrieval metrics");
  eval->add_option("--strategy", strategy, "Offline retrieval strategy");
  eval->add_flag("--offline", offline, "Retrieve and generate per question without the router paths");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    ServiceConfig cfg = load_config(common);

    if (*ingest) {
      auto engine = open_engine(cfg);
      IngestSummary s = engine->ingest_file(file, source_for(dataset, ts_format, year));
      if (ingest->count("--freeze")) engine->freeze_drain();
      if (cfg.snapshot_dir) engine->save(*cfg.snapshot_dir);
      std::cout << to_json(s).dump(2) << "\n";
      return 0;
    }
    if (*train) {
      DrainMiner miner(cfg.engine.drain);
      std::ifstream in(file);
      std::string line;
      while (std::getline(in, line)) {
        if (!line.empty()) miner.train_line(line);
      }
      if (train->count("--freeze")) miner.freeze();
      miner.save(out);
      std::cout << miner.cluster_count() << " templates from " << miner.trained_records() << " lines\n";
      return 0;
    }
    if (*freeze) {
      if (!has_snapshot(cfg.snapshot_dir)) throw Error(ErrorCode::kInvalidConfig, "freeze-drain needs --snapshot");
      auto engine = open_engine(cfg);
      engine->freeze_drain();
      engine->save(*cfg.snapshot_dir);
      std::cout << "frozen with " << engine->templates().size() << " templates\n";
      return 0;
    }
    if (*query) {
      auto engine = open_engine(cfg);
      print_response(engine->answer_query(question, query_options(ablation, strategy, dataset)), as_json);
      return 0;
    }
    if (*repl) {
      auto engine = open_engine(cfg);
      QueryOptions o = query_options(ablation, strategy, "");
      std::string line;
      std::cerr << "> " << std::flush;
      while (std::getline(std::cin, line)) {
        if (!line.empty()) {
          try {
            print_response(engine->answer_query(line, o), as_json);
          } catch (const Error& e) {
            std::cerr << "error: " << e.what() << "\n";
          }
        }
        std::cerr << "> " << std::flush;
      }
      return 0;
    }
    if (*explain) {
      auto engine = open_engine(cfg);
      json j = to_json(engine->explain(question, query_options(ablation, "", "")));
      j["question"] = question;
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (*serve) {
      if (!host.empty()) cfg.host = host;
      if (port >= 0) cfg.port = port;
      std::shared_ptr<Engine> engine = open_engine(cfg);
      Service service(cfg, engine);
      int bound = service.bind();
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on http://" << cfg.host << ":" << bound << "\n";
      service.run();
      g_service = nullptr;
      return 0;
    }
    if (*eval) {
      cfg.engine.trace_seed = seed;
      std::vector<QuestionRecord> qs = load_questions(questions);
      std::vector<Ablation> conds;
      for (const std::string& c : conditions) {
        if (c == "all") {
          conds = all_ablations();
          break;
        }
        conds.push_back(parse_ablation(c));
      }
      if (conds.empty()) conds.push_back(Ablation::kFull);
      fs::path root = data_root.empty() ? fs::path(questions).parent_path() : fs::path(data_root);

      json summary = json::array();
      for (Ablation cond : conds) {
        // A fresh engine per condition keeps trace ids and template state
        // independent of run order.
        auto engine = open_engine(cfg);
        if (!offline && !has_snapshot(cfg.snapshot_dir)) {
          std::set<std::string> datasets;
          for (const QuestionRecord& q : qs) datasets.insert(q.dataset);
          for (const std::string& d : datasets) {
            fs::path log = root / (d + ".log");
            if (fs::exists(log)) engine->ingest_file(log, source_for(d, "", year));
          }
        }
        EvalOptions opts;
        opts.condition = cond;
        opts.mode = offline ? EvalMode::kOffline : EvalMode::kOnline;
        opts.data_root = root;
        opts.seed = seed;
        opts.k = k;
        if (!strategy.empty()) {
          auto s = parse_strategy(strategy);
          if (!s) throw Error(ErrorCode::kInvalidConfig, "unknown retrieval strategy '" + strategy + "'");
          opts.offline_strategy = *s;
        }
        opts.out_dir = conds.size() == 1 ? fs::path(out) : fs::path(out) / std::string(ablation_name(cond));
        MetricsReport r = run_eval(*engine, qs, opts);
        json row = to_json(r);
        summary.push_back({{"condition", ablation_name(cond)},
                           {"routing_accuracy", row["routing"]["accuracy"]},
                           {"mean_cosine", row["answer"]["mean_cosine"]},
                           {"mean_rouge1_f1", row["answer"]["mean_rouge1_f1"]},
                           {"hit_at_k", row["retrieval"]["hit_at_k"]},
                           {"mrr", row["retrieval"]["mrr"]},
                           {"errors", r.errors.size()}});
      }
      std::cout << summary.dump(2) << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << error_code_name(e.code()) << "): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
