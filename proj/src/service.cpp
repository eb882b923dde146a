#include "logrouter/service.hpp"

#include <httplib.h>

#include "logrouter/error.hpp"

namespace logrouter {

using nlohmann::json;

namespace {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kInvalidInput:
    case ErrorCode::kInvalidQuery:
    case ErrorCode::kInvalidPattern:
    case ErrorCode::kIngestionFailed:
    case ErrorCode::kTermRejected:
      return 400;
    case ErrorCode::kProviderUnavailable:
    case ErrorCode::kGeneratorUnavailable:
      return 503;
    default:
      return 500;
  }
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  reply(res, http_status(code), json{{"error", error_code_name(code)}, {"message", message}});
}

json parse_body(const httplib::Request& req) {
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::kInvalidInput, "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, std::string("request body is not valid JSON: ") + e.what());
  }
}

std::optional<std::string> opt_string(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_string()) throw Error(ErrorCode::kInvalidInput, std::string(key) + " must be a string");
  return j[key].get<std::string>();
}

QueryOptions query_options(const std::optional<std::string>& strategy,
                           const std::optional<std::string>& ablation,
                           const std::optional<std::string>& dataset) {
  QueryOptions opts;
  if (strategy) {
    opts.strategy = parse_strategy(*strategy);
    if (!opts.strategy) throw Error(ErrorCode::kInvalidConfig, "unknown retrieval strategy '" + *strategy + "'");
  }
  if (ablation) opts.ablation = parse_ablation(*ablation);
  opts.dataset = dataset;
  return opts;
}

json template_json(const Template& t) {
  return json{{"template_id", t.template_id},
              {"template_string", t.template_string},
              {"example_line", t.example_line},
              {"match_count", t.match_count}};
}

}  // namespace

struct Service::Impl {
  httplib::Server server;
  int port = -1;
};

Service::Service(ServiceConfig cfg, std::shared_ptr<Engine> engine)
    : impl_(std::make_unique<Impl>()), cfg_(std::move(cfg)), engine_(std::move(engine)) {
  httplib::Server& s = impl_->server;
  s.set_default_headers({{"Access-Control-Allow-Origin", cfg_.cors_origin},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                         {"Access-Control-Allow-Headers", "Content-Type"}});
  s.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  // Route handlers throw; this turns errors into JSON payloads.
  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      reply_error(res, e.code(), e.what());
    } catch (const std::exception& e) {
      reply(res, 500, json{{"error", "internal"}, {"message", e.what()}});
    }
  });

  s.Post("/query", [this](const httplib::Request& req, httplib::Response& res) {
    json body = parse_body(req);
    std::optional<std::string> question = opt_string(body, "question");
    if (!question || question->empty()) throw Error(ErrorCode::kInvalidInput, "question is required");
    QueryOptions opts =
        query_options(opt_string(body, "strategy"), opt_string(body, "ablation"), opt_string(body, "dataset"));
    reply(res, 200, to_json(engine_->answer_query(*question, opts)));
  });

  s.Post("/ingest", [this](const httplib::Request& req, httplib::Response& res) {
    json body = parse_body(req);
    SourceDescriptor src;
    src.dataset = opt_string(body, "dataset").value_or("");
    if (auto v = opt_string(body, "namespace")) src.namespace_ = *v;
    if (auto v = opt_string(body, "app")) src.app = *v;
    if (auto v = opt_string(body, "pod")) src.pod = *v;
    if (auto v = opt_string(body, "container")) src.container = *v;
    src.ts_format = opt_string(body, "ts_format");
    if (body.contains("default_year")) src.default_year = body["default_year"].get<int>();
    IngestSummary summary;
    if (body.contains("lines")) {
      if (!body["lines"].is_array()) throw Error(ErrorCode::kInvalidInput, "lines must be an array of strings");
      summary = engine_->ingest_lines(body["lines"].get<std::vector<std::string>>(), src);
    } else if (auto file = opt_string(body, "file")) {
      summary = engine_->ingest_file(*file, src);
    } else {
      throw Error(ErrorCode::kInvalidInput, "ingest needs 'lines' or 'file'");
    }
    if (cfg_.snapshot_dir) engine_->save(*cfg_.snapshot_dir);
    reply(res, 200, to_json(summary));
  });

  s.Get("/templates", [this](const httplib::Request&, httplib::Response& res) {
    json list = json::array();
    for (const Template& t : engine_->templates()) list.push_back(template_json(t));
    reply(res, 200, json{{"count", list.size()}, {"templates", list}});
  });

  s.Get("/routes/explain", [this](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("q") || req.get_param_value("q").empty()) {
      throw Error(ErrorCode::kInvalidInput, "query parameter q is required");
    }
    auto param = [&](const char* k) -> std::optional<std::string> {
      if (!req.has_param(k)) return std::nullopt;
      return req.get_param_value(k);
    };
    QueryOptions opts = query_options(param("strategy"), param("ablation"), param("dataset"));
    json out = to_json(engine_->explain(req.get_param_value("q"), opts));
    out["question"] = req.get_param_value("q");
    reply(res, 200, out);
  });

  s.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, engine_->health());
  });

  s.Get("/config", [this](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, to_json(cfg_));
  });
}

Service::~Service() { stop(); }

int Service::bind() {
  httplib::Server& s = impl_->server;
  if (cfg_.port == 0) {
    impl_->port = s.bind_to_any_port(cfg_.host);
  } else {
    impl_->port = s.bind_to_port(cfg_.host, cfg_.port) ? cfg_.port : -1;
  }
  if (impl_->port < 0) {
    throw Error(ErrorCode::kInvalidConfig,
                "listen: cannot bind " + cfg_.host + ":" + std::to_string(cfg_.port));
  }
  return impl_->port;
}

void Service::run() {
  if (impl_->port < 0) bind();
  impl_->server.listen_after_bind();
}

void Service::stop() {
  if (impl_) impl_->server.stop();
}

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace logrouter
