#pragma once

#include <memory>

#include "logrouter/config.hpp"
#include "logrouter/engine.hpp"

namespace logrouter {

// HTTP front door:
//   POST /query            {question, strategy?, ablation?, dataset?}
//   POST /ingest           {dataset, lines | file, namespace?, app?, pod?,
//                           container?, ts_format?, default_year?}
//   GET  /templates
//   GET  /routes/explain?q=...[&ablation=...]
//   GET  /health
//   GET  /config
class Service {
 public:
  Service(ServiceConfig cfg, std::shared_ptr<Engine> engine);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds the listen address; port 0 picks a free port. Throws
  // kInvalidConfig when the address is unavailable.
  int bind();
  // Blocks until stop().
  void run();
  void stop();
  // Blocks until the server accepts connections.
  void wait_until_ready() const;

  Engine& engine() { return *engine_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  ServiceConfig cfg_;
  std::shared_ptr<Engine> engine_;
};

}  // namespace logrouter
