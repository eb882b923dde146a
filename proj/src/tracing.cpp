#include "logrouter/tracing.hpp"

#include <cstdio>

#include "logrouter/error.hpp"

namespace logrouter {

std::string_view outcome_name(StageOutcome o) {
  switch (o) {
    case StageOutcome::kOk: return "ok";
    case StageOutcome::kError: return "error";
    case StageOutcome::kDegraded: return "degraded";
  }
  return "ok";
}

nlohmann::json to_json(const StageTrace& t) {
  return nlohmann::json{{"trace_id", t.trace_id},
                        {"stage", t.stage},
                        {"started", format_iso8601(t.started)},
                        {"duration_ms", t.duration_ms},
                        {"outcome", outcome_name(t.outcome)}};
}

FileTraceSink::FileTraceSink(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::app);
  if (!out_) throw Error(ErrorCode::kInvalidConfig, "cannot open trace log " + path.string());
}

void FileTraceSink::write(const StageTrace& trace) {
  std::lock_guard lock(mu_);
  out_ << to_json(trace).dump() << '\n';
  out_.flush();
}

void MemoryTraceSink::write(const StageTrace& trace) {
  std::lock_guard lock(mu_);
  traces_.push_back(trace);
}

std::vector<StageTrace> MemoryTraceSink::snapshot() const {
  std::lock_guard lock(mu_);
  return traces_;
}

std::vector<StageTrace> MemoryTraceSink::for_trace(const std::string& trace_id) const {
  std::lock_guard lock(mu_);
  std::vector<StageTrace> out;
  for (const StageTrace& t : traces_) {
    if (t.trace_id == trace_id) out.push_back(t);
  }
  return out;
}

std::size_t MemoryTraceSink::size() const {
  std::lock_guard lock(mu_);
  return traces_.size();
}

TraceIdSource::TraceIdSource() : rng_(std::random_device{}()) {}
TraceIdSource::TraceIdSource(std::uint64_t seed) : rng_(seed) {}

std::string TraceIdSource::next() {
  std::uint64_t hi, lo;
  {
    std::lock_guard lock(mu_);
    hi = rng_();
    lo = rng_();
  }
  hi = (hi & 0xffffffffffff0fffULL) | 0x0000000000004000ULL;
  lo = (lo & 0x3fffffffffffffffULL) | 0x8000000000000000ULL;
  char buf[37];
  std::snprintf(buf, sizeof buf, "%08x-%04x-%04x-%04x-%012llx",
                static_cast<unsigned>(hi >> 32), static_cast<unsigned>((hi >> 16) & 0xffff),
                static_cast<unsigned>(hi & 0xffff), static_cast<unsigned>(lo >> 48),
                static_cast<unsigned long long>(lo & 0xffffffffffffULL));
  return buf;
}

bool is_uuid_v4(std::string_view s) {
  if (s.size() != 36) return false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (i == 8 || i == 13 || i == 18 || i == 23) {
      if (c != '-') return false;
    } else if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) {
      return false;
    }
  }
  return s[14] == '4' && (s[19] == '8' || s[19] == '9' || s[19] == 'a' || s[19] == 'b');
}

RequestTrace::RequestTrace(std::string trace_id, TraceSink* sink)
    : trace_id_(std::move(trace_id)), sink_(sink) {}

RequestTrace::Span::Span(RequestTrace& owner, std::string_view stage)
    : owner_(owner),
      stage_(stage),
      started_(std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now())),
      start_(std::chrono::steady_clock::now()) {}

RequestTrace::Span::~Span() {
  std::chrono::duration<double, std::milli> d = std::chrono::steady_clock::now() - start_;
  owner_.record(stage_, started_, d.count(), outcome_);
}

void RequestTrace::record(std::string_view stage, Timestamp started, double duration_ms,
                          StageOutcome outcome) {
  std::string name(stage);
  latencies_[name] = duration_ms;
  starts_[name] = started;
  if (sink_) sink_->write(StageTrace{trace_id_, name, started, duration_ms, outcome});
}

}  // namespace logrouter
