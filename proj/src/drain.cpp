#include "logrouter/drain.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "logrouter/error.hpp"
#include "logrouter/md5.hpp"
#include "logrouter/text.hpp"

namespace logrouter {

using nlohmann::json;

const std::vector<MaskRule>& default_mask_rules() {
  static const std::vector<MaskRule> rules = {
      {"ip", R"(\b\d{1,3}(?:\.\d{1,3}){3}\b)", "<IP>"},
      // Hex needs a letter or a 0x prefix; pure digit runs are integers.
      {"hex", R"(\b(?:0[xX][0-9a-fA-F]+|(?=[0-9a-fA-F]*[a-fA-F])[0-9a-fA-F]{8,})\b)", "<HEX>"},
      {"num", R"(\b\d+\b)", "<NUM>"},
  };
  return rules;
}

Masker::Masker(std::vector<MaskRule> rules) : rules_(std::move(rules)) {
  compiled_.reserve(rules_.size());
  for (const auto& r : rules_) {
    try {
      compiled_.emplace_back(r.pattern, std::regex::ECMAScript | std::regex::optimize);
      std::string fmt;
      for (char c : r.replacement) {
        if (c == '$') fmt += '$';
        fmt += c;
      }
      formats_.push_back(std::move(fmt));
    } catch (const std::regex_error& e) {
      throw Error(ErrorCode::kInvalidPattern,
                  "mask rule '" + r.name + "' does not compile: " + e.what());
    }
  }
}

std::string Masker::apply(std::string_view line) const {
  std::string out(line);
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    out = std::regex_replace(out, compiled_[i], formats_[i]);
  }
  return out;
}

std::string mask(std::string_view line, const std::vector<MaskRule>& rules) {
  if (&rules == &default_mask_rules()) {
    static const Masker kDefault;
    return kDefault.apply(line);
  }
  return Masker(rules).apply(line);
}

void DrainParams::validate() const {
  if (depth < 3) throw Error(ErrorCode::kInvalidConfig, "drain.depth must be >= 3");
  if (!(sim_th > 0.0 && sim_th <= 1.0))
    throw Error(ErrorCode::kInvalidConfig, "drain.sim_th must be in (0, 1]");
  if (max_children < 2) throw Error(ErrorCode::kInvalidConfig, "drain.max_children must be >= 2");
  if (id_prefix_len < 1 || id_prefix_len > 32)
    throw Error(ErrorCode::kInvalidConfig, "drain.id_prefix_len must be in [1, 32]");
}

std::string template_id_of(std::string_view template_string, int prefix_len) {
  if (template_string.empty()) {
    throw Error(ErrorCode::kInvalidTemplate, "template string is empty");
  }
  if (prefix_len < 1 || prefix_len > 32) {
    throw Error(ErrorCode::kInvalidTemplate, "template id prefix length must be in [1, 32]");
  }
  return md5_hex(template_string).substr(0, static_cast<std::size_t>(prefix_len));
}

struct DrainMiner::Cluster {
  std::vector<std::string> tokens;
  std::string template_string;
  std::string id;
  std::string example;
  std::size_t count = 0;
};

struct DrainMiner::Node {
  std::map<std::string, std::unique_ptr<Node>> children;
  std::vector<std::size_t> clusters;

  std::unique_ptr<Node> clone() const {
    auto n = std::make_unique<Node>();
    n->clusters = clusters;
    for (const auto& [k, v] : children) n->children.emplace(k, v->clone());
    return n;
  }
};

namespace {

bool has_digit(const std::string& s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// (similar tokens / length, wildcard count)
std::pair<double, int> seq_distance(const std::vector<std::string>& tmpl,
                                    const std::vector<std::string>& tokens,
                                    bool include_params) {
  int sim = 0;
  int params = 0;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == kWildcard) {
      ++params;
      continue;
    }
    if (tmpl[i] == tokens[i]) ++sim;
  }
  if (include_params) sim += params;
  return {static_cast<double>(sim) / static_cast<double>(tmpl.size()), params};
}

}  // namespace

DrainMiner::DrainMiner(DrainParams params, std::vector<MaskRule> masks)
    : params_(params), masker_(std::move(masks)), root_(std::make_unique<Node>()) {
  params_.validate();
}

DrainMiner::DrainMiner(const DrainMiner& other)
    : params_(other.params_),
      masker_(other.masker_),
      frozen_(other.frozen_),
      trained_records_(other.trained_records_),
      root_(other.root_->clone()),
      ids_(other.ids_) {
  clusters_.reserve(other.clusters_.size());
  for (const auto& c : other.clusters_) clusters_.push_back(std::make_unique<Cluster>(*c));
}

DrainMiner& DrainMiner::operator=(const DrainMiner& other) {
  if (this != &other) {
    DrainMiner copy(other);
    *this = std::move(copy);
  }
  return *this;
}

DrainMiner::DrainMiner(DrainMiner&&) noexcept = default;
DrainMiner& DrainMiner::operator=(DrainMiner&&) noexcept = default;
DrainMiner::~DrainMiner() = default;

std::string DrainMiner::assign_id(const std::string& template_string) {
  const std::string full = md5_hex(template_string);
  for (auto len = static_cast<std::size_t>(params_.id_prefix_len); len <= full.size(); ++len) {
    std::string id = full.substr(0, len);
    auto it = ids_.find(id);
    if (it == ids_.end()) {
      ids_.emplace(id, std::make_pair(template_string, std::size_t{1}));
      return id;
    }
    if (it->second.first == template_string) {
      ++it->second.second;
      return id;
    }
    // Prefix collision with a different template: lengthen this one's id.
  }
  throw Error(ErrorCode::kInvalidTemplate, "full MD5 collision for template: " + template_string);
}

void DrainMiner::release_id(const std::string& id, const std::string& template_string) {
  auto it = ids_.find(id);
  if (it == ids_.end() || it->second.first != template_string) return;
  if (--it->second.second == 0) ids_.erase(it);
}

DrainMiner::Cluster* DrainMiner::tree_search(const std::vector<std::string>& tokens,
                                             bool include_params) const {
  auto first = root_->children.find(std::to_string(tokens.size()));
  if (first == root_->children.end()) return nullptr;
  const Node* cur = first->second.get();
  const std::size_t max_node_depth = static_cast<std::size_t>(params_.depth - 2);
  std::size_t depth = 1;
  for (const auto& token : tokens) {
    if (depth >= max_node_depth || depth == tokens.size()) break;
    auto it = cur->children.find(token);
    if (it == cur->children.end()) it = cur->children.find(std::string(kWildcard));
    if (it == cur->children.end()) return nullptr;
    cur = it->second.get();
    ++depth;
  }
  Cluster* best = nullptr;
  double best_sim = -1.0;
  int best_params = -1;
  for (std::size_t idx : cur->clusters) {
    Cluster* c = clusters_[idx].get();
    auto [sim, params] = seq_distance(c->tokens, tokens, include_params);
    if (sim > best_sim || (sim == best_sim && params > best_params)) {
      best_sim = sim;
      best_params = params;
      best = c;
    }
  }
  if (best && best_sim >= params_.sim_th) return best;
  return nullptr;
}

void DrainMiner::add_to_tree(std::size_t cluster_index) {
  const auto& tokens = clusters_[cluster_index]->tokens;
  auto& first = root_->children[std::to_string(tokens.size())];
  if (!first) first = std::make_unique<Node>();
  Node* cur = first.get();
  const std::size_t max_node_depth = static_cast<std::size_t>(params_.depth - 2);
  const std::string wildcard(kWildcard);
  const auto max_children = static_cast<std::size_t>(params_.max_children);
  std::size_t depth = 1;
  for (const auto& token : tokens) {
    if (depth >= max_node_depth || depth >= tokens.size()) break;
    auto it = cur->children.find(token);
    if (it != cur->children.end()) {
      cur = it->second.get();
    } else if (has_digit(token)) {
      auto& child = cur->children[wildcard];
      if (!child) child = std::make_unique<Node>();
      cur = child.get();
    } else if (cur->children.count(wildcard)) {
      if (cur->children.size() < max_children) {
        auto& child = cur->children[token];
        child = std::make_unique<Node>();
        cur = child.get();
      } else {
        cur = cur->children[wildcard].get();
      }
    } else if (cur->children.size() + 1 < max_children) {
      auto& child = cur->children[token];
      child = std::make_unique<Node>();
      cur = child.get();
    } else {
      // The last free slot becomes the wildcard branch.
      auto& child = cur->children[wildcard];
      child = std::make_unique<Node>();
      cur = child.get();
    }
    ++depth;
  }
  cur->clusters.push_back(cluster_index);
}

std::string DrainMiner::train_line(std::string_view raw_line) {
  if (frozen_) throw Error(ErrorCode::kStateFrozen, "miner state is frozen");
  const std::string masked = masker_.apply(raw_line);
  auto tokens = split_whitespace(masked);
  if (tokens.empty()) tokens.emplace_back(kWildcard);
  ++trained_records_;

  if (Cluster* c = tree_search(tokens, false)) {
    bool changed = false;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (c->tokens[i] != tokens[i] && c->tokens[i] != kWildcard) {
        c->tokens[i] = std::string(kWildcard);
        changed = true;
      }
    }
    ++c->count;
    if (changed) {
      release_id(c->id, c->template_string);
      c->template_string = join(c->tokens, " ");
      c->id = assign_id(c->template_string);
    }
    return c->id;
  }

  auto c = std::make_unique<Cluster>();
  c->tokens = std::move(tokens);
  c->template_string = join(c->tokens, " ");
  c->id = assign_id(c->template_string);
  c->example = std::string(raw_line);
  c->count = 1;
  clusters_.push_back(std::move(c));
  add_to_tree(clusters_.size() - 1);
  return clusters_.back()->id;
}

void DrainMiner::train(const LogRecord& record) { train_line(record.line); }

void DrainMiner::train(const std::vector<LogRecord>& records) {
  if (frozen_) throw Error(ErrorCode::kStateFrozen, "miner state is frozen");
  for (const auto& r : records) train_line(r.line);
}

AnnotatedRecord DrainMiner::annotate_one(const LogRecord& record) const {
  AnnotatedRecord out;
  out.record = record;
  out.masked_line = masker_.apply(record.line);
  auto tokens = split_whitespace(out.masked_line);
  if (tokens.empty()) tokens.emplace_back(kWildcard);
  // Wildcards count as matches on lookup so a line that fits a generalized
  // template exactly is never reported unmatched.
  const Cluster* c = tree_search(tokens, true);
  out.template_id = c ? c->id : std::string(kUnmatchedTemplateId);
  return out;
}

std::vector<AnnotatedRecord> DrainMiner::annotate(const std::vector<LogRecord>& records) const {
  std::vector<AnnotatedRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(annotate_one(r));
  return out;
}

DrainMiner DrainMiner::frozen_copy() const {
  DrainMiner copy(*this);
  copy.frozen_ = true;
  return copy;
}

std::vector<Template> DrainMiner::catalogue() const {
  std::map<std::string, Template> by_id;
  for (const auto& c : clusters_) {
    auto [it, inserted] = by_id.try_emplace(c->id);
    Template& t = it->second;
    if (inserted) {
      t.template_id = c->id;
      t.template_string = c->template_string;
      t.example_line = c->example;
    }
    t.match_count += c->count;
  }
  std::vector<Template> out;
  out.reserve(by_id.size());
  for (auto& [id, t] : by_id) out.push_back(std::move(t));
  return out;
}

std::size_t DrainMiner::cluster_count() const { return clusters_.size(); }

namespace {

json node_to_json(const auto& node) {
  json j;
  j["clusters"] = node.clusters;
  json children = json::object();
  for (const auto& [k, v] : node.children) children[k] = node_to_json(*v);
  j["children"] = std::move(children);
  return j;
}

}  // namespace

json DrainMiner::to_json() const {
  json doc;
  doc["version"] = kStateFileVersion;
  doc["params"] = {{"depth", params_.depth},
                   {"sim_th", params_.sim_th},
                   {"max_children", params_.max_children},
                   {"id_prefix_len", params_.id_prefix_len}};
  json masks = json::array();
  for (const auto& m : masker_.rules()) {
    masks.push_back({{"name", m.name}, {"regex", m.pattern}, {"replacement", m.replacement}});
  }
  doc["masks"] = std::move(masks);
  doc["frozen"] = frozen_;
  doc["trained_records"] = trained_records_;
  json templates = json::array();
  for (const auto& t : catalogue()) {
    templates.push_back({{"id", t.template_id},
                         {"template", t.template_string},
                         {"count", t.match_count},
                         {"example", t.example_line}});
  }
  doc["templates"] = std::move(templates);
  json clusters = json::array();
  for (const auto& c : clusters_) {
    clusters.push_back({{"id", c->id},
                        {"template", c->template_string},
                        {"count", c->count},
                        {"example", c->example}});
  }
  doc["clusters"] = std::move(clusters);
  doc["tree"] = node_to_json(*root_);
  return doc;
}

DrainMiner DrainMiner::from_json(const json& doc) {
  try {
    const int version = doc.at("version").get<int>();
    if (version > kStateFileVersion) {
      throw Error(ErrorCode::kInvalidConfig,
                  "drain state file version " + std::to_string(version) + " is newer than supported");
    }
    DrainParams params;
    const auto& p = doc.at("params");
    params.depth = p.at("depth").get<int>();
    params.sim_th = p.at("sim_th").get<double>();
    params.max_children = p.at("max_children").get<int>();
    params.id_prefix_len = p.value("id_prefix_len", 8);
    std::vector<MaskRule> masks;
    for (const auto& m : doc.at("masks")) {
      masks.push_back({m.at("name").get<std::string>(), m.at("regex").get<std::string>(),
                       m.at("replacement").get<std::string>()});
    }
    DrainMiner miner(params, std::move(masks));
    miner.trained_records_ = doc.value("trained_records", std::size_t{0});
    for (const auto& cj : doc.at("clusters")) {
      auto c = std::make_unique<Cluster>();
      c->template_string = cj.at("template").get<std::string>();
      c->tokens = split_whitespace(c->template_string);
      c->id = cj.at("id").get<std::string>();
      c->example = cj.at("example").get<std::string>();
      c->count = cj.at("count").get<std::size_t>();
      auto [it, inserted] = miner.ids_.try_emplace(c->id, c->template_string, 0);
      ++it->second.second;
      miner.clusters_.push_back(std::move(c));
    }
    const std::size_t n = miner.clusters_.size();
    auto build = [n](auto&& self, const json& j) -> std::unique_ptr<Node> {
      auto node = std::make_unique<Node>();
      node->clusters = j.at("clusters").get<std::vector<std::size_t>>();
      for (std::size_t idx : node->clusters) {
        if (idx >= n) throw Error(ErrorCode::kInvalidConfig, "drain state: cluster index out of range");
      }
      for (const auto& [k, v] : j.at("children").items()) node->children.emplace(k, self(self, v));
      return node;
    };
    miner.root_ = build(build, doc.at("tree"));
    miner.frozen_ = doc.value("frozen", false);
    return miner;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("malformed drain state: ") + e.what());
  }
}

void DrainMiner::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kInvalidConfig, "cannot write drain state: " + path);
  out << to_json().dump(2) << '\n';
}

DrainMiner DrainMiner::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot read drain state: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, "malformed drain state " + path + ": " + e.what());
  }
  return from_json(doc);
}

}  // namespace logrouter
