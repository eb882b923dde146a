#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "logrouter/record.hpp"

namespace logrouter {

inline constexpr std::string_view kWildcard = "<*>";
inline constexpr std::string_view kUnmatchedTemplateId = "unmatched";
inline constexpr int kStateFileVersion = 1;

struct MaskRule {
  std::string name;
  std::string pattern;
  std::string replacement;
};

// IPv4 -> <IP>, hex of 8+ chars -> <HEX>, integers -> <NUM>, in that order.
const std::vector<MaskRule>& default_mask_rules();

class Masker {
 public:
  explicit Masker(std::vector<MaskRule> rules = default_mask_rules());

  std::string apply(std::string_view line) const;
  const std::vector<MaskRule>& rules() const { return rules_; }

 private:
  std::vector<MaskRule> rules_;
  std::vector<std::regex> compiled_;
  std::vector<std::string> formats_;
};

std::string mask(std::string_view line,
                 const std::vector<MaskRule>& rules = default_mask_rules());

struct DrainParams {
  int depth = 4;
  double sim_th = 0.4;
  int max_children = 100;
  int id_prefix_len = 8;

  void validate() const;
  bool operator==(const DrainParams&) const = default;
};

struct Template {
  std::string template_id;
  std::string template_string;
  std::string example_line;
  std::size_t match_count = 0;

  bool operator==(const Template&) const = default;
};

struct AnnotatedRecord {
  LogRecord record;
  std::string template_id;
  std::string masked_line;
};

// Lowercase hex prefix of MD5(template_string). Throws kInvalidTemplate on an
// empty string or a prefix length outside [1, 32].
std::string template_id_of(std::string_view template_string,
                           int prefix_len = 8);

// Fixed-depth parse tree miner. The first tree level is keyed by token count,
// the next depth-2 levels by leading tokens, and leaves hold clusters that
// merge when token similarity reaches sim_th.
//
// Training is single-writer. Once frozen the miner is immutable and may be
// shared by any number of annotating threads.
class DrainMiner {
 public:
  explicit DrainMiner(DrainParams params = {},
                      std::vector<MaskRule> masks = default_mask_rules());
  DrainMiner(const DrainMiner& other);
  DrainMiner& operator=(const DrainMiner& other);
  DrainMiner(DrainMiner&&) noexcept;
  DrainMiner& operator=(DrainMiner&&) noexcept;
  ~DrainMiner();

  // Throws kStateFrozen when frozen.
  void train(const LogRecord& record);
  void train(const std::vector<LogRecord>& records);
  // Trains one masked line; returns the id of the cluster it landed in.
  std::string train_line(std::string_view raw_line);

  // Lookup only; misses yield kUnmatchedTemplateId. Output order equals input
  // order.
  std::vector<AnnotatedRecord> annotate(
      const std::vector<LogRecord>& records) const;
  AnnotatedRecord annotate_one(const LogRecord& record) const;

  DrainMiner frozen_copy() const;
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  // Catalogue ordered by template_id. Clusters that share a template string
  // share one entry with summed counts.
  std::vector<Template> catalogue() const;
  std::size_t cluster_count() const;
  std::size_t trained_records() const { return trained_records_; }

  const DrainParams& params() const { return params_; }
  const std::vector<MaskRule>& masks() const { return masker_.rules(); }

  nlohmann::json to_json() const;
  static DrainMiner from_json(const nlohmann::json& doc);

  void save(const std::string& path) const;
  static DrainMiner load(const std::string& path);

 private:
  struct Cluster;
  struct Node;

  Cluster* tree_search(const std::vector<std::string>& tokens, bool include_params) const;
  void add_to_tree(std::size_t cluster_index);
  std::string assign_id(const std::string& template_string);
  void release_id(const std::string& id, const std::string& template_string);

  DrainParams params_;
  Masker masker_;
  bool frozen_ = false;
  std::size_t trained_records_ = 0;
  std::vector<std::unique_ptr<Cluster>> clusters_;
  std::unique_ptr<Node> root_;
  // id -> (template string, number of clusters currently using it)
  std::map<std::string, std::pair<std::string, std::size_t>> ids_;
};

}  // namespace logrouter
