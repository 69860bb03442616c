#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "bratsos/posenc.hpp"
#include "bratsos/survreg/evaluate.hpp"
#include "bratsos/survreg/gbdt.hpp"

namespace bratsos::cli {

// Which feature groups a run uses: a = deep (external CSV), b = handcrafted,
// c = position encoding.
struct FeatureSets {
  bool deep = false;
  bool handcrafted = false;
  bool posenc = false;

  bool any() const { return deep || handcrafted || posenc; }
  static FeatureSets parse(const std::string& s);
  std::string str() const;
};

struct PipelineConfig {
  std::filesystem::path seg_dir;
  std::filesystem::path t1ce_dir;
  std::filesystem::path brain_mask_dir;
  std::filesystem::path atlas;
  std::filesystem::path metadata;
  std::filesystem::path deep_features;
  std::filesystem::path output;
  FeatureSets sets{false, true, true};
  PoolMode pool = PoolMode::kMean;
  GbdtConfig gbdt;
  SurvivalBuckets buckets;
  std::size_t select_top_k = 0;
  std::size_t pca_components = 0;
  double hd_percentile = 100.0;
  std::size_t workers = 1;
};

/// Flat `key = value` document; `#` starts a comment, values may be quoted,
/// `[section]` headers are ignored.
std::map<std::string, std::string> parse_config_text(const std::string& text, const std::string& source);
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

/// Applies known keys to cfg; unknown keys raise an ArgumentError.
void apply_config(PipelineConfig& cfg, const std::map<std::string, std::string>& kv);

/// BRATSOS_WORKERS, when set to a positive integer.
std::optional<std::size_t> workers_from_env();

}  // namespace bratsos::cli
