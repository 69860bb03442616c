#include "config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "bratsos/csv.hpp"
#include "bratsos/error.hpp"

namespace bratsos::cli {

FeatureSets FeatureSets::parse(const std::string& s) {
  FeatureSets f;
  for (char c : s) {
    switch (c) {
      case 'a': f.deep = true; break;
      case 'b': f.handcrafted = true; break;
      case 'c': f.posenc = true; break;
      case '+': case ',': case ' ': break;
      default: throw ArgumentError(std::string("feature sets: unknown flag '") + c + "' (expected a, b, c)");
    }
  }
  if (!f.any()) throw ArgumentError("feature sets: at least one of a, b, c is required");
  return f;
}

std::string FeatureSets::str() const {
  std::string s;
  if (deep) s += 'a';
  if (handcrafted) s += 'b';
  if (posenc) s += 'c';
  return s;
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_real(const std::string& key, const std::string& v) {
  auto r = parse_real(v);
  if (!r) throw ArgumentError("config: " + key + " expects a number, got '" + v + "'");
  return *r;
}

std::size_t to_count(const std::string& key, const std::string& v) {
  const double r = to_real(key, v);
  if (r < 0 || r != static_cast<double>(static_cast<std::size_t>(r)))
    throw ArgumentError("config: " + key + " expects a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(r);
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text, const std::string& source) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(source + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    for (char& c : key)
      if (c == '-') c = '_';
    if (key.empty()) throw FormatError(source + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

void apply_config(PipelineConfig& cfg, const std::map<std::string, std::string>& kv) {
  const std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters{
      {"seg_dir", [&](auto&, auto& v) { cfg.seg_dir = v; }},
      {"t1ce_dir", [&](auto&, auto& v) { cfg.t1ce_dir = v; }},
      {"brain_mask_dir", [&](auto&, auto& v) { cfg.brain_mask_dir = v; }},
      {"atlas", [&](auto&, auto& v) { cfg.atlas = v; }},
      {"metadata", [&](auto&, auto& v) { cfg.metadata = v; }},
      {"deep_features", [&](auto&, auto& v) { cfg.deep_features = v; }},
      {"output", [&](auto&, auto& v) { cfg.output = v; }},
      {"sets", [&](auto&, auto& v) { cfg.sets = FeatureSets::parse(v); }},
      {"pool",
       [&](auto& k, auto& v) {
         if (v == "mean") cfg.pool = PoolMode::kMean;
         else if (v == "max") cfg.pool = PoolMode::kMax;
         else throw ArgumentError("config: " + k + " must be mean or max");
       }},
      {"n_trees", [&](auto& k, auto& v) { cfg.gbdt.n_trees = to_count(k, v); }},
      {"max_depth", [&](auto& k, auto& v) { cfg.gbdt.max_depth = static_cast<int>(to_real(k, v)); }},
      {"learning_rate", [&](auto& k, auto& v) { cfg.gbdt.learning_rate = to_real(k, v); }},
      {"min_leaf", [&](auto& k, auto& v) { cfg.gbdt.min_leaf = to_count(k, v); }},
      {"bucket_short", [&](auto& k, auto& v) { cfg.buckets.short_below = to_real(k, v); }},
      {"bucket_long", [&](auto& k, auto& v) { cfg.buckets.long_above = to_real(k, v); }},
      {"select_top_k", [&](auto& k, auto& v) { cfg.select_top_k = to_count(k, v); }},
      {"pca_components", [&](auto& k, auto& v) { cfg.pca_components = to_count(k, v); }},
      {"hd_percentile", [&](auto& k, auto& v) { cfg.hd_percentile = to_real(k, v); }},
      {"workers", [&](auto& k, auto& v) { cfg.workers = std::max<std::size_t>(1, to_count(k, v)); }},
  };
  for (const auto& [k, v] : kv) {
    auto it = setters.find(k);
    if (it == setters.end()) throw ArgumentError("config: unknown key '" + k + "'");
    it->second(k, v);
  }
}

std::optional<std::size_t> workers_from_env() {
  const char* s = std::getenv("BRATSOS_WORKERS");
  if (!s) return std::nullopt;
  auto v = parse_real(s);
  if (!v || *v < 1) return std::nullopt;
  return static_cast<std::size_t>(*v);
}

}  // namespace bratsos::cli
