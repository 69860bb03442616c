#pragma once

// End-to-end survival regressor (optional PCA block → z-score → GBDT, with
// optional importance-based feature selection) and its versioned JSON form.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "bratsos/error.hpp"
#include "bratsos/survreg/evaluate.hpp"
#include "bratsos/survreg/feature_matrix.hpp"
#include "bratsos/survreg/gbdt.hpp"
#include "bratsos/survreg/normalize.hpp"
#include "bratsos/survreg/pca.hpp"

namespace bratsos {

inline constexpr int kModelFormatVersion = 1;
inline constexpr const char* kModelFormatName = "bratsos-survival-gbdt";

struct TrainOptions {
  GbdtConfig gbdt;
  SurvivalBuckets buckets;
  // Columns reduced by PCA before normalization (deep features); empty = none.
  std::vector<std::string> pca_columns;
  std::size_t pca_components = 0;
  std::string pca_prefix = "deep_pc";
  // 0 keeps every feature; otherwise refit on the top-k by split gain.
  std::size_t select_top_k = 0;
};

struct SurvivalModel {
  std::vector<std::string> input_columns;   // consumed from the features table, in order
  std::vector<std::string> pca_columns;
  std::optional<PCAModel> pca;
  std::string pca_prefix = "deep_pc";
  std::vector<std::string> feature_names;   // after PCA; the normalized space
  NormStats norm;
  std::vector<std::string> selected;        // features the trees index, in feature_names order
  GbdtConfig config;
  GbdtModel gbdt;
  SurvivalBuckets buckets;

  friend bool operator==(const SurvivalModel&, const SurvivalModel&) = default;
};

namespace model_detail {

inline std::vector<std::size_t> indices_of(const std::vector<std::string>& have, const std::vector<std::string>& want,
                                           const char* what) {
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < have.size(); ++i) pos.emplace(have[i], i);
  std::vector<std::size_t> out;
  std::vector<std::string> missing;
  for (const auto& w : want) {
    auto it = pos.find(w);
    if (it == pos.end()) missing.push_back(w);
    else out.push_back(it->second);
  }
  if (!missing.empty()) {
    std::string msg = std::string(what) + ": " + std::to_string(missing.size()) + " column(s) missing, first: ";
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 5); ++i) msg += (i ? ", " : "") + missing[i];
    throw ArgumentError(msg);
  }
  return out;
}

inline FeatureMatrix hconcat(const FeatureMatrix& a, const FeatureMatrix& b) {
  if (a.rows() != b.rows()) throw ArgumentError("hconcat: row counts differ");
  std::vector<std::string> names = a.names();
  names.insert(names.end(), b.names().begin(), b.names().end());
  FeatureMatrix out(std::move(names), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = a(r, c);
    for (std::size_t c = 0; c < b.cols(); ++c) out(r, a.cols() + c) = b(r, c);
  }
  return out;
}

// Input columns → feature space (PCA block replaced by its scores, appended last).
inline FeatureMatrix to_feature_space(const SurvivalModel& m, const FeatureMatrix& input) {
  const auto cols = indices_of(input.names(), m.input_columns, "model input");
  const FeatureMatrix x = input.select(cols);
  if (!m.pca) return x;
  const auto pca_idx = indices_of(x.names(), m.pca_columns, "pca input");
  const std::set<std::size_t> pca_set(pca_idx.begin(), pca_idx.end());
  std::vector<std::size_t> rest;
  for (std::size_t c = 0; c < x.cols(); ++c)
    if (!pca_set.count(c)) rest.push_back(c);
  return hconcat(x.select(rest), pca_apply(x.select(pca_idx), *m.pca, m.pca_prefix));
}

}  // namespace model_detail

inline SurvivalModel train_survival_model(const FeatureMatrix& x, const std::vector<double>& y,
                                          const TrainOptions& opts = {}) {
  if (x.empty()) throw ArgumentError("train_survival_model: empty feature matrix");
  SurvivalModel m;
  m.input_columns = x.names();
  m.config = opts.gbdt;
  m.buckets = opts.buckets;
  m.pca_prefix = opts.pca_prefix;
  if (opts.pca_components > 0 && !opts.pca_columns.empty()) {
    m.pca_columns = opts.pca_columns;
    const auto idx = model_detail::indices_of(x.names(), opts.pca_columns, "pca columns");
    m.pca = pca_fit(x.select(idx), opts.pca_components);
  }
  const FeatureMatrix feat = model_detail::to_feature_space(m, x);
  m.feature_names = feat.names();
  m.norm = normalize_fit(feat);
  const FeatureMatrix z = normalize_apply(feat, m.norm);

  if (opts.select_top_k == 0 || opts.select_top_k >= z.cols()) {
    m.selected = z.names();
    m.gbdt = gbdt_fit(z, y, opts.gbdt);
    return m;
  }
  const GbdtModel full = gbdt_fit(z, y, opts.gbdt);
  auto top = select_top_k(feature_importance(full), opts.select_top_k);
  std::sort(top.begin(), top.end());
  for (auto i : top) m.selected.push_back(z.names()[i]);
  m.gbdt = gbdt_fit(z.select(top), y, opts.gbdt);
  return m;
}

inline std::vector<double> predict_survival(const SurvivalModel& m, const FeatureMatrix& input) {
  const FeatureMatrix z = normalize_apply(model_detail::to_feature_space(m, input), m.norm);
  const auto sel = model_detail::indices_of(z.names(), m.selected, "selected features");
  return gbdt_predict(m.gbdt, z.select(sel));
}

// ---------------------------------------------------------------------------
// JSON

namespace model_detail {

using nlohmann::json;

inline json tree_to_json(const RegressionTree& t, std::size_t i, const std::vector<std::string>& names) {
  const TreeNode& n = t.nodes()[i];
  if (n.feature < 0) return json{{"leaf", n.value}};
  return json{{"feature", n.feature},
              {"name", names[static_cast<std::size_t>(n.feature)]},
              {"threshold", n.threshold},
              {"gain", n.gain},
              {"left", tree_to_json(t, static_cast<std::size_t>(n.left), names)},
              {"right", tree_to_json(t, static_cast<std::size_t>(n.right), names)}};
}

// Pre-order flattening, the same order the builder produces.
inline int tree_from_json(const json& j, std::vector<TreeNode>& nodes, std::size_t n_features) {
  const int id = static_cast<int>(nodes.size());
  nodes.emplace_back();
  if (j.contains("leaf")) {
    nodes.back().value = j.at("leaf").get<double>();
    return id;
  }
  TreeNode n;
  n.feature = j.at("feature").get<int>();
  if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= n_features)
    throw FormatError("model json: split feature index out of range");
  n.threshold = j.at("threshold").get<double>();
  n.gain = j.value("gain", 0.0);
  n.left = tree_from_json(j.at("left"), nodes, n_features);
  n.right = tree_from_json(j.at("right"), nodes, n_features);
  nodes[static_cast<std::size_t>(id)] = n;
  return id;
}

}  // namespace model_detail

inline nlohmann::json to_json(const SurvivalModel& m) {
  using nlohmann::json;
  json trees = json::array();
  for (const auto& t : m.gbdt.trees) trees.push_back(model_detail::tree_to_json(t, 0, m.selected));
  json j{{"format", kModelFormatName},
         {"version", kModelFormatVersion},
         {"input_columns", m.input_columns},
         {"feature_names", m.feature_names},
         {"norm", {{"mean", m.norm.mean}, {"std", m.norm.std}}},
         {"selected", m.selected},
         {"config",
          {{"n_trees", m.config.n_trees},
           {"max_depth", m.config.max_depth},
           {"learning_rate", m.config.learning_rate},
           {"min_leaf", m.config.min_leaf}}},
         {"init", m.gbdt.init},
         {"learning_rate", m.gbdt.learning_rate},
         {"trees", trees},
         {"buckets", {{"short_below", m.buckets.short_below}, {"long_above", m.buckets.long_above}}}};
  if (m.pca) {
    j["pca"] = {{"columns", m.pca_columns},
                {"prefix", m.pca_prefix},
                {"mean", m.pca->mean},
                {"components", m.pca->components},
                {"explained_variance", m.pca->explained_variance}};
  }
  return j;
}

inline SurvivalModel survival_model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kModelFormatName) throw FormatError("model json: unknown format");
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion)
      throw UnsupportedError("model json: version " + std::to_string(version) + " not supported");
    SurvivalModel m;
    m.input_columns = j.at("input_columns").get<std::vector<std::string>>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.norm.mean = j.at("norm").at("mean").get<std::vector<double>>();
    m.norm.std = j.at("norm").at("std").get<std::vector<double>>();
    m.selected = j.at("selected").get<std::vector<std::string>>();
    const auto& c = j.at("config");
    m.config.n_trees = c.at("n_trees").get<std::size_t>();
    m.config.max_depth = c.at("max_depth").get<int>();
    m.config.learning_rate = c.at("learning_rate").get<double>();
    m.config.min_leaf = c.at("min_leaf").get<std::size_t>();
    m.gbdt.init = j.at("init").get<double>();
    m.gbdt.learning_rate = j.at("learning_rate").get<double>();
    m.gbdt.n_features = m.selected.size();
    for (const auto& t : j.at("trees")) {
      std::vector<TreeNode> nodes;
      model_detail::tree_from_json(t, nodes, m.selected.size());
      m.gbdt.trees.emplace_back(std::move(nodes));
    }
    m.buckets.short_below = j.at("buckets").at("short_below").get<double>();
    m.buckets.long_above = j.at("buckets").at("long_above").get<double>();
    if (j.contains("pca")) {
      const auto& p = j.at("pca");
      m.pca_columns = p.at("columns").get<std::vector<std::string>>();
      m.pca_prefix = p.at("prefix").get<std::string>();
      PCAModel pm;
      pm.mean = p.at("mean").get<std::vector<double>>();
      pm.components = p.at("components").get<std::vector<std::vector<double>>>();
      pm.explained_variance = p.at("explained_variance").get<std::vector<double>>();
      m.pca = std::move(pm);
    }
    if (m.norm.mean.size() != m.feature_names.size() || m.norm.std.size() != m.feature_names.size())
      throw FormatError("model json: norm stats do not match feature_names");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model json: ") + e.what());
  }
}

inline void save_model(const SurvivalModel& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json(m).dump(1) << '\n';
  if (!out) throw IoError("write failed on " + path.string());
}

inline SurvivalModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return survival_model_from_json(j);
}

}  // namespace bratsos
