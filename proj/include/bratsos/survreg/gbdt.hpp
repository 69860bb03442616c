#pragma once

// Gradient-boosted regression trees with squared-error loss.
//
// Stage 0 predicts the target mean; every later stage fits a depth-bounded
// tree to the current residuals with exact greedy splits. No row or column
// subsampling, so a fit is a deterministic function of (X, y, config).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "bratsos/error.hpp"
#include "bratsos/survreg/feature_matrix.hpp"

namespace bratsos {

struct GbdtConfig {
  std::size_t n_trees = 200;
  int max_depth = 3;  // < 0: unbounded
  double learning_rate = 0.1;
  std::size_t min_leaf = 2;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      throw ArgumentError("GbdtConfig: learning_rate must be positive");
    if (min_leaf == 0) throw ArgumentError("GbdtConfig: min_leaf must be >= 1");
  }
  friend bool operator==(const GbdtConfig&, const GbdtConfig&) = default;
};

struct TreeNode {
  int feature = -1;        // -1 for a leaf
  double threshold = 0.0;  // x[feature] < threshold goes left
  int left = -1;
  int right = -1;
  double value = 0.0;      // leaf prediction
  double gain = 0.0;       // squared-error reduction of the split
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class RegressionTree {
 public:
  RegressionTree() : nodes_{TreeNode{}} {}
  explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) { validate(); }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& root() const { return nodes_.front(); }

  double predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (nodes_[i].feature >= 0) {
      const auto& n = nodes_[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
    }
    return nodes_[i].value;
  }

  std::size_t depth() const { return depth_of(0); }
  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.feature < 0; }));
  }

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

 private:
  std::size_t depth_of(std::size_t i) const {
    const auto& n = nodes_[i];
    if (n.feature < 0) return 0;
    return 1 + std::max(depth_of(static_cast<std::size_t>(n.left)), depth_of(static_cast<std::size_t>(n.right)));
  }
  void validate() const {
    if (nodes_.empty()) throw FormatError("RegressionTree: no nodes");
    const auto n = static_cast<int>(nodes_.size());
    for (const auto& node : nodes_)
      if (node.feature >= 0 && (node.left <= 0 || node.right <= 0 || node.left >= n || node.right >= n))
        throw FormatError("RegressionTree: internal node without two valid children");
  }

  std::vector<TreeNode> nodes_;
};

struct GbdtModel {
  double init = 0.0;
  double learning_rate = 0.1;
  std::size_t n_features = 0;
  std::vector<RegressionTree> trees;
  friend bool operator==(const GbdtModel&, const GbdtModel&) = default;
};

namespace gbdt_detail {

struct Split {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, const std::vector<std::vector<std::uint32_t>>& sorted,
              const std::vector<double>& residual, const GbdtConfig& cfg)
      : x_(x), sorted_(sorted), r_(residual), cfg_(cfg), stamp_(x.rows(), 0) {}

  RegressionTree build() {
    std::vector<std::uint32_t> all(x_.rows());
    std::iota(all.begin(), all.end(), 0u);
    nodes_.clear();
    grow(all, 0);
    return RegressionTree(std::move(nodes_));
  }

 private:
  int grow(const std::vector<std::uint32_t>& rows, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    double sum = 0.0, sumsq = 0.0;
    for (auto r : rows) {
      sum += r_[r];
      sumsq += r_[r] * r_[r];
    }
    nodes_[static_cast<std::size_t>(id)].value = sum / static_cast<double>(rows.size());

    const bool depth_ok = cfg_.max_depth < 0 || depth < cfg_.max_depth;
    if (!depth_ok || rows.size() < 2 * cfg_.min_leaf) return id;
    const Split s = best_split(rows, sum, sumsq);
    if (!s.found) return id;

    std::vector<std::uint32_t> left, right;
    for (auto r : rows) (x_(r, s.feature) < s.threshold ? left : right).push_back(r);
    TreeNode& n = nodes_[static_cast<std::size_t>(id)];
    n.feature = static_cast<int>(s.feature);
    n.threshold = s.threshold;
    n.gain = s.gain;
    n.value = 0.0;
    const int l = grow(left, depth + 1);
    const int rr = grow(right, depth + 1);
    nodes_[static_cast<std::size_t>(id)].left = l;
    nodes_[static_cast<std::size_t>(id)].right = rr;
    return id;
  }

  // Exact greedy search: every boundary between distinct sorted values of
  // every feature, children respecting min_leaf. First best wins ties.
  Split best_split(const std::vector<std::uint32_t>& rows, double sum, double sumsq) {
    ++tick_;
    for (auto r : rows) stamp_[r] = tick_;
    const auto n = static_cast<double>(rows.size());
    const double parent = sum * sum / n;
    // Gains below this are rounding noise (e.g. identical residuals).
    const double min_gain = 1e-12 * sumsq;
    Split best;
    std::vector<std::uint32_t> order;
    order.reserve(rows.size());
    for (std::size_t f = 0; f < x_.cols(); ++f) {
      order.clear();
      for (auto r : sorted_[f])
        if (stamp_[r] == tick_) order.push_back(r);
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        left_sum += r_[order[i]];
        const std::size_t nl = i + 1, nr = order.size() - nl;
        if (nl < cfg_.min_leaf) continue;
        if (nr < cfg_.min_leaf) break;
        const double a = x_(order[i], f), b = x_(order[i + 1], f);
        if (!(a < b)) continue;
        const double right_sum = sum - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(nl) +
                            right_sum * right_sum / static_cast<double>(nr) - parent;
        if (gain > min_gain && gain > best.gain) {
          double thr = a + (b - a) / 2.0;
          if (!(thr > a)) thr = b;
          best = {true, f, thr, gain};
        }
      }
    }
    return best;
  }

  const FeatureMatrix& x_;
  const std::vector<std::vector<std::uint32_t>>& sorted_;
  const std::vector<double>& r_;
  const GbdtConfig& cfg_;
  std::vector<std::uint64_t> stamp_;
  std::uint64_t tick_ = 0;
  std::vector<TreeNode> nodes_;
};

inline double mean_squared(const std::vector<double>& r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return s / static_cast<double>(r.size());
}

}  // namespace gbdt_detail

/// Unclamped ensemble output init + lr·Σ tree(x).
inline double gbdt_predict_raw(const GbdtModel& model, std::span<const double> x) {
  double s = 0.0;
  for (const auto& t : model.trees) s += t.predict(x);
  return model.init + model.learning_rate * s;
}

/// Fits the ensemble. When `stage_mse` is given it receives the training MSE
/// after stage 0 and after each tree (n_trees + 1 entries).
inline GbdtModel gbdt_fit(const FeatureMatrix& x, const std::vector<double>& y, const GbdtConfig& cfg = {},
                          std::vector<double>* stage_mse = nullptr) {
  cfg.validate();
  if (x.rows() < 2) throw ArgumentError("gbdt_fit: need at least 2 rows");
  if (y.size() != x.rows()) throw ArgumentError("gbdt_fit: target length differs from row count");
  for (double v : y)
    if (!std::isfinite(v)) throw ArgumentError("gbdt_fit: non-finite target");
  for (double v : x.values())
    if (std::isnan(v)) throw ArgumentError("gbdt_fit: NaN feature value");

  GbdtModel model;
  model.learning_rate = cfg.learning_rate;
  model.n_features = x.cols();
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  model.init = *lo == *hi ? *lo : std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());

  std::vector<std::vector<std::uint32_t>> sorted(x.cols());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    auto& s = sorted[f];
    s.resize(x.rows());
    std::iota(s.begin(), s.end(), 0u);
    std::stable_sort(s.begin(), s.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
  }

  std::vector<double> pred(y.size(), model.init);
  std::vector<double> residual(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) residual[i] = y[i] - pred[i];
  if (stage_mse) stage_mse->assign(1, gbdt_detail::mean_squared(residual));

  for (std::size_t t = 0; t < cfg.n_trees; ++t) {
    gbdt_detail::TreeBuilder builder(x, sorted, residual, cfg);
    RegressionTree tree = builder.build();
    for (std::size_t i = 0; i < y.size(); ++i) {
      pred[i] += cfg.learning_rate * tree.predict(x.row(i));
      residual[i] = y[i] - pred[i];
    }
    model.trees.push_back(std::move(tree));
    if (stage_mse) stage_mse->push_back(gbdt_detail::mean_squared(residual));
  }
  return model;
}

/// Predicted survival days, clamped below at 0.
inline std::vector<double> gbdt_predict(const GbdtModel& model, const FeatureMatrix& x) {
  if (x.cols() != model.n_features)
    throw ArgumentError("gbdt_predict: model expects " + std::to_string(model.n_features) + " features, got " +
                        std::to_string(x.cols()));
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = std::max(0.0, gbdt_predict_raw(model, x.row(r)));
  return out;
}

/// Total squared-error reduction of all splits on each feature.
inline std::vector<double> feature_importance(const GbdtModel& model) {
  std::vector<double> imp(model.n_features, 0.0);
  for (const auto& t : model.trees)
    for (const auto& n : t.nodes())
      if (n.feature >= 0) imp[static_cast<std::size_t>(n.feature)] += n.gain;
  return imp;
}

/// Indices of the k highest scores, best first; ties keep the lower index.
inline std::vector<std::size_t> select_top_k(const std::vector<double>& importances, std::size_t k) {
  if (k > importances.size())
    throw ArgumentError("select_top_k: k = " + std::to_string(k) + " exceeds feature count " +
                        std::to_string(importances.size()));
  std::vector<std::size_t> idx(importances.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return importances[a] > importances[b]; });
  idx.resize(k);
  return idx;
}

inline std::vector<std::string> select_top_k(const std::vector<double>& importances,
                                             const std::vector<std::string>& names, std::size_t k) {
  if (names.size() != importances.size()) throw ArgumentError("select_top_k: names/importances size mismatch");
  std::vector<std::string> out;
  for (auto i : select_top_k(importances, k)) out.push_back(names[i]);
  return out;
}

}  // namespace bratsos
