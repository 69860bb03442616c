#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "bratsos/error.hpp"

namespace bratsos {

/// Survival classes: short < short_below, mid in [short_below, long_above],
/// long > long_above (days).
struct SurvivalBuckets {
  double short_below = 300.0;
  double long_above = 450.0;

  int classify(double days) const {
    if (days < short_below) return 0;
    if (days <= long_above) return 1;
    return 2;
  }
  friend bool operator==(const SurvivalBuckets&, const SurvivalBuckets&) = default;
};

struct EvalReport {
  double accuracy = 0.0;
  double mse = 0.0;
  double median_se = 0.0;
  double std_se = 0.0;
  double spearman_r = 0.0;
};

/// 1-based ranks, ties get the average of the ranks they span.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
    i = j + 1;
  }
  return rank;
}

// Zero when either argument has no variance.
inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const auto n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson(average_ranks(a), average_ranks(b));
}

inline double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

inline EvalReport evaluate(const std::vector<double>& y_pred, const std::vector<double>& y_true,
                           const SurvivalBuckets& buckets = {}) {
  if (y_pred.size() != y_true.size()) throw ArgumentError("evaluate: prediction/truth length mismatch");
  if (y_pred.size() < 2) throw ArgumentError("evaluate: need at least 2 subjects");
  const std::size_t n = y_pred.size();
  std::vector<double> se(n);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y_pred[i] - y_true[i];
    se[i] = e * e;
    hits += buckets.classify(y_pred[i]) == buckets.classify(y_true[i]);
  }
  EvalReport r;
  const auto dn = static_cast<double>(n);
  r.accuracy = static_cast<double>(hits) / dn;
  r.mse = std::accumulate(se.begin(), se.end(), 0.0) / dn;
  r.median_se = median(se);
  double var = 0.0;
  for (double v : se) var += (v - r.mse) * (v - r.mse);
  r.std_se = std::sqrt(var / dn);
  r.spearman_r = spearman(y_pred, y_true);
  return r;
}

}  // namespace bratsos
