#pragma once

#include <cmath>
#include <vector>

#include "bratsos/error.hpp"
#include "bratsos/survreg/feature_matrix.hpp"

namespace bratsos {

/// Per-column z-score statistics (population standard deviation).
struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;
  friend bool operator==(const NormStats&, const NormStats&) = default;
};

inline NormStats normalize_fit(const FeatureMatrix& x) {
  if (x.empty()) throw ArgumentError("normalize_fit: empty matrix");
  const std::size_t n = x.rows(), m = x.cols();
  NormStats s{std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
  for (std::size_t c = 0; c < m; ++c) {
    double mu = 0.0;
    for (std::size_t r = 0; r < n; ++r) mu += x(r, c);
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) var += (x(r, c) - mu) * (x(r, c) - mu);
    s.mean[c] = mu;
    s.std[c] = std::sqrt(var / static_cast<double>(n));
  }
  return s;
}

/// (x - mean) / std with the fitted statistics; zero-variance columns map to 0.
inline FeatureMatrix normalize_apply(const FeatureMatrix& x, const NormStats& s) {
  if (x.cols() != s.mean.size()) throw ArgumentError("normalize_apply: column count differs from fitted stats");
  FeatureMatrix out = x;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c)
      out(r, c) = s.std[c] > 0.0 ? (x(r, c) - s.mean[c]) / s.std[c] : 0.0;
  return out;
}

}  // namespace bratsos
