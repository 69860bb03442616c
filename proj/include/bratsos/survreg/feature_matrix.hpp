#pragma once

#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "bratsos/error.hpp"

namespace bratsos {

/// Row-major subjects × named features.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::vector<std::string> names, std::size_t rows)
      : names_(std::move(names)), rows_(rows), values_(rows_ * names_.size(), 0.0) {
    check_names();
  }
  FeatureMatrix(std::vector<std::string> names, std::size_t rows, std::vector<double> values)
      : names_(std::move(names)), rows_(rows), values_(std::move(values)) {
    check_names();
    if (values_.size() != rows_ * names_.size()) throw ArgumentError("FeatureMatrix: not rectangular");
  }

  // Unnamed columns f0, f1, ...
  static FeatureMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    std::vector<std::string> names;
    for (std::size_t c = 0; c < cols; ++c) names.push_back("f" + std::to_string(c));
    FeatureMatrix m(std::move(names), rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != cols) throw ArgumentError("FeatureMatrix: ragged rows");
      for (std::size_t c = 0; c < cols; ++c) m(r, c) = rows[r][c];
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return names_.size(); }
  bool empty() const { return rows_ == 0 || names_.empty(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& values() const { return values_; }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols(), cols()}; }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  // Columns in the given order.
  FeatureMatrix select(const std::vector<std::size_t>& cols_idx) const {
    std::vector<std::string> names;
    for (auto c : cols_idx) {
      if (c >= cols()) throw ArgumentError("FeatureMatrix::select: column out of range");
      names.push_back(names_[c]);
    }
    FeatureMatrix out(std::move(names), rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t k = 0; k < cols_idx.size(); ++k) out(r, k) = (*this)(r, cols_idx[k]);
    return out;
  }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  void check_names() const {
    std::unordered_set<std::string> seen;
    for (const auto& n : names_)
      if (!seen.insert(n).second) throw ArgumentError("FeatureMatrix: duplicate column name '" + n + "'");
  }

  std::vector<std::string> names_;
  std::size_t rows_ = 0;
  std::vector<double> values_;
};

}  // namespace bratsos
