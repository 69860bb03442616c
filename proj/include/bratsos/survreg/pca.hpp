#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "bratsos/error.hpp"
#include "bratsos/survreg/feature_matrix.hpp"

namespace bratsos {

struct PCAModel {
  std::vector<double> mean;                    // per input column
  std::vector<std::vector<double>> components; // k rows, orthonormal
  std::vector<double> explained_variance;      // non-increasing
  friend bool operator==(const PCAModel&, const PCAModel&) = default;
};

/// Top-k eigenvectors of the sample covariance (1/(n-1)). Each component's
/// largest-magnitude entry is made positive so the fit is sign-deterministic.
inline PCAModel pca_fit(const FeatureMatrix& x, std::size_t k) {
  const std::size_t n = x.rows(), m = x.cols();
  if (n < 2 || m == 0) throw ArgumentError("pca_fit: need at least 2 rows and 1 column");
  if (k == 0 || k > std::min(n - 1, m))
    throw ArgumentError("pca_fit: k = " + std::to_string(k) + " outside [1, min(rows-1, cols)]");

  Eigen::MatrixXd a(n, m);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c) a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = x(r, c);
  const Eigen::RowVectorXd mu = a.colwise().mean();
  a.rowwise() -= mu;
  const Eigen::MatrixXd cov = (a.transpose() * a) / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw ArgumentError("pca_fit: eigendecomposition failed");
  // Eigen returns ascending eigenvalues.
  std::vector<Eigen::Index> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return eig.eigenvalues()(i) > eig.eigenvalues()(j);
  });

  PCAModel model;
  model.mean.assign(mu.data(), mu.data() + m);
  for (std::size_t c = 0; c < k; ++c) {
    Eigen::VectorXd v = eig.eigenvectors().col(order[c]);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    model.components.emplace_back(v.data(), v.data() + m);
    model.explained_variance.push_back(std::max(0.0, eig.eigenvalues()(order[c])));
  }
  return model;
}

/// Projects centered rows onto the components; output columns pc0..pc{k-1}
/// prefixed by `prefix`.
inline FeatureMatrix pca_apply(const FeatureMatrix& x, const PCAModel& model, const std::string& prefix = "pc") {
  const std::size_t m = model.mean.size();
  if (x.cols() != m) throw ArgumentError("pca_apply: column count differs from fitted model");
  const std::size_t k = model.components.size();
  std::vector<std::string> names;
  for (std::size_t c = 0; c < k; ++c) names.push_back(prefix + std::to_string(c));
  FeatureMatrix out(std::move(names), x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += (x(r, j) - model.mean[j]) * model.components[c][j];
      out(r, c) = s;
    }
  return out;
}

/// Maps scores back to the input space.
inline FeatureMatrix pca_reconstruct(const FeatureMatrix& scores, const PCAModel& model,
                                     const std::vector<std::string>& names) {
  const std::size_t k = model.components.size();
  const std::size_t m = model.mean.size();
  if (scores.cols() != k || names.size() != m) throw ArgumentError("pca_reconstruct: shape mismatch");
  FeatureMatrix out(names, scores.rows());
  for (std::size_t r = 0; r < scores.rows(); ++r)
    for (std::size_t j = 0; j < m; ++j) {
      double s = model.mean[j];
      for (std::size_t c = 0; c < k; ++c) s += scores(r, c) * model.components[c][j];
      out(r, j) = s;
    }
  return out;
}

}  // namespace bratsos
