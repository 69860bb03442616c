#pragma once

// Position-encoding convolution (coordinate channels + 3D convolution), the
// softmax head, the semi-supervised center-ratio / cross-entropy / entropy
// loss with its analytic gradient, the accumulative centroid update, and a
// central-difference gradient checker.
//
// Class labels are 0-based: y ∈ {0, ..., n-1}.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bratsos/error.hpp"

namespace bratsos::nn {

using Vec = std::vector<double>;

// ---------------------------------------------------------------------------
// Feature maps and convolution

struct Shape3 {
  std::size_t depth = 1, height = 1, width = 1;
  std::size_t volume() const { return depth * height * width; }
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

/// Channel-major 3D feature map: index ((c*D + d)*H + h)*W + w.
class FeatureMap3D {
 public:
  FeatureMap3D() = default;
  FeatureMap3D(std::size_t channels, Shape3 shape)
      : channels_(channels), shape_(shape), data_(channels * shape.volume(), 0.0) {}
  FeatureMap3D(std::size_t channels, Shape3 shape, Vec data)
      : channels_(channels), shape_(shape), data_(std::move(data)) {
    if (data_.size() != channels_ * shape_.volume())
      throw ArgumentError("FeatureMap3D: data length != C*D*H*W");
  }

  std::size_t channels() const { return channels_; }
  const Shape3& shape() const { return shape_; }
  const Vec& data() const { return data_; }
  Vec& data() { return data_; }

  std::size_t index(std::size_t c, std::size_t d, std::size_t h, std::size_t w) const {
    return ((c * shape_.depth + d) * shape_.height + h) * shape_.width + w;
  }
  double& operator()(std::size_t c, std::size_t d, std::size_t h, std::size_t w) { return data_[index(c, d, h, w)]; }
  double operator()(std::size_t c, std::size_t d, std::size_t h, std::size_t w) const {
    return data_[index(c, d, h, w)];
  }

  friend bool operator==(const FeatureMap3D&, const FeatureMap3D&) = default;

 private:
  std::size_t channels_ = 0;
  Shape3 shape_{};
  Vec data_;
};

/// Weights indexed [out][in][kd][kh][kw]; odd kernel extents (same padding).
class ConvKernel3D {
 public:
  ConvKernel3D(std::size_t out_channels, std::size_t in_channels, Shape3 extent)
      : out_(out_channels), in_(in_channels), extent_(extent),
        weights_(out_channels * in_channels * extent.volume(), 0.0), bias_(out_channels, 0.0) {
    if (extent.depth % 2 == 0 || extent.height % 2 == 0 || extent.width % 2 == 0)
      throw ArgumentError("ConvKernel3D: kernel extents must be odd");
    if (out_ == 0 || in_ == 0) throw ArgumentError("ConvKernel3D: channel counts must be positive");
  }

  std::size_t out_channels() const { return out_; }
  std::size_t in_channels() const { return in_; }
  const Shape3& extent() const { return extent_; }
  Vec& weights() { return weights_; }
  const Vec& weights() const { return weights_; }
  Vec& bias() { return bias_; }
  const Vec& bias() const { return bias_; }

  double& w(std::size_t o, std::size_t i, std::size_t kd, std::size_t kh, std::size_t kw) {
    return weights_[(((o * in_ + i) * extent_.depth + kd) * extent_.height + kh) * extent_.width + kw];
  }
  double w(std::size_t o, std::size_t i, std::size_t kd, std::size_t kh, std::size_t kw) const {
    return weights_[(((o * in_ + i) * extent_.depth + kd) * extent_.height + kh) * extent_.width + kw];
  }

 private:
  std::size_t out_, in_;
  Shape3 extent_;
  Vec weights_;
  Vec bias_;
};

/// Three channels holding each voxel's index along depth, height and width,
/// divided by (extent - 1). Extent-1 axes give an all-zero channel.
inline FeatureMap3D coord_channels(Shape3 shape) {
  if (shape.volume() == 0) throw ArgumentError("coord_channels: extents must be >= 1");
  FeatureMap3D out(3, shape);
  auto norm = [](std::size_t i, std::size_t extent) {
    return extent > 1 ? static_cast<double>(i) / static_cast<double>(extent - 1) : 0.0;
  };
  for (std::size_t d = 0; d < shape.depth; ++d)
    for (std::size_t h = 0; h < shape.height; ++h)
      for (std::size_t w = 0; w < shape.width; ++w) {
        out(0, d, h, w) = norm(d, shape.depth);
        out(1, d, h, w) = norm(h, shape.height);
        out(2, d, h, w) = norm(w, shape.width);
      }
  return out;
}

inline FeatureMap3D concat_channels(const FeatureMap3D& a, const FeatureMap3D& b) {
  if (!(a.shape() == b.shape())) throw ArgumentError("concat_channels: spatial shapes differ");
  Vec data(a.data());
  data.insert(data.end(), b.data().begin(), b.data().end());
  return FeatureMap3D(a.channels() + b.channels(), a.shape(), std::move(data));
}

/// Stride-1 cross-correlation with zero "same" padding.
inline FeatureMap3D conv3d_same(const FeatureMap3D& in, const ConvKernel3D& k) {
  if (k.in_channels() != in.channels())
    throw ArgumentError("conv3d_same: kernel expects " + std::to_string(k.in_channels()) +
                        " input channels, got " + std::to_string(in.channels()));
  const Shape3 s = in.shape();
  const Shape3 e = k.extent();
  const auto rd = static_cast<std::ptrdiff_t>(e.depth / 2);
  const auto rh = static_cast<std::ptrdiff_t>(e.height / 2);
  const auto rw = static_cast<std::ptrdiff_t>(e.width / 2);
  FeatureMap3D out(k.out_channels(), s);
  for (std::size_t o = 0; o < k.out_channels(); ++o)
    for (std::size_t d = 0; d < s.depth; ++d)
      for (std::size_t h = 0; h < s.height; ++h)
        for (std::size_t w = 0; w < s.width; ++w) {
          double acc = k.bias()[o];
          for (std::size_t i = 0; i < in.channels(); ++i)
            for (std::size_t kd = 0; kd < e.depth; ++kd) {
              const auto sd = static_cast<std::ptrdiff_t>(d + kd) - rd;
              if (sd < 0 || sd >= static_cast<std::ptrdiff_t>(s.depth)) continue;
              for (std::size_t kh = 0; kh < e.height; ++kh) {
                const auto sh = static_cast<std::ptrdiff_t>(h + kh) - rh;
                if (sh < 0 || sh >= static_cast<std::ptrdiff_t>(s.height)) continue;
                for (std::size_t kw = 0; kw < e.width; ++kw) {
                  const auto sw = static_cast<std::ptrdiff_t>(w + kw) - rw;
                  if (sw < 0 || sw >= static_cast<std::ptrdiff_t>(s.width)) continue;
                  acc += k.w(o, i, kd, kh, kw) * in(i, static_cast<std::size_t>(sd), static_cast<std::size_t>(sh),
                                                    static_cast<std::size_t>(sw));
                }
              }
            }
          out(o, d, h, w) = acc;
        }
  return out;
}

/// Input channels followed by the three coordinate channels, then a same-size
/// 3D convolution. The kernel must take C + 3 input channels.
inline FeatureMap3D pecl_forward(const FeatureMap3D& input, const ConvKernel3D& kernel) {
  if (kernel.in_channels() != input.channels() + 3)
    throw ArgumentError("pecl_forward: kernel in_channels must equal input channels + 3");
  return conv3d_same(concat_channels(input, coord_channels(input.shape())), kernel);
}

// ---------------------------------------------------------------------------
// Softmax head and loss

struct SoftmaxHead {
  std::size_t n_classes = 0;
  std::size_t dim = 0;
  Vec weight;  // n_classes × dim, row j = W_j
  Vec bias;    // n_classes

  SoftmaxHead() = default;
  SoftmaxHead(std::size_t n, std::size_t d) : n_classes(n), dim(d), weight(n * d, 0.0), bias(n, 0.0) {}

  double& w(std::size_t j, std::size_t k) { return weight[j * dim + k]; }
  double w(std::size_t j, std::size_t k) const { return weight[j * dim + k]; }

  void validate() const {
    if (weight.size() != n_classes * dim || bias.size() != n_classes)
      throw ArgumentError("SoftmaxHead: weight/bias sizes do not match n_classes × dim");
    for (double v : weight)
      if (!std::isfinite(v)) throw ArgumentError("SoftmaxHead: non-finite weight");
    for (double v : bias)
      if (!std::isfinite(v)) throw ArgumentError("SoftmaxHead: non-finite bias");
  }
};

inline Vec logits(std::span<const double> z, const SoftmaxHead& head) {
  if (z.size() != head.dim) throw ArgumentError("softmax_head: feature dim does not match head");
  for (double v : z)
    if (!std::isfinite(v)) throw ArgumentError("softmax_head: non-finite feature");
  Vec out(head.n_classes);
  for (std::size_t j = 0; j < head.n_classes; ++j) {
    double s = head.bias[j];
    for (std::size_t k = 0; k < head.dim; ++k) s += head.w(j, k) * z[k];
    out[j] = s;
  }
  return out;
}

// Max-logit shifted softmax.
inline Vec softmax(std::span<const double> l) {
  const double m = *std::max_element(l.begin(), l.end());
  Vec p(l.size());
  double s = 0.0;
  for (std::size_t j = 0; j < l.size(); ++j) s += (p[j] = std::exp(l[j] - m));
  for (double& v : p) v /= s;
  return p;
}

inline Vec softmax_head(std::span<const double> z, const SoftmaxHead& head) { return softmax(logits(z, head)); }

// log softmax, stable for saturated logits.
inline Vec log_softmax(std::span<const double> l) {
  const double m = *std::max_element(l.begin(), l.end());
  double s = 0.0;
  for (double v : l) s += std::exp(v - m);
  const double lse = m + std::log(s);
  Vec out(l.size());
  for (std::size_t j = 0; j < l.size(); ++j) out[j] = l[j] - lse;
  return out;
}

struct LossParams {
  double alpha = 0.5;
  double beta = 1.0;
  double gamma = 0.1;
  std::size_t n_classes = 2;

  void validate() const {
    if (!(alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0)) throw ArgumentError("LossParams: weights must be >= 0");
    if (n_classes < 2) throw ArgumentError("LossParams: n_classes must be >= 2");
  }
};

struct Centroids {
  std::vector<Vec> c;   // one vector per class
  std::size_t iteration = 0;

  std::size_t n_classes() const { return c.size(); }
  std::size_t dim() const { return c.empty() ? 0 : c.front().size(); }

  static Centroids zeros(std::size_t n, std::size_t d) { return {std::vector<Vec>(n, Vec(d, 0.0)), 0}; }
};

struct MiniBatch {
  std::vector<Vec> z;                          // features per item
  std::vector<std::optional<std::size_t>> y;   // label, or nullopt for unlabeled

  std::size_t size() const { return z.size(); }
  void add_labeled(Vec f, std::size_t label) {
    z.push_back(std::move(f));
    y.emplace_back(label);
  }
  void add_unlabeled(Vec f) {
    z.push_back(std::move(f));
    y.emplace_back(std::nullopt);
  }
};

inline constexpr double kRatioGuard = 1e-12;

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

// Class-summed entropy -Σ p log p (0 log 0 = 0).
inline double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

/// Per-term breakdown of the loss, each already scaled by its weight and 1/N.
struct LossTerms {
  double center_ratio = 0.0;
  double cross_entropy = 0.0;
  double entropy = 0.0;
  double total() const { return center_ratio + cross_entropy + entropy; }
};

namespace loss_detail {

inline void check_inputs(const MiniBatch& batch, const Centroids& cents, const SoftmaxHead& head,
                         const LossParams& params) {
  params.validate();
  head.validate();
  if (batch.size() == 0) throw ArgumentError("semisup_loss: empty batch");
  if (batch.y.size() != batch.z.size()) throw ArgumentError("semisup_loss: labels/features size mismatch");
  if (head.n_classes != params.n_classes || cents.n_classes() != params.n_classes)
    throw ArgumentError("semisup_loss: class count mismatch between head, centroids and params");
  for (const auto& c : cents.c)
    if (c.size() != head.dim) throw ArgumentError("semisup_loss: centroid dim != feature dim");
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch.z[i].size() != head.dim) throw ArgumentError("semisup_loss: feature dim mismatch");
    if (batch.y[i] && *batch.y[i] >= params.n_classes)
      throw ArgumentError("semisup_loss: label " + std::to_string(*batch.y[i]) + " out of range");
  }
}

}  // namespace loss_detail

/// L = (1/N) Σ_i [ α(n-1)‖z_i - c_y‖ / Σ_{j≠y}‖z_i - c_j‖  - β log p_{i,y}   (labeled)
///                + γ Σ_j -p_ij log p_ij                               (unlabeled) ]
inline LossTerms semisup_loss_terms(const MiniBatch& batch, const Centroids& cents, const SoftmaxHead& head,
                                    const LossParams& params) {
  loss_detail::check_inputs(batch, cents, head, params);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const auto n = static_cast<double>(params.n_classes);
  LossTerms t;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Vec l = logits(batch.z[i], head);
    if (batch.y[i]) {
      const std::size_t y = *batch.y[i];
      const double own = euclidean_distance(batch.z[i], cents.c[y]);
      double others = 0.0;
      for (std::size_t j = 0; j < params.n_classes; ++j)
        if (j != y) others += euclidean_distance(batch.z[i], cents.c[j]);
      if (others == 0.0) others = kRatioGuard;
      t.center_ratio += params.alpha * (n - 1.0) * own / others * inv_n;
      t.cross_entropy -= params.beta * log_softmax(l)[y] * inv_n;
    } else {
      t.entropy += params.gamma * entropy(softmax(l)) * inv_n;
    }
  }
  return t;
}

inline double semisup_loss(const MiniBatch& batch, const Centroids& cents, const SoftmaxHead& head,
                           const LossParams& params) {
  return semisup_loss_terms(batch, cents, head, params).total();
}

/// Analytic ∂L/∂z_i for every item.
inline std::vector<Vec> semisup_loss_grad(const MiniBatch& batch, const Centroids& cents, const SoftmaxHead& head,
                                          const LossParams& params) {
  loss_detail::check_inputs(batch, cents, head, params);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const std::size_t nc = params.n_classes;
  const std::size_t d = head.dim;
  std::vector<Vec> grad(batch.size(), Vec(d, 0.0));

  // dlogit_j → dz via W^T
  auto add_through_head = [&](Vec& g, const Vec& dlogit) {
    for (std::size_t j = 0; j < nc; ++j)
      for (std::size_t k = 0; k < d; ++k) g[k] += head.w(j, k) * dlogit[j];
  };

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Vec& z = batch.z[i];
    Vec& g = grad[i];
    const Vec p = softmax_head(z, head);
    if (batch.y[i]) {
      const std::size_t y = *batch.y[i];
      // Center-ratio term: α(n-1) A/B with A = ‖z-c_y‖, B = Σ_{j≠y}‖z-c_j‖.
      if (params.alpha != 0.0) {
        const double a = euclidean_distance(z, cents.c[y]);
        double b = 0.0;
        Vec db(d, 0.0);
        for (std::size_t j = 0; j < nc; ++j) {
          if (j == y) continue;
          const double dj = euclidean_distance(z, cents.c[j]);
          b += dj;
          if (dj > 0.0)
            for (std::size_t k = 0; k < d; ++k) db[k] += (z[k] - cents.c[j][k]) / dj;
        }
        if (b == 0.0) b = kRatioGuard;
        const double scale = params.alpha * static_cast<double>(nc - 1) * inv_n;
        for (std::size_t k = 0; k < d; ++k) {
          const double da = a > 0.0 ? (z[k] - cents.c[y][k]) / a : 0.0;  // zero subgradient at z = c_y
          g[k] += scale * (da / b - a * db[k] / (b * b));
        }
      }
      // Cross-entropy: ∂(-log p_y)/∂logit = p - e_y.
      Vec dl(p);
      dl[y] -= 1.0;
      for (double& v : dl) v *= params.beta * inv_n;
      add_through_head(g, dl);
    } else {
      // Entropy H: ∂H/∂logit_k = -p_k (log p_k + H).
      const double h = entropy(p);
      Vec dl(nc);
      for (std::size_t k = 0; k < nc; ++k)
        dl[k] = p[k] > 0.0 ? -p[k] * (std::log(p[k]) + h) * params.gamma * inv_n : 0.0;
      add_through_head(g, dl);
    }
  }
  return grad;
}

/// One simultaneous accumulative update per batch:
/// c_j ← c_j - 0.5 Σ_{i: y_i = j}(c_j - z_i) / (1 + #{i: y_i = j}).
inline Centroids update_centroids(const Centroids& cents, const MiniBatch& batch) {
  Centroids out = cents;
  const std::size_t d = cents.dim();
  std::vector<Vec> residual(cents.n_classes(), Vec(d, 0.0));
  std::vector<std::size_t> count(cents.n_classes(), 0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!batch.y[i]) continue;
    const std::size_t j = *batch.y[i];
    if (j >= cents.n_classes()) throw ArgumentError("update_centroids: label out of range");
    if (batch.z[i].size() != d) throw ArgumentError("update_centroids: feature dim mismatch");
    ++count[j];
    for (std::size_t k = 0; k < d; ++k) residual[j][k] += cents.c[j][k] - batch.z[i][k];
  }
  for (std::size_t j = 0; j < cents.n_classes(); ++j) {
    if (count[j] == 0) continue;
    const double denom = 1.0 + static_cast<double>(count[j]);
    for (std::size_t k = 0; k < d; ++k) out.c[j][k] = cents.c[j][k] - 0.5 * residual[j][k] / denom;
  }
  ++out.iteration;
  return out;
}

// ---------------------------------------------------------------------------
// Gradient checking

struct GradCheckReport {
  bool ok = true;                 // false when a perturbed evaluation was non-finite
  double max_relative_error = 0.0;
  std::size_t worst_coordinate = 0;
  std::string message;
};

inline constexpr double kDefaultFdStep = 1e-5;

/// Central differences per coordinate; error = |analytic - numeric| / max(1e-8, |numeric|).
inline GradCheckReport check_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                                      const Vec& analytic, double h = kDefaultFdStep) {
  if (analytic.size() != x.size()) throw ArgumentError("check_gradient: gradient size mismatch");
  GradCheckReport r;
  Vec xp = x;
  for (std::size_t k = 0; k < x.size(); ++k) {
    xp[k] = x[k] + h;
    const double fp = f(xp);
    xp[k] = x[k] - h;
    const double fm = f(xp);
    xp[k] = x[k];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      r.ok = false;
      r.worst_coordinate = k;
      r.message = "non-finite loss at perturbed coordinate " + std::to_string(k);
      r.max_relative_error = std::numeric_limits<double>::infinity();
      return r;
    }
    const double numeric = (fp - fm) / (2.0 * h);
    const double err = std::fabs(analytic[k] - numeric) / std::max(1e-8, std::fabs(numeric));
    if (err > r.max_relative_error) {
      r.max_relative_error = err;
      r.worst_coordinate = k;
    }
  }
  return r;
}

/// Checks semisup_loss_grad against finite differences over every feature
/// coordinate of every batch item (flattened item-major).
inline GradCheckReport grad_check(const MiniBatch& batch, const Centroids& cents, const SoftmaxHead& head,
                                  const LossParams& params, double h = kDefaultFdStep) {
  const std::size_t d = head.dim;
  Vec x;
  for (const auto& z : batch.z) x.insert(x.end(), z.begin(), z.end());
  Vec analytic;
  for (const auto& g : semisup_loss_grad(batch, cents, head, params)) analytic.insert(analytic.end(), g.begin(), g.end());
  MiniBatch work = batch;
  auto f = [&](const Vec& flat) {
    for (std::size_t i = 0; i < work.size(); ++i)
      std::copy(flat.begin() + static_cast<std::ptrdiff_t>(i * d), flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * d),
                work.z[i].begin());
    return semisup_loss(work, cents, head, params);
  };
  return check_gradient(f, x, analytic, h);
}

}  // namespace bratsos::nn
