#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string_view>
#include <vector>

#include "bratsos/distance_transform.hpp"
#include "bratsos/error.hpp"
#include "bratsos/volume.hpp"

namespace bratsos {

/// Binary volume sharing the geometry of the volume it was derived from.
class Mask {
 public:
  Mask() = default;
  Mask(Dims dims, Spacing spacing, std::vector<std::uint8_t> bits)
      : dims_(dims), spacing_(spacing), bits_(std::move(bits)) {
    if (bits_.size() != voxel_count(dims_)) throw ArgumentError("Mask: size does not match dims");
    for (auto& b : bits_)
      if (b > 1) throw ArgumentError("Mask: values must be 0 or 1");
  }
  static Mask empty(Dims dims, Spacing spacing = {1.0, 1.0, 1.0}) {
    return Mask(dims, spacing, std::vector<std::uint8_t>(voxel_count(dims), 0));
  }

  // Foreground = voxels whose value is nonzero.
  static Mask nonzero(const VolumeGrid& g) {
    std::vector<std::uint8_t> bits(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) bits[i] = g.data()[i] != 0.0 ? 1 : 0;
    return Mask(g.dims(), g.spacing(), std::move(bits));
  }

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  bool at(std::size_t x, std::size_t y, std::size_t z) const {
    return bits_[x + dims_[0] * (y + dims_[1] * z)] != 0;
  }
  std::size_t count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }
  bool is_empty() const { return std::find(bits_.begin(), bits_.end(), std::uint8_t{1}) == bits_.end(); }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  Dims dims_{};
  Spacing spacing_{1.0, 1.0, 1.0};
  std::vector<std::uint8_t> bits_;
};

enum class Region { kET, kWT, kTC, kNecrosis, kEdema, kEnhancing };

inline constexpr std::array<Region, 6> kAllRegions{Region::kET,       Region::kWT,    Region::kTC,
                                                   Region::kNecrosis, Region::kEdema, Region::kEnhancing};

inline std::string_view to_string(Region r) {
  switch (r) {
    case Region::kET: return "ET";
    case Region::kWT: return "WT";
    case Region::kTC: return "TC";
    case Region::kNecrosis: return "Necrosis";
    case Region::kEdema: return "Edema";
    case Region::kEnhancing: return "Enhancing";
  }
  return "";
}

// BraTS composition: ET = {4}, TC = {1,4}, WT = {1,2,4}.
inline bool region_contains(Region r, int label) {
  switch (r) {
    case Region::kET: return label == 4;
    case Region::kTC: return label == 1 || label == 4;
    case Region::kWT: return label == 1 || label == 2 || label == 4;
    case Region::kNecrosis: return label == 1;
    case Region::kEdema: return label == 2;
    case Region::kEnhancing: return label == 4;
  }
  return false;
}

struct RegionMask {
  Region region;
  Mask mask;
};

inline Mask region_mask(const SegLabelMap& seg, Region r) {
  std::vector<std::uint8_t> bits(seg.size());
  for (std::size_t i = 0; i < seg.size(); ++i) bits[i] = region_contains(r, seg.label(i)) ? 1 : 0;
  return Mask(seg.dims(), seg.spacing(), std::move(bits));
}

inline std::map<Region, RegionMask> region_masks(const SegLabelMap& seg) {
  std::map<Region, RegionMask> out;
  for (Region r : kAllRegions) out.emplace(r, RegionMask{r, region_mask(seg, r)});
  return out;
}

/// 2|a∩b| / (|a|+|b|). Both empty counts as perfect agreement (1.0).
inline double dice(const Mask& a, const Mask& b) {
  if (a.dims() != b.dims()) throw ArgumentError("dice: dimension mismatch");
  std::size_t na = 0, nb = 0, inter = 0;
  const auto& ba = a.bits();
  const auto& bb = b.bits();
  for (std::size_t i = 0; i < ba.size(); ++i) {
    na += ba[i];
    nb += bb[i];
    inter += ba[i] & bb[i];
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

inline double dice(const RegionMask& a, const RegionMask& b) { return dice(a.mask, b.mask); }

// ---------------------------------------------------------------------------
// Weighted soft dice

/// Per-class weights for necrosis, edema and enhancing tumor. Defaults are the
/// reciprocal-volume weights; any non-negative triple is renormalized to sum 1.
class DiceWeights {
 public:
  DiceWeights() : DiceWeights(0.38, 0.15, 0.47) {}
  DiceWeights(double necrosis, double edema, double enhancing) {
    if (!(necrosis >= 0.0 && edema >= 0.0 && enhancing >= 0.0))
      throw ArgumentError("DiceWeights: weights must be non-negative");
    const double sum = necrosis + edema + enhancing;
    if (!(sum > 0.0) || !std::isfinite(sum)) throw ArgumentError("DiceWeights: weights sum to zero");
    w_ = {necrosis / sum, edema / sum, enhancing / sum};
  }
  double necrosis() const { return w_[0]; }
  double edema() const { return w_[1]; }
  double enhancing() const { return w_[2]; }
  const std::array<double, 3>& values() const { return w_; }

 private:
  std::array<double, 3> w_;
};

/// Soft class probabilities per voxel, classes (background, necrosis, edema,
/// enhancing).
class ProbMaps {
 public:
  static constexpr double kSumTolerance = 1e-5;

  ProbMaps(Dims dims, std::array<std::vector<double>, 4> probs) : dims_(dims), p_(std::move(probs)) {
    const std::size_t n = voxel_count(dims_);
    for (const auto& c : p_)
      if (c.size() != n) throw ArgumentError("ProbMaps: class volume size does not match dims");
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (const auto& c : p_) {
        if (!(c[i] >= 0.0 && c[i] <= 1.0))
          throw ArgumentError("ProbMaps: probability outside [0,1] at voxel " + std::to_string(i));
        s += c[i];
      }
      if (std::fabs(s - 1.0) > kSumTolerance)
        throw ArgumentError("ProbMaps: probabilities do not sum to 1 at voxel " + std::to_string(i));
    }
  }

  // Exact one-hot encoding of a label map.
  static ProbMaps one_hot(const SegLabelMap& seg) {
    std::array<std::vector<double>, 4> p;
    for (auto& c : p) c.assign(seg.size(), 0.0);
    for (std::size_t i = 0; i < seg.size(); ++i) p[class_of_label(seg.label(i))][i] = 1.0;
    return ProbMaps(seg.dims(), std::move(p));
  }

  static std::size_t class_of_label(int label) { return label == 4 ? 3 : static_cast<std::size_t>(label); }

  const Dims& dims() const { return dims_; }
  const std::vector<double>& cls(std::size_t c) const { return p_[c]; }

 private:
  Dims dims_;
  std::array<std::vector<double>, 4> p_;
};

inline constexpr double kSoftDiceEpsilon = 1e-5;

/// 1 - Σ_c w_c · (2Σ p·g + ε)/(Σ p + Σ g + ε) over the three tumor classes.
inline double weighted_dice_loss(const ProbMaps& pred, const SegLabelMap& gt,
                                 const DiceWeights& w = {}) {
  if (pred.dims() != gt.dims()) throw ArgumentError("weighted_dice_loss: dimension mismatch");
  double loss = 1.0;
  for (std::size_t c = 1; c <= 3; ++c) {
    const auto& p = pred.cls(c);
    double inter = 0.0, psum = 0.0, gsum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = ProbMaps::class_of_label(gt.label(i)) == c ? 1.0 : 0.0;
      inter += p[i] * g;
      psum += p[i];
      gsum += g;
    }
    const double soft = (2.0 * inter + kSoftDiceEpsilon) / (psum + gsum + kSoftDiceEpsilon);
    loss -= w.values()[c - 1] * soft;
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Hausdorff

namespace hausdorff_detail {

// q-th percentile (nearest rank) of the distances from a's voxels to b.
inline double directed(const Mask& a, const std::vector<double>& dist2_to_b, double percentile) {
  std::vector<double> d;
  d.reserve(a.count());
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i]) d.push_back(dist2_to_b[i]);
  if (percentile >= 100.0) return std::sqrt(*std::max_element(d.begin(), d.end()));
  auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * static_cast<double>(d.size())));
  rank = std::clamp<std::size_t>(rank, 1, d.size());
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(rank - 1), d.end());
  return std::sqrt(d[rank - 1]);
}

}  // namespace hausdorff_detail

/// Symmetric Hausdorff distance in mm between voxel-center sets.
/// percentile = 100 gives the classic metric; 95 gives HD95 (max of the two
/// directed 95th percentiles).
inline double hausdorff(const Mask& a, const Mask& b, const Spacing& spacing, double percentile = 100.0) {
  if (a.dims() != b.dims()) throw ArgumentError("hausdorff: dimension mismatch");
  if (!(percentile > 0.0 && percentile <= 100.0)) throw ArgumentError("hausdorff: percentile must be in (0, 100]");
  if (a.is_empty() || b.is_empty()) throw UndefinedMetricError("hausdorff: undefined for an empty mask");
  const auto to_b = squared_distance_to(b.bits(), b.dims(), spacing);
  const auto to_a = squared_distance_to(a.bits(), a.dims(), spacing);
  return std::max(hausdorff_detail::directed(a, to_b, percentile),
                  hausdorff_detail::directed(b, to_a, percentile));
}

inline double hausdorff(const Mask& a, const Mask& b, double percentile = 100.0) {
  if (a.spacing() != b.spacing()) throw ArgumentError("hausdorff: spacing mismatch");
  return hausdorff(a, b, a.spacing(), percentile);
}

inline double hausdorff(const RegionMask& a, const RegionMask& b, const Spacing& spacing,
                        double percentile = 100.0) {
  return hausdorff(a.mask, b.mask, spacing, percentile);
}

}  // namespace bratsos
