#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bratsos/error.hpp"

namespace bratsos {

using Dims = std::array<std::size_t, 3>;     // (nx, ny, nz)
using Spacing = std::array<double, 3>;       // mm per voxel along x, y, z
using Index3 = std::array<std::size_t, 3>;   // (x, y, z)

enum class ValueKind { kIntensity, kLabel, kAtlas };

inline constexpr int kMaxAtlasLabel = 56;

inline std::size_t voxel_count(const Dims& d) { return d[0] * d[1] * d[2]; }

inline bool is_brats_label(double v) { return (v == 0.0) | (v == 1.0) | (v == 2.0) | (v == 4.0); }

/// Dense 3D scalar grid in x-fastest order. Immutable after construction, so
/// instances can be shared across threads freely.
class VolumeGrid {
 public:
  VolumeGrid() = default;

  VolumeGrid(Dims dims, Spacing spacing, std::vector<double> data,
             ValueKind kind = ValueKind::kIntensity)
      : dims_(dims), spacing_(spacing), data_(std::move(data)), kind_(kind) {
    for (std::size_t a = 0; a < 3; ++a) {
      if (dims_[a] == 0) throw ArgumentError("VolumeGrid: dims must be positive");
      if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a]))
        throw ArgumentError("VolumeGrid: spacing must be strictly positive");
    }
    if (data_.size() != voxel_count(dims_))
      throw ArgumentError("VolumeGrid: data length " + std::to_string(data_.size()) +
                          " != nx*ny*nz = " + std::to_string(voxel_count(dims_)));
    if (kind_ == ValueKind::kLabel) {
      // branch-free scan; random label maps defeat the branch predictor
      bool all = true;
      for (double v : data_) all &= is_brats_label(v);
      if (!all)
        for (double v : data_)
          if (!is_brats_label(v))
            throw ArgumentError("VolumeGrid: label value " + std::to_string(v) +
                                " outside {0,1,2,4}");
    } else if (kind_ == ValueKind::kAtlas) {
      for (double v : data_)
        if (!(v >= 0.0 && v <= kMaxAtlasLabel && v == std::floor(v)))
          throw ArgumentError("VolumeGrid: atlas value " + std::to_string(v) +
                              " is not an integer in [0, 56]");
    }
  }

  // Zero-filled grid.
  static VolumeGrid zeros(Dims dims, Spacing spacing = {1.0, 1.0, 1.0},
                          ValueKind kind = ValueKind::kIntensity) {
    return VolumeGrid(dims, spacing, std::vector<double>(voxel_count(dims), 0.0), kind);
  }

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  const std::vector<double>& data() const { return data_; }
  ValueKind kind() const { return kind_; }
  std::size_t size() const { return data_.size(); }

  std::size_t offset(std::size_t x, std::size_t y, std::size_t z) const {
    return x + dims_[0] * (y + dims_[1] * z);
  }
  double at(std::size_t x, std::size_t y, std::size_t z) const { return data_[offset(x, y, z)]; }

  // Same dims, spacing and kind, different values.
  VolumeGrid with_data(std::vector<double> data) const {
    return VolumeGrid(dims_, spacing_, std::move(data), kind_);
  }
  VolumeGrid with_kind(ValueKind kind) const { return VolumeGrid(dims_, spacing_, data_, kind); }

  bool same_geometry(const VolumeGrid& o) const { return dims_ == o.dims_ && spacing_ == o.spacing_; }

  friend bool operator==(const VolumeGrid&, const VolumeGrid&) = default;

 private:
  Dims dims_{};
  Spacing spacing_{1.0, 1.0, 1.0};
  std::vector<double> data_;
  ValueKind kind_ = ValueKind::kIntensity;
};

/// Tumor label volume over the BraTS alphabet {0,1,2,4}.
class SegLabelMap {
 public:
  explicit SegLabelMap(VolumeGrid grid) : grid_(std::move(grid)) {
    if (grid_.kind() != ValueKind::kLabel) grid_ = grid_.with_kind(ValueKind::kLabel);
  }
  SegLabelMap(Dims dims, Spacing spacing, std::vector<double> labels)
      : grid_(dims, spacing, std::move(labels), ValueKind::kLabel) {}

  const VolumeGrid& grid() const { return grid_; }
  const Dims& dims() const { return grid_.dims(); }
  const Spacing& spacing() const { return grid_.spacing(); }
  int label(std::size_t i) const { return static_cast<int>(grid_.data()[i]); }
  std::size_t size() const { return grid_.size(); }

 private:
  VolumeGrid grid_;
};

/// Parcellation label volume (0 = outside every parcel, 1..56 parcels).
class AtlasLabelMap {
 public:
  explicit AtlasLabelMap(VolumeGrid grid) : grid_(std::move(grid)) {
    if (grid_.kind() != ValueKind::kAtlas) grid_ = grid_.with_kind(ValueKind::kAtlas);
  }
  const VolumeGrid& grid() const { return grid_; }
  const Dims& dims() const { return grid_.dims(); }

 private:
  VolumeGrid grid_;
};

/// Copies grid into the low-index corner of a zero grid of shape target.
inline VolumeGrid zero_pad(const VolumeGrid& grid, const Dims& target) {
  const Dims& d = grid.dims();
  for (std::size_t a = 0; a < 3; ++a)
    if (target[a] < d[a])
      throw ArgumentError("zero_pad: target extent " + std::to_string(target[a]) +
                          " smaller than current extent " + std::to_string(d[a]) +
                          " on axis " + std::to_string(a));
  std::vector<double> out(voxel_count(target), 0.0);
  const auto& src = grid.data();
  for (std::size_t z = 0; z < d[2]; ++z)
    for (std::size_t y = 0; y < d[1]; ++y) {
      auto row = src.begin() + static_cast<std::ptrdiff_t>(grid.offset(0, y, z));
      std::copy(row, row + static_cast<std::ptrdiff_t>(d[0]),
                out.begin() + static_cast<std::ptrdiff_t>(y * target[0] + z * target[0] * target[1]));
    }
  return VolumeGrid(target, grid.spacing(), std::move(out), grid.kind());
}

// Inverse of zero_pad for the low-index corner; used to bring padded
// inference outputs back to the native grid.
inline VolumeGrid crop(const VolumeGrid& grid, const Dims& target) {
  const Dims& d = grid.dims();
  for (std::size_t a = 0; a < 3; ++a)
    if (target[a] > d[a] || target[a] == 0)
      throw ArgumentError("crop: target exceeds current dims");
  std::vector<double> out;
  out.reserve(voxel_count(target));
  for (std::size_t z = 0; z < target[2]; ++z)
    for (std::size_t y = 0; y < target[1]; ++y)
      for (std::size_t x = 0; x < target[0]; ++x) out.push_back(grid.at(x, y, z));
  return VolumeGrid(target, grid.spacing(), std::move(out), grid.kind());
}

}  // namespace bratsos
