#pragma once

// Position-encoding features: non-overlapping block pooling of a label map.
// The native BraTS grid (x, y, z) = (240, 240, 155) pooled with a
// 12×12×5 kernel gives a (z, y, x) = (31, 20, 20) grid, 12400 values.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "bratsos/error.hpp"
#include "bratsos/volume.hpp"

namespace bratsos {

inline constexpr Dims kPosEncInputDims{240, 240, 155};  // (x, y, z)
inline constexpr Dims kPosEncKernel{12, 12, 5};         // (x, y, z)
inline constexpr std::size_t kPosEncBlockVolume = 12 * 12 * 5;
inline constexpr std::size_t kPosEncLength = 31 * 20 * 20;

enum class PoolMode { kMean, kMax };

struct PosEncFeatures {
  Dims grid{};  // pooled (x, y, z) extents
  std::vector<double> values;  // z-major: ((z * ny) + y) * nx + x
};

namespace posenc_detail {

// Integer label sum (or max) per block, z-major.
inline std::vector<std::int64_t> block_reduce(const SegLabelMap& seg, const Dims& kernel, PoolMode mode) {
  const Dims& d = seg.dims();
  for (std::size_t a = 0; a < 3; ++a)
    if (kernel[a] == 0 || d[a] % kernel[a] != 0)
      throw ArgumentError("pooling: extent " + std::to_string(d[a]) + " on axis " + std::to_string(a) +
                          " is not a multiple of kernel " + std::to_string(kernel[a]));
  const Dims out{d[0] / kernel[0], d[1] / kernel[1], d[2] / kernel[2]};
  std::vector<std::int64_t> acc(voxel_count(out), 0);
  const auto& data = seg.grid().data();
  std::size_t i = 0;
  for (std::size_t z = 0; z < d[2]; ++z) {
    const std::size_t bz = z / kernel[2];
    for (std::size_t y = 0; y < d[1]; ++y) {
      const std::size_t row = (bz * out[1] + y / kernel[1]) * out[0];
      for (std::size_t x = 0; x < d[0]; ++x, ++i) {
        const auto label = static_cast<std::int64_t>(data[i]);
        auto& cell = acc[row + x / kernel[0]];
        if (mode == PoolMode::kMean) cell += label;
        else cell = std::max(cell, label);
      }
    }
  }
  return acc;
}

}  // namespace posenc_detail

/// Integer sum of raw label values in each block, z-major. The mean-pooled
/// feature of a block is this sum divided by the block volume.
inline std::vector<std::int64_t> pooled_block_sums(const SegLabelMap& seg, const Dims& kernel = kPosEncKernel) {
  return posenc_detail::block_reduce(seg, kernel, PoolMode::kMean);
}

/// Block pooling with an arbitrary kernel that tiles the grid exactly.
inline PosEncFeatures pool_labels(const SegLabelMap& seg, const Dims& kernel, PoolMode mode = PoolMode::kMean) {
  const auto acc = posenc_detail::block_reduce(seg, kernel, mode);
  const Dims& d = seg.dims();
  PosEncFeatures f;
  f.grid = {d[0] / kernel[0], d[1] / kernel[1], d[2] / kernel[2]};
  f.values.resize(acc.size());
  const double block = static_cast<double>(voxel_count(kernel));
  for (std::size_t i = 0; i < acc.size(); ++i)
    f.values[i] = mode == PoolMode::kMean ? static_cast<double>(acc[i]) / block : static_cast<double>(acc[i]);
  return f;
}

/// The 12400-dim feature of a native 240×240×155 label map. Padded inputs
/// (e.g. 160 slices) are rejected; crop them first.
inline PosEncFeatures pooled_segmentation(const SegLabelMap& seg, PoolMode mode = PoolMode::kMean) {
  if (seg.dims() != kPosEncInputDims)
    throw ArgumentError("pooled_segmentation: expected (x,y,z) = (240,240,155), got (" +
                        std::to_string(seg.dims()[0]) + "," + std::to_string(seg.dims()[1]) + "," +
                        std::to_string(seg.dims()[2]) + ")");
  return pool_labels(seg, kPosEncKernel, mode);
}

// Column names pe_00000 .. pe_12399.
inline std::vector<std::string> posenc_column_names(std::size_t n = kPosEncLength) {
  std::vector<std::string> names;
  names.reserve(n);
  char buf[16];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), "pe_%05zu", i);
    names.emplace_back(buf);
  }
  return names;
}

}  // namespace bratsos
