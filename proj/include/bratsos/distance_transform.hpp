#pragma once

// Exact Euclidean distance transform on an anisotropic voxel grid
// (separable lower-envelope-of-parabolas method).

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "bratsos/volume.hpp"

namespace bratsos {

namespace edt_detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// In-place 1D squared-distance transform of f (length n, sample stride
// `stride` in the flat buffer) with physical step w between samples.
inline void transform_line(double* f, std::size_t n, std::size_t stride, double w,
                           std::vector<double>& src, std::vector<std::size_t>& v,
                           std::vector<double>& z) {
  src.resize(n);
  v.resize(n);
  z.resize(n + 1);
  for (std::size_t i = 0; i < n; ++i) src[i] = f[i * stride];

  const double w2 = w * w;
  std::size_t k = 0;
  bool any = false;
  for (std::size_t q = 0; q < n; ++q) {
    if (src[q] == kInf) continue;
    if (!any) {
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      any = true;
      continue;
    }
    const double fq = src[q] + w2 * static_cast<double>(q) * static_cast<double>(q);
    double s;
    for (;;) {
      const std::size_t p = v[k];
      const double fp = src[p] + w2 * static_cast<double>(p) * static_cast<double>(p);
      s = (fq - fp) / (2.0 * w2 * static_cast<double>(q - p));
      if (s > z[k]) break;
      --k;  // z[0] = -inf, so k never underflows
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (!any) return;  // line stays at infinity

  k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    while (z[k + 1] < static_cast<double>(q)) ++k;
    const double d = w * (static_cast<double>(q) - static_cast<double>(v[k]));
    f[q * stride] = d * d + src[v[k]];
  }
}

}  // namespace edt_detail

/// Squared Euclidean distance (mm²) from every voxel center to the nearest
/// foreground voxel center of `mask`. Returns +inf everywhere for an empty mask.
inline std::vector<double> squared_distance_to(const std::vector<std::uint8_t>& mask,
                                               const Dims& dims, const Spacing& spacing) {
  using edt_detail::kInf;
  std::vector<double> d(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) d[i] = mask[i] ? 0.0 : kInf;

  std::vector<double> src;
  std::vector<std::size_t> v;
  std::vector<double> z;
  const std::size_t nx = dims[0], ny = dims[1], nz = dims[2];
  for (std::size_t zz = 0; zz < nz; ++zz)
    for (std::size_t y = 0; y < ny; ++y)
      edt_detail::transform_line(d.data() + nx * (y + ny * zz), nx, 1, spacing[0], src, v, z);
  for (std::size_t zz = 0; zz < nz; ++zz)
    for (std::size_t x = 0; x < nx; ++x)
      edt_detail::transform_line(d.data() + x + nx * ny * zz, ny, nx, spacing[1], src, v, z);
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t x = 0; x < nx; ++x)
      edt_detail::transform_line(d.data() + x + nx * y, nz, nx * ny, spacing[2], src, v, z);
  return d;
}

}  // namespace bratsos
