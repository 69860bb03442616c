#pragma once

// Independent reference computations used only by tests. Each one is the
// naive definition, written without reusing library code paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "bratsos/segmetrics.hpp"

namespace bratsos::oracle {

// Dice by explicit set counting over coordinates.
inline double dice_by_counting(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  int in_a = 0, in_b = 0, both = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 1) ++in_a;
    if (b[i] == 1) ++in_b;
    if (a[i] == 1 && b[i] == 1) ++both;
  }
  if (in_a == 0 && in_b == 0) return 1.0;
  return (2.0 * both) / (in_a + in_b);
}

struct P3 {
  double x, y, z;
};

inline std::vector<P3> points_mm(const Mask& m, const Spacing& s) {
  std::vector<P3> pts;
  const Dims& d = m.dims();
  for (std::size_t z = 0; z < d[2]; ++z)
    for (std::size_t y = 0; y < d[1]; ++y)
      for (std::size_t x = 0; x < d[0]; ++x)
        if (m.at(x, y, z)) pts.push_back({x * s[0], y * s[1], z * s[2]});
  return pts;
}

// Classic Hausdorff over all point pairs.
inline double hausdorff_brute_force(const Mask& a, const Mask& b, const Spacing& s) {
  const auto pa = points_mm(a, s);
  const auto pb = points_mm(b, s);
  auto directed = [](const std::vector<P3>& from, const std::vector<P3>& to) {
    double worst = 0.0;
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to)
        best = std::min(best, std::sqrt((p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y) + (p.z - q.z) * (p.z - q.z)));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(pa, pb), directed(pb, pa));
}

// Counts faces of foreground voxels whose neighbour is background or outside.
inline double exposed_faces(const Mask& m, const Spacing& s) {
  const Dims& d = m.dims();
  auto inside = [&](long x, long y, long z) {
    if (x < 0 || y < 0 || z < 0 || x >= static_cast<long>(d[0]) || y >= static_cast<long>(d[1]) ||
        z >= static_cast<long>(d[2]))
      return false;
    return m.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), static_cast<std::size_t>(z));
  };
  const long dx[6] = {1, -1, 0, 0, 0, 0}, dy[6] = {0, 0, 1, -1, 0, 0}, dz[6] = {0, 0, 0, 0, 1, -1};
  const double area[6] = {s[1] * s[2], s[1] * s[2], s[0] * s[2], s[0] * s[2], s[0] * s[1], s[0] * s[1]};
  double total = 0.0;
  for (long z = 0; z < static_cast<long>(d[2]); ++z)
    for (long y = 0; y < static_cast<long>(d[1]); ++y)
      for (long x = 0; x < static_cast<long>(d[0]); ++x) {
        if (!inside(x, y, z)) continue;
        for (int k = 0; k < 6; ++k)
          if (!inside(x + dx[k], y + dy[k], z + dz[k])) total += area[k];
      }
  return total;
}

// Survival bucket: 0 short (<300), 1 mid [300, 450], 2 long (>450).
inline int bucket(double days) { return days < 300 ? 0 : (days > 450 ? 2 : 1); }

}  // namespace bratsos::oracle
