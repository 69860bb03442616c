#pragma once

// Handcrafted geometry/location features of a tumor segmentation.
//
// Layout (36 slots, frozen): 3 non-image slots (age, resection one-hot),
// 4 volumes, 7 volume ratios, 4 surface areas, 4 surface/volume ratios,
// whole-tumor epicenter + parcel, enhancing epicenter + parcel, and the two
// epicenter offsets from the brain epicenter.

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bratsos/error.hpp"
#include "bratsos/segmetrics.hpp"
#include "bratsos/subject.hpp"
#include "bratsos/volume.hpp"

namespace bratsos {

inline constexpr std::size_t kHandcraftedCount = 36;

inline constexpr std::array<std::string_view, kHandcraftedCount> kHandcraftedNames{
    "age",           "resection_gtr",     "resection_str",     "V_whole",
    "V_necrosis",    "V_edema",           "V_enhancing",       "R_whole_brain",
    "R_necrosis_brain", "R_edema_brain",  "R_enhancing_brain", "R_necrosis_enh",
    "R_edema_enh",   "R_necrosis_edema",  "S_whole",           "S_necrosis",
    "S_edema",       "S_enhancing",       "SV_whole",          "SV_necrosis",
    "SV_edema",      "SV_enhancing",      "epi_whole_x",       "epi_whole_y",
    "epi_whole_z",   "epi_whole_parcel",  "epi_enh_x",         "epi_enh_y",
    "epi_enh_z",     "epi_enh_parcel",    "rel_whole_x",       "rel_whole_y",
    "rel_whole_z",   "rel_enh_x",         "rel_enh_y",         "rel_enh_z"};

// Slot offsets of each block.
namespace slot {
inline constexpr std::size_t kAge = 0;
inline constexpr std::size_t kResectionGtr = 1;
inline constexpr std::size_t kVolumes = 3;
inline constexpr std::size_t kSurfaces = 14;
inline constexpr std::size_t kSurfaceRatios = 18;
inline constexpr std::size_t kEpiWhole = 22;
inline constexpr std::size_t kEpiEnh = 26;
inline constexpr std::size_t kRelWhole = 30;
inline constexpr std::size_t kRelEnh = 33;
}  // namespace slot

inline double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

struct VolumeFeatures {
  double v_whole = 0, v_necrosis = 0, v_edema = 0, v_enhancing = 0;
  double r_whole_brain = 0, r_necrosis_brain = 0, r_edema_brain = 0, r_enhancing_brain = 0;
  double r_necrosis_enh = 0, r_edema_enh = 0, r_necrosis_edema = 0;

  std::array<double, 11> values() const {
    return {v_whole,           v_necrosis,     v_edema,       v_enhancing,
            r_whole_brain,     r_necrosis_brain, r_edema_brain, r_enhancing_brain,
            r_necrosis_enh,    r_edema_enh,    r_necrosis_edema};
  }
};

/// Volumes in mm³ and their ratios; a zero denominator yields 0.
inline VolumeFeatures volume_features(const SegLabelMap& seg, const Mask& brain, const Spacing& spacing) {
  if (seg.dims() != brain.dims()) throw ArgumentError("volume_features: seg and brain dims differ");
  std::size_t n1 = 0, n2 = 0, n4 = 0;
  for (std::size_t i = 0; i < seg.size(); ++i) {
    switch (seg.label(i)) {
      case 1: ++n1; break;
      case 2: ++n2; break;
      case 4: ++n4; break;
      default: break;
    }
  }
  const double voxel = spacing[0] * spacing[1] * spacing[2];
  VolumeFeatures f;
  f.v_necrosis = static_cast<double>(n1) * voxel;
  f.v_edema = static_cast<double>(n2) * voxel;
  f.v_enhancing = static_cast<double>(n4) * voxel;
  f.v_whole = static_cast<double>(n1 + n2 + n4) * voxel;
  const double v_brain = static_cast<double>(brain.count()) * voxel;
  f.r_whole_brain = safe_ratio(f.v_whole, v_brain);
  f.r_necrosis_brain = safe_ratio(f.v_necrosis, v_brain);
  f.r_edema_brain = safe_ratio(f.v_edema, v_brain);
  f.r_enhancing_brain = safe_ratio(f.v_enhancing, v_brain);
  f.r_necrosis_enh = safe_ratio(f.v_necrosis, f.v_enhancing);
  f.r_edema_enh = safe_ratio(f.v_edema, f.v_enhancing);
  f.r_necrosis_edema = safe_ratio(f.v_necrosis, f.v_edema);
  return f;
}

/// Exposed-face surface area (6-connectivity). Faces on the volume boundary
/// count as exposed.
inline double surface_area(const Mask& mask, const Spacing& spacing) {
  const Dims& d = mask.dims();
  const std::array<double, 3> face{spacing[1] * spacing[2], spacing[0] * spacing[2], spacing[0] * spacing[1]};
  std::array<std::size_t, 3> faces{0, 0, 0};
  for (std::size_t z = 0; z < d[2]; ++z)
    for (std::size_t y = 0; y < d[1]; ++y)
      for (std::size_t x = 0; x < d[0]; ++x) {
        if (!mask.at(x, y, z)) continue;
        faces[0] += (x == 0 || !mask.at(x - 1, y, z)) + (x + 1 == d[0] || !mask.at(x + 1, y, z));
        faces[1] += (y == 0 || !mask.at(x, y - 1, z)) + (y + 1 == d[1] || !mask.at(x, y + 1, z));
        faces[2] += (z == 0 || !mask.at(x, y, z - 1)) + (z + 1 == d[2] || !mask.at(x, y, z + 1));
      }
  return static_cast<double>(faces[0]) * face[0] + static_cast<double>(faces[1]) * face[1] +
         static_cast<double>(faces[2]) * face[2];
}

inline double surface_area(const Mask& mask) { return surface_area(mask, mask.spacing()); }

using Point3 = std::array<double, 3>;

/// Mean foreground voxel index per axis.
inline Point3 epicenter(const Mask& mask) {
  const Dims& d = mask.dims();
  std::array<double, 3> sum{0, 0, 0};
  std::size_t n = 0;
  for (std::size_t z = 0; z < d[2]; ++z)
    for (std::size_t y = 0; y < d[1]; ++y)
      for (std::size_t x = 0; x < d[0]; ++x)
        if (mask.at(x, y, z)) {
          sum[0] += static_cast<double>(x);
          sum[1] += static_cast<double>(y);
          sum[2] += static_cast<double>(z);
          ++n;
        }
  if (n == 0) throw UndefinedMetricError("epicenter: empty mask");
  const auto dn = static_cast<double>(n);
  return {sum[0] / dn, sum[1] / dn, sum[2] / dn};
}

/// Atlas label at the nearest voxel (round half up per axis).
inline int parcellation_of(const Point3& p, const AtlasLabelMap& atlas) {
  const Dims& d = atlas.dims();
  std::array<std::size_t, 3> idx{};
  for (std::size_t a = 0; a < 3; ++a) {
    const double r = std::floor(p[a] + 0.5);
    if (!(r >= 0.0 && r < static_cast<double>(d[a])))
      throw ArgumentError("parcellation_of: point outside atlas bounds on axis " + std::to_string(a));
    idx[a] = static_cast<std::size_t>(r);
  }
  return static_cast<int>(atlas.grid().at(idx[0], idx[1], idx[2]));
}

struct HandcraftedFeatures {
  std::array<double, kHandcraftedCount> values{};
  // Provenance for imputed or substituted slots.
  std::vector<std::string> notes;

  double operator[](std::size_t i) const { return values[i]; }
  double by_name(std::string_view name) const {
    for (std::size_t i = 0; i < kHandcraftedCount; ++i)
      if (kHandcraftedNames[i] == name) return values[i];
    throw ArgumentError("HandcraftedFeatures: unknown slot " + std::string(name));
  }
};

struct HandcraftedOptions {
  // Used when the subject has no age, normally the training-set mean.
  std::optional<double> age_fill;
};

inline HandcraftedFeatures assemble_handcrafted(const SubjectRecord& subject, const SegLabelMap& seg,
                                                const Mask& brain, const AtlasLabelMap& atlas,
                                                const HandcraftedOptions& opts = {}) {
  if (seg.dims() != brain.dims() || seg.dims() != atlas.dims())
    throw ArgumentError("assemble_handcrafted: seg, brain and atlas dims differ");
  if (brain.is_empty()) throw ArgumentError("assemble_handcrafted: brain mask is empty for " + subject.id);

  HandcraftedFeatures out;
  auto& v = out.values;

  if (subject.age) {
    v[slot::kAge] = *subject.age;
  } else if (opts.age_fill) {
    v[slot::kAge] = *opts.age_fill;
    out.notes.push_back("age imputed with " + std::to_string(*opts.age_fill));
  } else {
    throw ArgumentError("assemble_handcrafted: age missing for " + subject.id + " and no imputation value");
  }
  v[slot::kResectionGtr] = subject.resection == Resection::kGTR ? 1.0 : 0.0;
  v[slot::kResectionGtr + 1] = subject.resection == Resection::kSTR ? 1.0 : 0.0;

  const Spacing& sp = seg.spacing();
  const VolumeFeatures vol = volume_features(seg, brain, sp);
  const auto vv = vol.values();
  std::copy(vv.begin(), vv.end(), v.begin() + slot::kVolumes);

  const Mask whole = region_mask(seg, Region::kWT);
  const Mask enh = region_mask(seg, Region::kEnhancing);
  const std::array<Mask, 4> parts{whole, region_mask(seg, Region::kNecrosis), region_mask(seg, Region::kEdema), enh};
  const std::array<double, 4> vols{vol.v_whole, vol.v_necrosis, vol.v_edema, vol.v_enhancing};
  for (std::size_t k = 0; k < 4; ++k) {
    const double s = surface_area(parts[k], sp);
    v[slot::kSurfaces + k] = s;
    v[slot::kSurfaceRatios + k] = safe_ratio(s, vols[k]);
  }

  const Point3 brain_epi = epicenter(brain);
  Point3 whole_epi = brain_epi;
  if (whole.is_empty()) {
    out.notes.push_back("whole tumor empty: tumor epicenters set to brain epicenter");
  } else {
    whole_epi = epicenter(whole);
  }
  Point3 enh_epi = whole_epi;
  if (enh.is_empty()) {
    out.notes.push_back("enhancing tumor empty: enhancing epicenter set to whole-tumor epicenter");
  } else {
    enh_epi = epicenter(enh);
  }

  for (std::size_t a = 0; a < 3; ++a) {
    v[slot::kEpiWhole + a] = whole_epi[a];
    v[slot::kEpiEnh + a] = enh_epi[a];
    v[slot::kRelWhole + a] = whole_epi[a] - brain_epi[a];
    v[slot::kRelEnh + a] = enh_epi[a] - brain_epi[a];
  }
  v[slot::kEpiWhole + 3] = parcellation_of(whole_epi, atlas);
  v[slot::kEpiEnh + 3] = parcellation_of(enh_epi, atlas);
  return out;
}

}  // namespace bratsos
