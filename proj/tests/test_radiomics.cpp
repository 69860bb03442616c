#include <gtest/gtest.h>

#include <random>

#include "bratsos/radiomics.hpp"
#include "support/oracles.hpp"

using namespace bratsos;

namespace {

std::vector<double> labels_at(const Dims& d, std::initializer_list<std::pair<Index3, double>> on) {
  std::vector<double> v(voxel_count(d), 0.0);
  for (const auto& [p, l] : on) v[p[0] + d[0] * (p[1] + d[1] * p[2])] = l;
  return v;
}

Mask full_mask(const Dims& d, Spacing s = {1, 1, 1}) { return Mask(d, s, std::vector<std::uint8_t>(voxel_count(d), 1)); }

Mask box(const Dims& d, Index3 lo, Index3 hi) {
  std::vector<std::uint8_t> b(voxel_count(d), 0);
  for (std::size_t z = lo[2]; z < hi[2]; ++z)
    for (std::size_t y = lo[1]; y < hi[1]; ++y)
      for (std::size_t x = lo[0]; x < hi[0]; ++x) b[x + d[0] * (y + d[1] * z)] = 1;
  return Mask(d, {1, 1, 1}, b);
}

AtlasLabelMap index_atlas(const Dims& d) {
  std::vector<double> v(voxel_count(d));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(1 + i % 56);
  return AtlasLabelMap(VolumeGrid(d, {1, 1, 1}, v, ValueKind::kAtlas));
}

SegLabelMap layered(const Dims& d, Index3 shift, std::size_t scale) {
  // necrosis cube inside an enhancing shell inside edema, all axis-aligned boxes.
  std::vector<double> v(voxel_count(d), 0.0);
  for (std::size_t z = 0; z < d[2]; ++z)
    for (std::size_t y = 0; y < d[1]; ++y)
      for (std::size_t x = 0; x < d[0]; ++x) {
        auto in = [&](std::size_t lo, std::size_t hi) {
          auto ok = [&](std::size_t c, std::size_t s) { return c >= s + lo * scale && c < s + hi * scale; };
          return ok(x, shift[0]) && ok(y, shift[1]) && ok(z, shift[2]);
        };
        double l = 0;
        if (in(2, 3)) l = 1;
        else if (in(1, 4)) l = 4;
        else if (in(0, 5)) l = 2;
        v[x + d[0] * (y + d[1] * z)] = l;
      }
  return SegLabelMap(d, {1, 1, 1}, v);
}

}  // namespace

TEST(Volumes, TenVoxelExample) {
  const Dims d{10, 1, 1};
  const SegLabelMap seg(d, {1, 1, 1}, {1, 1, 2, 2, 2, 4, 4, 4, 4, 0});
  const auto f = volume_features(seg, full_mask(d), {1, 1, 1});
  EXPECT_EQ(f.v_necrosis, 2.0);
  EXPECT_EQ(f.v_edema, 3.0);
  EXPECT_EQ(f.v_enhancing, 4.0);
  EXPECT_EQ(f.v_whole, 9.0);
  EXPECT_DOUBLE_EQ(f.r_whole_brain, 0.9);
  EXPECT_DOUBLE_EQ(f.r_necrosis_enh, 0.5);
  EXPECT_DOUBLE_EQ(f.r_edema_enh, 0.75);
  EXPECT_DOUBLE_EQ(f.r_necrosis_edema, 2.0 / 3.0);
}

TEST(Volumes, SpacingScalesVolumesButNotRatios) {
  const Dims d{10, 1, 1};
  const SegLabelMap seg(d, {1, 1, 1}, {1, 1, 2, 2, 2, 4, 4, 4, 4, 0});
  const auto f = volume_features(seg, full_mask(d), {2, 1, 0.5});
  EXPECT_EQ(f.v_whole, 9.0);
  EXPECT_DOUBLE_EQ(f.r_edema_enh, 0.75);
}

TEST(Volumes, PartitionIdentityOnRandomLabels) {
  std::mt19937_64 rng(3);
  const double alphabet[] = {0, 1, 2, 4};
  for (int t = 0; t < 50; ++t) {
    const Dims d{5, 4, 3};
    std::vector<double> v(voxel_count(d));
    for (auto& x : v) x = alphabet[rng() % 4];
    const auto f = volume_features(SegLabelMap(d, {1, 1, 1}, v), full_mask(d), {1, 1, 1});
    EXPECT_EQ(f.v_whole, f.v_necrosis + f.v_edema + f.v_enhancing);
    EXPECT_LE(f.r_whole_brain, 1.0);
  }
}

TEST(Volumes, EmptySegmentationGivesZeros) {
  const Dims d{3, 3, 3};
  const auto f = volume_features(SegLabelMap(d, {1, 1, 1}, std::vector<double>(27, 0.0)), full_mask(d), {1, 1, 1});
  for (double x : f.values()) EXPECT_EQ(x, 0.0);
}

TEST(SurfaceArea, SingleVoxelAndPair) {
  const Dims d{4, 4, 4};
  EXPECT_EQ(surface_area(box(d, {1, 1, 1}, {2, 2, 2})), 6.0);
  EXPECT_EQ(surface_area(box(d, {1, 1, 1}, {3, 2, 2})), 10.0);
  EXPECT_EQ(surface_area(Mask::empty(d)), 0.0);
}

TEST(SurfaceArea, BoxFormula) {
  const Dims d{5, 5, 5};
  for (std::size_t a = 1; a <= 3; ++a)
    for (std::size_t b = 1; b <= 3; ++b)
      for (std::size_t c = 1; c <= 3; ++c) {
        const double expected = 2.0 * static_cast<double>(a * b + b * c + c * a);
        EXPECT_EQ(surface_area(box(d, {1, 1, 1}, {1 + a, 1 + b, 1 + c})), expected);
        // touching the grid boundary counts the boundary faces too
        EXPECT_EQ(surface_area(box(d, {0, 0, 0}, {a, b, c})), expected);
      }
}

TEST(SurfaceArea, MatchesExposedFaceOracleWithSpacing) {
  std::mt19937_64 rng(17);
  std::bernoulli_distribution on(0.35);
  const Spacing sp{0.9, 1.1, 2.5};
  for (int t = 0; t < 40; ++t) {
    const Dims d{6, 5, 4};
    std::vector<std::uint8_t> b(voxel_count(d));
    for (auto& x : b) x = on(rng);
    const Mask m(d, sp, b);
    EXPECT_NEAR(surface_area(m, sp), oracle::exposed_faces(m, sp), 1e-9);
  }
}

TEST(Epicenter, Examples) {
  const Dims d{6, 6, 6};
  const auto e = epicenter(box(d, {1, 1, 1}, {3, 2, 2}));
  EXPECT_DOUBLE_EQ(e[0], 1.5);
  EXPECT_DOUBLE_EQ(e[1], 1.0);
  EXPECT_DOUBLE_EQ(e[2], 1.0);
  EXPECT_THROW(epicenter(Mask::empty(d)), UndefinedMetricError);
}

TEST(Parcellation, RoundsHalfUp) {
  const Dims d{10, 10, 10};
  const auto atlas = index_atlas(d);
  const auto expected = static_cast<int>(atlas.grid().at(5, 6, 6));
  EXPECT_EQ(parcellation_of({5.4, 5.5, 5.6}, atlas), expected);
  EXPECT_EQ(parcellation_of({0.0, 0.0, 0.0}, atlas), 1);
  EXPECT_THROW(parcellation_of({9.5, 0, 0}, atlas), ArgumentError);
  EXPECT_THROW(parcellation_of({-0.6, 0, 0}, atlas), ArgumentError);
}

TEST(Handcrafted, LayoutAndResectionOneHot) {
  const Dims d{12, 12, 12};
  const SegLabelMap seg = layered(d, {1, 1, 1}, 2);
  const Mask brain = full_mask(d);
  const auto atlas = index_atlas(d);
  const std::pair<Resection, std::array<double, 2>> cases[] = {
      {Resection::kGTR, {1, 0}}, {Resection::kSTR, {0, 1}}, {Resection::kNA, {0, 0}}};
  for (const auto& [r, onehot] : cases) {
    const SubjectRecord s{"S", 55.0, r, std::nullopt};
    const auto f = assemble_handcrafted(s, seg, brain, atlas);
    EXPECT_EQ(f.values.size(), 36u);
    EXPECT_EQ(f.by_name("age"), 55.0);
    EXPECT_EQ(f.by_name("resection_gtr"), onehot[0]);
    EXPECT_EQ(f.by_name("resection_str"), onehot[1]);
    EXPECT_TRUE(f.notes.empty());
    for (double x : f.values) EXPECT_TRUE(std::isfinite(x));
  }
  EXPECT_EQ(kHandcraftedNames.front(), "age");
  EXPECT_EQ(kHandcraftedNames.back(), "rel_enh_z");
}

TEST(Handcrafted, FallbacksAreRecorded) {
  const Dims d{6, 6, 6};
  const Mask brain = full_mask(d);
  const auto atlas = index_atlas(d);
  const SegLabelMap empty(d, {1, 1, 1}, std::vector<double>(voxel_count(d), 0.0));
  SubjectRecord s{"S", std::nullopt, Resection::kNA, std::nullopt};
  EXPECT_THROW(assemble_handcrafted(s, empty, brain, atlas), ArgumentError);
  const auto f = assemble_handcrafted(s, empty, brain, atlas, {61.5});
  EXPECT_EQ(f.by_name("age"), 61.5);
  EXPECT_EQ(f.notes.size(), 3u);
  EXPECT_DOUBLE_EQ(f.by_name("epi_whole_x"), 2.5);
  EXPECT_EQ(f.by_name("rel_whole_x"), 0.0);
  EXPECT_EQ(f.by_name("SV_whole"), 0.0);

  // edema only: enhancing epicenter falls back to the whole tumor.
  const SegLabelMap edema(d, {1, 1, 1}, labels_at(d, {{{1, 1, 1}, 2}}));
  s.age = 40;
  const auto g = assemble_handcrafted(s, edema, brain, atlas);
  ASSERT_EQ(g.notes.size(), 1u);
  EXPECT_EQ(g.by_name("epi_enh_x"), 1.0);
  EXPECT_EQ(g.by_name("rel_enh_z"), 1.0 - 2.5);

  EXPECT_THROW(assemble_handcrafted(s, edema, Mask::empty(d), atlas), ArgumentError);
}

TEST(Handcrafted, TranslationMovesOnlyLocation) {
  const Dims d{20, 20, 20};
  const Mask brain = full_mask(d);
  const auto atlas = index_atlas(d);
  const SubjectRecord s{"S", 50.0, Resection::kGTR, std::nullopt};
  const auto a = assemble_handcrafted(s, layered(d, {2, 2, 2}, 2), brain, atlas);
  const auto b = assemble_handcrafted(s, layered(d, {5, 4, 3}, 2), brain, atlas);
  for (std::size_t i = slot::kVolumes; i < slot::kEpiWhole; ++i) EXPECT_EQ(a[i], b[i]) << kHandcraftedNames[i];
  const double shift[] = {3, 2, 1};
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_DOUBLE_EQ(b[slot::kEpiWhole + k] - a[slot::kEpiWhole + k], shift[k]);
    EXPECT_DOUBLE_EQ(b[slot::kRelEnh + k] - a[slot::kRelEnh + k], shift[k]);
  }
}

TEST(Handcrafted, ScalingByTwo) {
  const Dims d{24, 24, 24};
  const Mask brain = full_mask(d);
  const auto atlas = index_atlas(d);
  const SubjectRecord s{"S", 50.0, Resection::kGTR, std::nullopt};
  const auto a = assemble_handcrafted(s, layered(d, {1, 1, 1}, 2), brain, atlas);
  const auto b = assemble_handcrafted(s, layered(d, {1, 1, 1}, 4), brain, atlas);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_DOUBLE_EQ(b[slot::kVolumes + k], 8.0 * a[slot::kVolumes + k]);
    EXPECT_DOUBLE_EQ(b[slot::kSurfaces + k], 4.0 * a[slot::kSurfaces + k]);
    EXPECT_DOUBLE_EQ(b[slot::kSurfaceRatios + k], 0.5 * a[slot::kSurfaceRatios + k]);
  }
  for (std::size_t k = slot::kVolumes + 4; k < slot::kVolumes + 8; ++k) {
    EXPECT_DOUBLE_EQ(b[k], 8.0 * a[k]);
    EXPECT_LE(b[k], 1.0);
  }
  for (std::size_t k = slot::kVolumes + 8; k < slot::kSurfaces; ++k) EXPECT_DOUBLE_EQ(b[k], a[k]);
}
