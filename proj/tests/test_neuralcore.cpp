#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bratsos/neuralcore.hpp"

using namespace bratsos;
using namespace bratsos::nn;

namespace {

struct Fixture {
  MiniBatch batch;
  Centroids cents;
  SoftmaxHead head{2, 2};
  LossParams params;
};

// Two classes, d = 2; one labeled item and one unlabeled item.
Fixture small_fixture() {
  Fixture f;
  f.batch.add_labeled({1.0, 0.5}, 0);
  f.batch.add_unlabeled({-0.3, 0.8});
  f.cents.c = {{0.5, 0.0}, {-1.0, 1.0}};
  f.head.weight = {0.4, -0.2, 0.1, 0.3};
  f.head.bias = {0.05, -0.1};
  return f;
}

Fixture random_fixture(std::uint64_t seed, std::size_t n_classes, std::size_t dim, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Fixture f;
  f.params.n_classes = n_classes;
  f.head = SoftmaxHead(n_classes, dim);
  for (auto& w : f.head.weight) w = 0.5 * g(rng);
  for (auto& b : f.head.bias) b = 0.1 * g(rng);
  f.cents = Centroids::zeros(n_classes, dim);
  for (auto& c : f.cents.c)
    for (auto& v : c) v = g(rng);
  for (std::size_t i = 0; i < n; ++i) {
    Vec z(dim);
    for (auto& v : z) v = g(rng);
    if (i % 2 == 0) f.batch.add_labeled(z, rng() % n_classes);
    else f.batch.add_unlabeled(z);
  }
  return f;
}

}  // namespace

TEST(CoordChannels, NormalizedIndices) {
  const auto c = coord_channels({3, 2, 5});
  ASSERT_EQ(c.channels(), 3u);
  EXPECT_EQ(c(0, 2, 0, 0), 1.0);
  EXPECT_EQ(c(0, 1, 1, 4), 0.5);
  EXPECT_EQ(c(1, 0, 1, 0), 1.0);
  EXPECT_EQ(c(2, 0, 0, 1), 0.25);
  const auto flat = coord_channels({1, 1, 3});
  EXPECT_EQ(flat(0, 0, 0, 2), 0.0);
  EXPECT_EQ(flat(1, 0, 0, 2), 0.0);
  EXPECT_EQ(flat(2, 0, 0, 2), 1.0);
}

TEST(Pecl, SelectorKernelReproducesCoordinates) {
  const Shape3 s{3, 4, 5};
  const FeatureMap3D input(1, s);
  ConvKernel3D k(3, 4, {1, 1, 1});
  for (std::size_t a = 0; a < 3; ++a) k.w(a, 1 + a, 0, 0, 0) = 1.0;
  const auto out = pecl_forward(input, k);
  EXPECT_EQ(out, coord_channels(s));
}

TEST(Pecl, ZeroCoordinateWeightsReduceToPlainConvolution) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  const Shape3 s{3, 3, 4};
  FeatureMap3D input(2, s);
  for (auto& v : input.data()) v = u(rng);
  ConvKernel3D plain(2, 2, {3, 3, 3}), pecl(2, 5, {3, 3, 3});
  for (std::size_t o = 0; o < 2; ++o) {
    plain.bias()[o] = pecl.bias()[o] = u(rng);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b)
          for (std::size_t c = 0; c < 3; ++c) plain.w(o, i, a, b, c) = pecl.w(o, i, a, b, c) = u(rng);
  }
  EXPECT_EQ(pecl_forward(input, pecl), conv3d_same(input, plain));
}

TEST(Pecl, ZeroInputStillSeesPosition) {
  const Shape3 s{2, 2, 3};
  ConvKernel3D k(1, 4, {3, 3, 3});
  for (auto& w : k.weights()) w = 1.0;
  const auto out = pecl_forward(FeatureMap3D(1, s), k);
  EXPECT_NE(out(0, 0, 0, 0), out(0, 1, 1, 2));
  EXPECT_THROW(pecl_forward(FeatureMap3D(2, s), k), ArgumentError);
  EXPECT_THROW(ConvKernel3D(1, 1, {2, 1, 1}), ArgumentError);
}

TEST(Conv3d, SamePaddingBoxSum) {
  const Shape3 s{1, 1, 3};
  const FeatureMap3D in(1, s, {1.0, 2.0, 3.0});
  ConvKernel3D k(1, 1, {1, 1, 3});
  k.w(0, 0, 0, 0, 0) = 1.0;
  k.w(0, 0, 0, 0, 1) = 10.0;
  k.w(0, 0, 0, 0, 2) = 100.0;
  // cross-correlation: out[w] = in[w-1] + 10 in[w] + 100 in[w+1]
  EXPECT_EQ(conv3d_same(in, k).data(), (Vec{210.0, 321.0, 32.0}));
}

TEST(Softmax, Cases) {
  const Vec p = softmax(Vec{std::log(3.0), 0.0});
  EXPECT_NEAR(p[0], 0.75, 1e-15);
  EXPECT_NEAR(p[1], 0.25, 1e-15);
  const Vec u = softmax(Vec{2.0, 2.0, 2.0, 2.0});
  for (double v : u) EXPECT_DOUBLE_EQ(v, 0.25);
  const Vec big = softmax(Vec{1000.0, 0.0});
  EXPECT_EQ(big[0], 1.0);
  EXPECT_TRUE(std::isfinite(big[1]));
  SoftmaxHead h(2, 1);
  EXPECT_THROW(softmax_head(Vec{std::nan("")}, h), ArgumentError);
  EXPECT_THROW(softmax_head(Vec{1.0, 2.0}, h), ArgumentError);
}

TEST(SemisupLoss, MatchesHandComputedFixture) {
  const auto f = small_fixture();
  const auto t = semisup_loss_terms(f.batch, f.cents, f.head, f.params);
  EXPECT_NEAR(t.center_ratio, 0.08574929257125442, 1e-12);
  EXPECT_NEAR(t.cross_entropy, 0.2990694346907959, 1e-12);
  EXPECT_NEAR(t.entropy, 0.03394516668283951, 1e-12);
  EXPECT_NEAR(semisup_loss(f.batch, f.cents, f.head, f.params), 0.41876389394488983, 1e-12);
}

TEST(SemisupLoss, UnlabeledOnlyWithoutEntropyWeightIsZero) {
  auto f = small_fixture();
  MiniBatch b;
  b.add_unlabeled({0.2, 0.1});
  b.add_unlabeled({-1.0, 3.0});
  f.params.gamma = 0.0;
  EXPECT_EQ(semisup_loss(b, f.cents, f.head, f.params), 0.0);
  for (const auto& g : semisup_loss_grad(b, f.cents, f.head, f.params))
    for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(SemisupLoss, SaturatedHeadStaysFinite) {
  auto f = small_fixture();
  f.head.weight = {30.0, 0.0, -30.0, 0.0};
  f.head.bias = {0.0, 0.0};
  MiniBatch b;
  b.add_labeled({1.0, 0.0}, 1);  // logits (30, -30), wrong class
  b.add_unlabeled({1.0, 0.0});
  const double l = semisup_loss(b, f.cents, f.head, f.params);
  EXPECT_TRUE(std::isfinite(l));
  EXPECT_GT(l, 25.0);
  for (const auto& g : semisup_loss_grad(b, f.cents, f.head, f.params))
    for (double v : g) EXPECT_TRUE(std::isfinite(v));
}

TEST(SemisupLoss, RejectsBadInputs) {
  auto f = small_fixture();
  MiniBatch empty;
  EXPECT_THROW(semisup_loss(empty, f.cents, f.head, f.params), ArgumentError);
  MiniBatch bad;
  bad.add_labeled({0.0, 0.0}, 2);
  EXPECT_THROW(semisup_loss(bad, f.cents, f.head, f.params), ArgumentError);
  f.params.alpha = -1.0;
  EXPECT_THROW(semisup_loss(f.batch, f.cents, f.head, f.params), ArgumentError);
}

TEST(SemisupLoss, CenterTermIsScaleInvariant) {
  auto f = random_fixture(21, 3, 4, 6);
  f.params.beta = 0.0;
  f.params.gamma = 0.0;
  const double base = semisup_loss(f.batch, f.cents, f.head, f.params);
  for (double s : {0.1, 3.0, 250.0}) {
    auto g = f;
    for (auto& z : g.batch.z)
      for (auto& v : z) v *= s;
    for (auto& c : g.cents.c)
      for (auto& v : c) v *= s;
    EXPECT_NEAR(semisup_loss(g.batch, g.cents, g.head, g.params), base, 1e-9);
  }
}

TEST(Entropy, Bounds) {
  EXPECT_EQ(entropy(Vec{1.0, 0.0, 0.0}), 0.0);
  EXPECT_NEAR(entropy(Vec{0.25, 0.25, 0.25, 0.25}), std::log(4.0), 1e-15);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  for (int t = 0; t < 100; ++t) {
    const Vec p = softmax(Vec{3 * g(rng), 3 * g(rng), 3 * g(rng)});
    EXPECT_GE(entropy(p), 0.0);
    EXPECT_LE(entropy(p), std::log(3.0) + 1e-15);
  }
}

TEST(GradCheck, QuadraticIsExact) {
  const Vec x{0.3, -1.2, 2.5};
  auto f = [](const Vec& v) { return v[0] * v[0] + v[1] * v[1] + v[2] * v[2]; };
  const auto r = check_gradient(f, x, {0.6, -2.4, 5.0});
  EXPECT_TRUE(r.ok);
  EXPECT_LT(r.max_relative_error, 1e-8);
  EXPECT_GT(check_gradient(f, x, {0.6, -2.4, 5.1}).max_relative_error, 1e-3);
}

TEST(GradCheck, AnalyticGradientAtRandomPoints) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto f = random_fixture(seed, 3, 5, 6);
    const auto r = grad_check(f.batch, f.cents, f.head, f.params);
    EXPECT_TRUE(r.ok) << r.message;
    EXPECT_LT(r.max_relative_error, 1e-3) << "seed " << seed << " coordinate " << r.worst_coordinate;
  }
  const auto s = small_fixture();
  EXPECT_LT(grad_check(s.batch, s.cents, s.head, s.params).max_relative_error, 1e-3);
}

TEST(GradCheck, EntropyTermAlone) {
  auto f = random_fixture(77, 4, 3, 5);
  f.params.alpha = 0.0;
  f.params.beta = 0.0;
  f.params.gamma = 1.0;
  EXPECT_LT(grad_check(f.batch, f.cents, f.head, f.params).max_relative_error, 1e-4);
}

TEST(Centroids, UpdateCases) {
  Centroids c = Centroids::zeros(2, 2);
  MiniBatch b;
  b.add_labeled({1.0, 0.0}, 0);
  const auto one = update_centroids(c, b);
  EXPECT_DOUBLE_EQ(one.c[0][0], 0.25);
  EXPECT_EQ(one.c[0][1], 0.0);
  EXPECT_EQ(one.c[1], (Vec{0.0, 0.0}));
  EXPECT_EQ(one.iteration, 1u);

  b.add_labeled({3.0, 0.0}, 0);
  b.add_unlabeled({100.0, 100.0});
  // residual sum (0-1) + (0-3) = -4, denominator 3
  EXPECT_DOUBLE_EQ(update_centroids(c, b).c[0][0], 2.0 / 3.0);

  MiniBatch unlabeled;
  unlabeled.add_unlabeled({5.0, 5.0});
  EXPECT_EQ(update_centroids(c, unlabeled).c, c.c);
}

TEST(Centroids, RepeatedUpdatesContractTowardTheClassMean) {
  Centroids c{{{10.0, -4.0}, {0.0, 0.0}}, 0};
  MiniBatch b;
  b.add_labeled({1.0, 2.0}, 0);
  b.add_labeled({3.0, 0.0}, 0);
  double prev = euclidean_distance(c.c[0], Vec{2.0, 1.0});
  for (int it = 0; it < 30; ++it) {
    c = update_centroids(c, b);
    const double d = euclidean_distance(c.c[0], Vec{2.0, 1.0});
    EXPECT_LT(d, prev);
    prev = d;
  }
  EXPECT_LT(prev, 1e-3);
}
