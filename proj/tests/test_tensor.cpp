#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "daattack/tensor.hpp"
#include "oracles.hpp"

using daa::RngStream;
using daa::Tensor;

namespace {

Tensor vec(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor({n}, std::move(v));
}

}  // namespace

TEST(Tensor, ConstructionChecksShape) {
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), daa::StructuralError);
  Tensor t({2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(daa::shape_size({2, 3, 4}), 24u);
}

TEST(Tensor, ElementwiseOpsRequireSameShape) {
  Tensor a({2}), b({3});
  EXPECT_THROW(a += b, daa::StructuralError);
  EXPECT_THROW(daa::dot(a, b), daa::StructuralError);
}

TEST(Sign, DefinitionWithZero) {
  EXPECT_EQ(daa::sign(vec({-2.0, 0.0, 3.0})).values(), (std::vector<double>{-1.0, 0.0, 1.0}));
  EXPECT_EQ(daa::sign(Tensor({4})).values(), std::vector<double>(4, 0.0));
}

TEST(Sign, IdempotentOddAndBounded) {
  RngStream rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor t = oracle::random_tensor({17}, rng, -1, 1);
    t[3] = 0.0;
    const Tensor s = daa::sign(t);
    EXPECT_EQ(daa::sign(s), s);
    EXPECT_EQ(daa::sign(t * -1.0), s * -1.0);
    EXPECT_LE(daa::max_abs(s), 1.0);
    std::size_t nonzero = 0;
    for (double v : t.data()) nonzero += v != 0.0;
    EXPECT_EQ(daa::l1_norm(s), static_cast<double>(nonzero));
    EXPECT_GT(daa::l1_norm(t), 0.0);
  }
}

TEST(Clip, BallAndRangeExamples) {
  EXPECT_DOUBLE_EQ(daa::clip_ball_and_range(vec({0.9}), vec({0.5}), 0.3)[0], 0.8);
  EXPECT_DOUBLE_EQ(daa::clip_ball_and_range(vec({1.3}), vec({0.9}), 0.5)[0], 1.0);
  const Tensor x = vec({0.1, 0.4, 0.99});
  EXPECT_EQ(daa::clip_ball_and_range(x, x, 0.2), x);
}

TEST(Clip, ShapeMismatchIsStructural) {
  EXPECT_THROW(daa::clip_ball_and_range(Tensor({2}), Tensor({3}), 0.1), daa::StructuralError);
}

TEST(Clip, ProjectionPropertiesAgainstOracle) {
  RngStream rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const Tensor x = oracle::random_tensor({9}, rng);
    const Tensor xs = oracle::random_tensor({9}, rng, -0.5, 1.5);
    const double eps = rng.uniform(0.0, 0.3);
    const Tensor o = daa::clip_ball_and_range(xs, x, eps);
    EXPECT_EQ(daa::clip_ball_and_range(o, x, eps), o);  // idempotent
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_EQ(o[i], oracle::clip(xs[i], x[i], eps, 0.0, 1.0));
      EXPECT_LE(std::abs(o[i] - x[i]), eps + 1e-15);
      EXPECT_GE(o[i], 0.0);
      EXPECT_LE(o[i], 1.0);
      // nearest feasible point: any feasible value is at least as far from xs
      const double a = std::max(x[i] - eps, 0.0), b = std::min(x[i] + eps, 1.0);
      for (double f : {a, b, 0.5 * (a + b)}) EXPECT_LE(std::abs(o[i] - xs[i]), std::abs(f - xs[i]) + 1e-15);
    }
  }
}

TEST(Noise, ZeroSigmaIsExactZeroAndConsumesNothing) {
  RngStream a(3), b(3);
  EXPECT_EQ(daa::sample_noise({4, 4}, daa::NoiseSpec::gaussian(0.0), a), Tensor({4, 4}));
  EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Noise, GaussianMomentsLawOfLargeNumbers) {
  RngStream rng(4);
  const std::size_t n = 100000;
  const double sigma = 0.05;
  const Tensor t = daa::sample_noise({n}, daa::NoiseSpec::gaussian(sigma), rng);
  const double mean = daa::sum(t) / n;
  double var = 0.0;
  for (double v : t.data()) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / (n - 1));
  EXPECT_LT(std::abs(mean), 3 * sigma / std::sqrt(static_cast<double>(n)));
  EXPECT_LT(std::abs(sd - sigma) / sigma, 0.02);
}

TEST(Noise, UniformStaysInBounds) {
  RngStream rng(5);
  const Tensor t = daa::sample_noise({100000}, daa::NoiseSpec::uniform(-0.08, 0.08), rng);
  EXPECT_GE(*std::min_element(t.data().begin(), t.data().end()), -0.08);
  EXPECT_LE(*std::max_element(t.data().begin(), t.data().end()), 0.08);
  EXPECT_LT(std::abs(daa::sum(t) / 100000), 3 * 0.16 / std::sqrt(12.0) / std::sqrt(100000.0));
}

TEST(Conv, DeltaKernelIsIdentity) {
  RngStream rng(6);
  const Tensor t = oracle::random_tensor({2, 5, 5}, rng);
  Tensor k({3, 3});
  k[4] = 1.0;
  EXPECT_EQ(daa::conv2d_same(t, k), t);
}

TEST(Conv, AveragingConstantImageInterior) {
  const Tensor t({1, 6, 6}, 0.7);
  const Tensor k({3, 3}, 1.0 / 9.0);
  const Tensor o = daa::conv2d_same(t, k);
  for (std::size_t h = 1; h < 5; ++h)
    for (std::size_t w = 1; w < 5; ++w) EXPECT_NEAR(o.at(0, h, w), 0.7, 1e-15);
}

TEST(Conv, MatchesBruteForceOracle) {
  RngStream rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor t = oracle::random_tensor({1, 5, 5}, rng, -1, 1);
    const Tensor k = oracle::random_tensor({3, 3}, rng, -1, 1);
    const Tensor a = daa::conv2d_same(t, k), b = oracle::conv_same(t, k);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(Conv, Linear) {
  RngStream rng(8);
  const Tensor u = oracle::random_tensor({2, 6, 7}, rng), v = oracle::random_tensor({2, 6, 7}, rng);
  const Tensor k = oracle::random_tensor({5, 5}, rng);
  const double a = 0.3, b = -1.7;
  const Tensor lhs = daa::conv2d_same(u * a + v * b, k);
  const Tensor rhs = daa::conv2d_same(u, k) * a + daa::conv2d_same(v, k) * b;
  for (std::size_t i = 0; i < lhs.size(); ++i) EXPECT_NEAR(lhs[i], rhs[i], 1e-10);
}

TEST(Conv, EvenOrOversizedKernelIsConfigError) {
  EXPECT_THROW(daa::conv2d_same(Tensor({1, 4, 4}), Tensor({2, 2})), daa::ConfigError);
  EXPECT_THROW(daa::conv2d_same(Tensor({1, 4, 4}), Tensor({5, 5})), daa::ConfigError);
}

TEST(Plumbing, MatmulSoftmaxReductionsAgainstLoops) {
  RngStream rng(9);
  const Tensor a = oracle::random_tensor({3, 4}, rng, -1, 1), b = oracle::random_tensor({4, 2}, rng, -1, 1);
  const Tensor c = daa::matmul(a, b);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < 4; ++k) s += a[i * 4 + k] * b[k * 2 + j];
      EXPECT_NEAR(c[i * 2 + j], s, 1e-14);
    }
  const Tensor z = vec({1.0, 2.0, 3.0});
  const Tensor p = daa::softmax(z);
  const double den = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p[i], std::exp(z[i]) / den, 1e-15);
  EXPECT_NEAR(daa::sum(p), 1.0, 1e-12);
  const Tensor m = vec({-3.0, 2.0, 0.5});
  EXPECT_EQ(daa::sum(m), -0.5);
  EXPECT_EQ(daa::max(m), 2.0);
  EXPECT_EQ(daa::l1_norm(m), 5.5);
  EXPECT_EQ(daa::argmax(m.data()), 1u);
  EXPECT_EQ(daa::hadamard(m, m).values(), (std::vector<double>{9.0, 4.0, 0.25}));
}

TEST(Plumbing, ResizeNearestAndPad) {
  Tensor t({1, 4, 4});
  for (std::size_t i = 0; i < 16; ++i) t[i] = static_cast<double>(i);
  const Tensor r = daa::resize_nearest(t, 2, 2);
  EXPECT_EQ(r.values(), (std::vector<double>{0, 2, 8, 10}));
  const Tensor p = daa::pad_at(r, 4, 4, 1, 2);
  EXPECT_EQ(p.at(0, 1, 2), 0.0);
  EXPECT_EQ(p.at(0, 1, 3), 2.0);
  EXPECT_EQ(p.at(0, 2, 2), 8.0);
  EXPECT_EQ(p.at(0, 2, 3), 10.0);
  EXPECT_EQ(daa::sum(p), 20.0);
  EXPECT_EQ(daa::resize_nearest(t, 4, 4), t);
}

TEST(Plumbing, CosineZeroIsUndefined) {
  EXPECT_FALSE(daa::cosine(Tensor({3}), vec({1, 2, 3})).has_value());
  EXPECT_NEAR(*daa::cosine(vec({1, 2, 3}), vec({-2, -4, -6})), -1.0, 1e-15);
}

TEST(Rng, SameSeedAndIndexReplay) {
  RngStream a(42, 3), b(42, 3), c(42, 4);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs |= x != c.next_u64();
  }
  EXPECT_TRUE(differs);
  const RngStream parent(9);
  RngStream c1 = parent.child(1), c1b = parent.child(1);
  EXPECT_EQ(c1.next_u64(), c1b.next_u64());
}

TEST(Rng, ChildStreamsLookIndependent) {
  // Correlation between two sibling streams should be at the 1/sqrt(n) noise level.
  const RngStream parent(10);
  RngStream a = parent.child(0), b = parent.child(1);
  const int n = 50000;
  double sab = 0, sa = 0, sb = 0, saa = 0, sbb = 0;
  for (int i = 0; i < n; ++i) {
    const double x = a.uniform(), y = b.uniform();
    sab += x * y, sa += x, sb += y, saa += x * x, sbb += y * y;
  }
  const double cov = sab / n - (sa / n) * (sb / n);
  const double corr = cov / std::sqrt((saa / n - sa * sa / n / n) * (sbb / n - sb * sb / n / n));
  EXPECT_LT(std::abs(corr), 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST(Rng, UniformIntCoversRangeUnbiased) {
  RngStream rng(11);
  std::vector<int> counts(5);
  for (int i = 0; i < 50000; ++i) ++counts[rng.uniform_int(0, 4)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 400);
  EXPECT_THROW(rng.uniform_int(3, 2), daa::ArgumentError);
}

TEST(Rng, LabeledSeedsDiffer) {
  EXPECT_NE(daa::labeled_seed(1, "train"), daa::labeled_seed(1, "attack"));
  EXPECT_NE(daa::labeled_seed(1, "train"), daa::labeled_seed(2, "train"));
  EXPECT_EQ(daa::labeled_seed(1, "train"), daa::labeled_seed(1, "train"));
  EXPECT_EQ(daa::fnv1a(""), 0xCBF29CE484222325ULL);
  EXPECT_EQ(daa::fnv1a("a"), 0xAF63DC4C8601EC8CULL);
}
