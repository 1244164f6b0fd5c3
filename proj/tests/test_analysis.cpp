#include <gtest/gtest.h>

#include <cmath>

#include "daattack/analysis.hpp"
#include "oracles.hpp"

using daa::AdversarialSet;
using daa::Classifier;
using daa::RngStream;
using daa::Tensor;

namespace {

Tensor scalar(double v) { return Tensor({1}, {v}); }

// Predicts class 1 iff x > 0.5.
Classifier threshold() {
  return Classifier({{1}, {daa::LayerSpec::dense(1, 2)}}, {{Tensor({2, 1}, {-1.0, 1.0}), Tensor({2}, {0.5, -0.5})}});
}

AdversarialSet set_of(const std::vector<double>& xstar, const std::vector<std::size_t>& labels) {
  AdversarialSet s{"src", "atk", {}};
  for (std::size_t i = 0; i < xstar.size(); ++i) s.items.push_back({scalar(xstar[i]), scalar(0.5), labels[i], 10 + i});
  return s;
}

}  // namespace

TEST(SuccessRate, ThreeOfFourIsSeventyFive) {
  const Classifier m = threshold();
  // Predictions: 0, 1, 1, 0 against labels 1, 0, 0, 0.
  const AdversarialSet s = set_of({0.1, 0.9, 0.8, 0.2}, {1, 0, 0, 0});
  EXPECT_EQ(daa::success_rate(m, s), 75.0);
}

TEST(SuccessRate, UnperturbedCorrectSetIsZero) {
  const Classifier m = threshold();
  EXPECT_EQ(daa::success_rate(m, set_of({0.1, 0.9, 0.3}, {0, 1, 0})), 0.0);
}

TEST(SuccessRate, MatchesLoopOracleAndBounds) {
  const Classifier m = threshold();
  RngStream rng(1);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> xs;
    std::vector<std::size_t> ys;
    const std::size_t M = 1 + rng.uniform_int(0, 40);
    for (std::size_t i = 0; i < M; ++i) xs.push_back(rng.uniform()), ys.push_back(rng.uniform_int(0, 1));
    std::size_t fooled = 0;
    for (std::size_t i = 0; i < M; ++i) fooled += (xs[i] > 0.5 ? 1u : 0u) != ys[i];
    const double sr = daa::success_rate(m, set_of(xs, ys));
    EXPECT_DOUBLE_EQ(sr, 100.0 * static_cast<double>(fooled) / static_cast<double>(M));
    EXPECT_GE(sr, 0.0);
    EXPECT_LE(sr, 100.0);
  }
}

TEST(SuccessRate, EmptySetIsArgumentError) {
  EXPECT_THROW(daa::success_rate(threshold(), AdversarialSet{}), daa::ArgumentError);
}

TEST(Ratio, MatchesSetOracle) {
  RngStream rng(2);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::set<std::size_t>> normal(1 + rng.uniform_int(0, 3));
    std::set<std::size_t> robust;
    for (auto& s : normal)
      for (std::size_t i = 0; i < 20; ++i)
        if (rng.uniform() < 0.3) s.insert(i);
    for (std::size_t i = 0; i < 20; ++i)
      if (rng.uniform() < 0.5) robust.insert(i);
    bool defined = false;
    const double ref = oracle::ratio(normal, robust, defined);
    const auto r = daa::ratio_metric(normal, robust);
    ASSERT_EQ(r.has_value(), defined);
    if (r) {
      EXPECT_DOUBLE_EQ(*r, ref);
      EXPECT_GE(*r, 0.0);
      EXPECT_LE(*r, 1.0);
    }
  }
}

TEST(Ratio, ContainmentDisjointAndEmpty) {
  EXPECT_EQ(daa::ratio_metric({{1, 2}, {2, 3}}, {0, 1, 2, 3, 4}), 1.0);
  EXPECT_EQ(daa::ratio_metric({{1, 2}, {3}}, {4, 5}), 0.0);
  EXPECT_EQ(daa::ratio_metric({{1, 2}, {3, 4}}, {1, 3}), 0.5);
  EXPECT_FALSE(daa::ratio_metric({{}, {}}, {1, 2}).has_value());
  EXPECT_FALSE(daa::ratio_metric({}, {}).has_value());
}

TEST(Ratio, SurvivingSetUsesPositions) {
  const Classifier m = threshold();
  const AdversarialSet s = set_of({0.1, 0.9, 0.8}, {0, 1, 0});
  EXPECT_EQ(daa::surviving_set(m, s), (std::set<std::size_t>{10, 11}));
}

namespace {

AdversarialSet deltas(const std::string& source, const std::vector<std::vector<double>>& ds) {
  AdversarialSet s{source, "atk", {}};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::size_t n = ds[i].size();
    Tensor x({n}, 0.5);
    Tensor xs = x;
    for (std::size_t k = 0; k < n; ++k) xs[k] += ds[i][k];
    s.items.push_back({xs, x, 0, i});
  }
  return s;
}

}  // namespace

TEST(Cosine, IdenticalAndAntipodal) {
  const auto a = deltas("a", {{0.1, -0.2, 0.05}, {0.02, 0.03, 0.0}});
  const auto b = deltas("b", {{-0.1, 0.2, -0.05}, {-0.02, -0.03, 0.0}});
  const auto cm = daa::perturbation_cosine({&a, &a, &b});
  EXPECT_NEAR(cm.mean[0][1], 1.0, 1e-12);
  EXPECT_NEAR(cm.mean[0][2], -1.0, 1e-12);
  EXPECT_EQ(cm.sources, (std::vector<std::string>{"a", "a", "b"}));
}

TEST(Cosine, ThreeDimensionalFormula) {
  const auto a = deltas("a", {{0.1, 0.0, 0.1}});
  const auto b = deltas("b", {{0.1, 0.1, 0.0}});
  const auto cm = daa::perturbation_cosine({&a, &b});
  EXPECT_NEAR(cm.mean[0][1], 0.5, 1e-12);  // (0.01) / (sqrt(0.02) * sqrt(0.02))
}

TEST(Cosine, SymmetricUnitDiagonalBoundedAndSkipsZeros) {
  RngStream rng(3);
  std::vector<AdversarialSet> sets;
  for (int s = 0; s < 4; ++s) {
    std::vector<std::vector<double>> ds;
    for (int i = 0; i < 15; ++i) {
      std::vector<double> d(6);
      if (!(s == 1 && i == 4))
        for (double& v : d) v = rng.uniform(-0.05, 0.05);
      ds.push_back(d);
    }
    sets.push_back(deltas(std::to_string(s), ds));
  }
  std::vector<const AdversarialSet*> ptrs;
  for (const auto& s : sets) ptrs.push_back(&s);
  const auto cm = daa::perturbation_cosine(ptrs);
  for (std::size_t a = 0; a < 4; ++a) {
    EXPECT_EQ(cm.mean[a][a], 1.0);
    for (std::size_t b = 0; b < 4; ++b) {
      EXPECT_EQ(cm.mean[a][b], cm.mean[b][a]);
      EXPECT_LE(std::abs(cm.mean[a][b]), 1.0);
      if (a != b) {
        EXPECT_EQ(cm.skipped[a][b], (a == 1 || b == 1) ? 1u : 0u);
      }
    }
  }
  // Oracle for one pair, recomputed straight from the deltas.
  double total = 0.0;
  for (std::size_t i = 0; i < 15; ++i) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t k = 0; k < 6; ++k) {
      const double u = sets[0].items[i].x_star[k] - 0.5, v = sets[2].items[i].x_star[k] - 0.5;
      ab += u * v, aa += u * u, bb += v * v;
    }
    total += ab / std::sqrt(aa * bb);
  }
  EXPECT_NEAR(cm.mean[0][2], total / 15.0, 1e-12);
}

TEST(Cosine, MaskAndAlignmentChecks) {
  const auto a = deltas("a", {{0.1, 0.0}, {0.1, 0.1}});
  const auto b = deltas("b", {{0.0, 0.1}, {0.1, 0.1}});
  const std::vector<char> only_second{0, 1};
  EXPECT_NEAR(daa::perturbation_cosine({&a, &b}, &only_second).mean[0][1], 1.0, 1e-12);
  EXPECT_NEAR(daa::perturbation_cosine({&a, &b}).mean[0][1], 0.5, 1e-12);
  const auto c = deltas("c", {{0.1, 0.0}});
  EXPECT_THROW(daa::perturbation_cosine({&a, &c}), daa::StructuralError);
}

namespace {

struct SweepFixture {
  RngStream rng{4};
  Classifier src = oracle::random_model(rng, true);
  Classifier tgt = oracle::random_model(rng, true);
  daa::EvalSet eval;

  SweepFixture() {
    for (std::size_t i = 0; i < 6; ++i) {
      eval.xs.push_back(oracle::random_tensor(src.input_shape(), rng));
      eval.labels.push_back(i % 3);
      eval.positions.push_back(i);
    }
  }
  std::vector<daa::SweepSource> sources() const { return {{"s", &src, {"s"}}}; }
  std::vector<daa::NamedModel> targets() const { return {{"s", &src, false}, {"t", &tgt, false}}; }
};

}  // namespace

TEST(Sweep, SinglePointMatchesDirectEvaluation) {
  SweepFixture f;
  daa::AttackParams p;
  p.samples = 3;
  p.seed = 7;
  const auto base = daa::make_attack(daa::Preset::da_mi_fgsm, p);
  const auto curve = daa::sweep(daa::SweepParam::samples, {3}, base, "da-mi-fgsm", f.sources(), f.targets(), f.eval);
  ASSERT_EQ(curve.points.size(), 1u);
  const auto set = daa::generate_adversarial_set(&f.src, f.eval, base, "s", "da-mi-fgsm");
  EXPECT_EQ(curve.points[0].rows, daa::evaluate_transfer(set, f.targets(), {"s"}, 7));
  EXPECT_TRUE(curve.points[0].rows[0].white_box);
  EXPECT_FALSE(curve.points[0].rows[1].white_box);
}

TEST(Sweep, ZeroSigmaPointEqualsBaselineWithZeroNoise) {
  SweepFixture f;
  daa::AttackParams p;
  p.samples = 2;
  const auto base = daa::make_attack(daa::Preset::da_mi_fgsm, p);
  auto zero = base;
  zero.noise = daa::NoiseSpec::gaussian(0.0);
  const auto curve = daa::sweep(daa::SweepParam::sigma, {0.0}, base, "x", f.sources(), f.targets(), f.eval);
  const auto set = daa::generate_adversarial_set(&f.src, f.eval, zero, "s", "x");
  EXPECT_EQ(curve.points[0].rows, daa::evaluate_transfer(set, f.targets(), {"s"}, 0));
}

TEST(Sweep, CurveIsDeterministicAndKeyedByGrid) {
  SweepFixture f;
  daa::AttackParams p;
  p.iters = 3;
  const auto base = daa::make_attack(daa::Preset::da_mi_fgsm, p);
  const std::vector<double> grid{1, 2, 4};
  const auto a = daa::sweep(daa::SweepParam::samples, grid, base, "x", f.sources(), f.targets(), f.eval, 1);
  const auto b = daa::sweep(daa::SweepParam::samples, grid, base, "x", f.sources(), f.targets(), f.eval, 3);
  ASSERT_EQ(a.points.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.points[i].value, grid[i]);
    EXPECT_EQ(a.points[i].rows, b.points[i].rows);
  }
  EXPECT_EQ(a.series("s", "t").size(), 3u);
  EXPECT_THROW(daa::sweep(daa::SweepParam::samples, {}, base, "x", f.sources(), f.targets(), f.eval),
               daa::ConfigError);
}

TEST(Sweep, WithParamKeepsExplicitAlpha) {
  daa::AttackParams p;
  const auto derived = daa::with_param(daa::make_attack(daa::Preset::mi_fgsm, p), daa::SweepParam::epsilon, 8.0 / 255);
  EXPECT_EQ(derived.step_size(), 8.0 / 255 / 12.0);
  p.alpha = 0.003;
  const auto fixed = daa::with_param(daa::make_attack(daa::Preset::mi_fgsm, p), daa::SweepParam::epsilon, 8.0 / 255);
  EXPECT_EQ(fixed.step_size(), 0.003);
  EXPECT_EQ(daa::with_param(fixed, daa::SweepParam::iters, 5).step_size(), 0.003);
  EXPECT_THROW(daa::with_param(fixed, daa::SweepParam::samples, 0), daa::ConfigError);
  EXPECT_EQ(daa::parse_sweep_param("N"), daa::SweepParam::samples);
  EXPECT_THROW(daa::parse_sweep_param("gamma"), daa::ConfigError);
}
