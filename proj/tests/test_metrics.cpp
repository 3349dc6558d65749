#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hqann/dataio.hpp"
#include "hqann/metrics.hpp"

namespace hqann {
namespace {

using V = std::vector<std::int32_t>;
using F = std::vector<float>;

TEST(FeatureDistance, Examples) {
  F u{0.6f, 0.8f};
  EXPECT_NEAR(feature_distance(FeatureMetric::IP, u, u), 0.0, 1e-7);
  EXPECT_DOUBLE_EQ(feature_distance(FeatureMetric::IP, F{1, 0}, F{0, 1}), 1.0);
  EXPECT_DOUBLE_EQ(feature_distance(FeatureMetric::L2, F{0, 0}, F{3, 4}), 5.0);
  EXPECT_THROW(feature_distance(FeatureMetric::L2, F{0, 0}, F{3}), DimensionMismatch);
}

TEST(ManhattanDistance, Examples) {
  EXPECT_EQ(manhattan_distance(V{1, 3}, V{2, 5}), 3);
  EXPECT_EQ(manhattan_distance(V{7}, V{7}), 0);
  EXPECT_EQ(manhattan_distance(V{0, 0, 0}, V{1, 1, 1}), 3);
  EXPECT_THROW(manhattan_distance(V{1}, V{1, 2}), DimensionMismatch);
}

TEST(HammingDistance, Examples) {
  EXPECT_EQ(hamming_attribute_distance(V{1, 3}, V{2, 5}), 2);
  EXPECT_EQ(hamming_attribute_distance(V{1, 3}, V{1, 5}), 1);
  EXPECT_EQ(hamming_attribute_distance(V{4}, V{4}), 0);
  EXPECT_THROW(hamming_attribute_distance(V{1}, V{}), DimensionMismatch);
}

TEST(AttributeDistance, Examples) {
  FusionParams p;
  EXPECT_EQ(attribute_distance(p, V{5, 2}, V{5, 2}), 0.0);
  // e = 1 and e = 9 against bias 4.3219.
  const double e1 = attribute_distance(p, V{3}, V{4});
  const double e9 = attribute_distance(p, V{0}, V{9});
  EXPECT_NEAR(e1, 1.0, 1e-4);
  EXPECT_NEAR(e9, 3.3219, 1e-4);
  // Hand evaluation of bias - 1/lg(e + 1).
  EXPECT_NEAR(e1, 0.9999719051126381, 1e-6 * 0.9999719051126381);
  EXPECT_NEAR(e9, 3.3219000000000003, 1e-6 * 3.3219);
}

TEST(AttributeDistance, HammingVariantUsesSameWrapper) {
  auto p = make_fusion_params(0.25, 4.3219, 1.0, AttrMetric::Hamming);
  // Manhattan would give e = 7 here; Hamming gives 1.
  EXPECT_NEAR(attribute_distance(p, V{0, 5}, V{7, 5}), 4.3219 - 1.0 / std::log10(2.0), 1e-12);
  auto ignore = FusionParams::feature_only();
  EXPECT_EQ(attribute_distance(ignore, V{0, 5}, V{7, 5}), 0.0);
}

TEST(FusedDistance, Examples) {
  FusionParams p;
  // Same attributes, IP feature distance 0.4.
  const double same = fused_distance(p, FeatureMetric::IP, F{1, 0}, V{2},
                                     F{0.6f, 0.8f}, V{2});
  EXPECT_NEAR(same, 0.1, 1e-6 * 0.1);
  EXPECT_NEAR(fused_distance(p, FeatureMetric::IP, F{0.6f, 0.8f}, V{1, 2},
                             F{0.6f, 0.8f}, V{1, 2}),
              0.0, 1e-7);
  // e = 1, g = 1.
  const double mixed = fused_distance(p, FeatureMetric::IP, F{1, 0}, V{3},
                                      F{0, 1}, V{4});
  EXPECT_NEAR(mixed, 1.25, 1e-4);
  EXPECT_NEAR(mixed, 1.2499719051126381, 1e-6 * 1.25);
}

TEST(FusedDistance, DimensionChecks) {
  FusionParams p;
  EXPECT_THROW(fused_distance(p, FeatureMetric::IP, F{1, 0}, V{1}, F{1}, V{1}),
               DimensionMismatch);
  EXPECT_THROW(fused_distance(p, FeatureMetric::IP, F{1, 0}, V{1}, F{1, 0}, V{1, 1}),
               DimensionMismatch);
}

TEST(AttributeDistanceProperty, MonotoneInMapping) {
  FusionParams p;
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::int32_t> val(-5000, 5000);
  for (int i = 0; i < 100000; ++i) {
    V ref{val(rng), val(rng)};
    V a{val(rng), val(rng)}, b{val(rng), val(rng)};
    auto ea = manhattan_distance(ref, a), eb = manhattan_distance(ref, b);
    if (ea == 0 || eb == 0 || ea == eb) continue;
    double fa = attribute_distance(p, ref, a), fb = attribute_distance(p, ref, b);
    if (ea < eb) {
      ASSERT_LT(fa, fb) << ea << " vs " << eb;
    } else {
      ASSERT_GT(fa, fb) << ea << " vs " << eb;
    }
  }
}

TEST(AttributeDistanceProperty, SymmetricAndBounded) {
  FusionParams p;
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<std::int32_t> val(0, 50);
  std::normal_distribution<float> normal;
  const double lo = p.bias() - 1.0 / std::log10(2.0);
  for (int i = 0; i < 100000; ++i) {
    V a{val(rng), val(rng), val(rng)}, b{val(rng), val(rng), val(rng)};
    double ab = attribute_distance(p, a, b);
    ASSERT_EQ(ab, attribute_distance(p, b, a));
    if (a != b) {
      ASSERT_GE(ab, lo - 1e-12);
      ASSERT_LT(ab, p.bias());
    } else {
      ASSERT_EQ(ab, 0.0);
    }
    F x{normal(rng), normal(rng), normal(rng)}, y{normal(rng), normal(rng), normal(rng)};
    ASSERT_EQ(fused_distance(p, FeatureMetric::L2, x, a, y, b),
              fused_distance(p, FeatureMetric::L2, y, b, x, a));
  }
}

TEST(HammingCollapse, WitnessExists) {
  // Two different vectors at equal Hamming distance from a reference but at
  // different Manhattan distances: xor mapping cannot tell them apart.
  V ref{0, 0, 0};
  V near{1, 0, 0};
  V far{9, 0, 0};
  ASSERT_NE(near, far);
  EXPECT_EQ(hamming_attribute_distance(near, ref), hamming_attribute_distance(far, ref));
  EXPECT_NE(manhattan_distance(near, ref), manhattan_distance(far, ref));
  auto ham = make_fusion_params(0.25, 4.3219, 1.0, AttrMetric::Hamming);
  FusionParams man;
  EXPECT_EQ(attribute_distance(ham, near, ref), attribute_distance(ham, far, ref));
  EXPECT_LT(attribute_distance(man, near, ref), attribute_distance(man, far, ref));
}

TEST(Dominance, MatchedPointsRankFirstOnSmallRandomSets) {
  FusionParams p;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto ds = generate_synthetic({200, 8, 5, 1, seed, true});
    auto q = generate_queries({200, 8, 5, 1, seed, true}, 10);
    for (std::size_t qi = 0; qi < q.size(); ++qi) {
      double worst_match = -1.0, best_mismatch = 1e300;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        double d = fused_distance(p, FeatureMetric::IP, q.feature(qi), q.attrs(qi),
                                  ds.feature(i), ds.attrs(i));
        if (q.attrs(qi)[0] == ds.attrs(i)[0])
          worst_match = std::max(worst_match, d);
        else
          best_mismatch = std::min(best_mismatch, d);
      }
      if (worst_match >= 0.0) {
        EXPECT_LT(worst_match, best_mismatch);
      }
    }
  }
}

}  // namespace
}  // namespace hqann
