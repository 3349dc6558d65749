#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "hqann/dataio.hpp"
#include "hqann/graph.hpp"
#include "hqann/strategies.hpp"

namespace hqann {
namespace {

namespace fs = std::filesystem;

std::shared_ptr<const HybridDataset> synthetic(std::size_t count, std::size_t C,
                                               std::uint64_t seed = 1,
                                               std::size_t m = 16) {
  return std::make_shared<const HybridDataset>(
      generate_synthetic({count, m, C, 1, seed, true}));
}

GraphParams small_params(std::size_t M = 8, std::size_t efc = 64) {
  GraphParams gp;
  gp.M = M;
  gp.ef_construction = efc;
  gp.seed = 3;
  return gp;
}

void expect_invariants(const CompositeGraph& g) {
  std::size_t top = 0;
  for (PointId v = 0; v < g.size(); ++v) top = std::max(top, g.level(v));
  ASSERT_EQ(g.max_level(), top);
  ASSERT_EQ(g.level(g.entry_point()), top);
  for (PointId v = 0; v < g.size(); ++v) {
    for (std::size_t l = 0; l <= g.level(v); ++l) {
      auto nb = g.neighbors(v, l);
      ASSERT_LE(nb.size(), g.params().max_degree(l));
      std::set<PointId> seen;
      for (PointId u : nb) {
        ASSERT_LT(u, g.size());
        ASSERT_NE(u, v);
        ASSERT_GE(g.level(u), l) << "link to a node absent from level " << l;
        ASSERT_TRUE(seen.insert(u).second) << "duplicate neighbor";
      }
    }
  }
}

fs::path temp_path(const std::string& name) {
  auto dir = fs::temp_directory_path() / "hqann_graph_test";
  fs::create_directories(dir);
  return dir / name;
}

TEST(GraphParams, Validation) {
  GraphParams gp;
  gp.M = 1;
  EXPECT_THROW(gp.validate(), InvalidArgument);
  gp.M = 16;
  gp.ef_construction = 8;
  EXPECT_THROW(gp.validate(), InvalidArgument);
  gp.ef_construction = 16;
  EXPECT_NO_THROW(gp.validate());
  EXPECT_NEAR(gp.effective_level_norm(), 1.0 / std::log(16.0), 1e-12);
}

TEST(GraphBuild, EmptyDatasetRejected) {
  auto ds = std::make_shared<const HybridDataset>();
  EXPECT_THROW(CompositeGraph::build(ds, FusionParams(), small_params()), EmptyDataset);
  EXPECT_THROW(CompositeGraph::build(nullptr, FusionParams(), small_params()),
               EmptyDataset);
}

TEST(GraphBuild, SinglePoint) {
  auto g = CompositeGraph::build(synthetic(1, 3), FusionParams(), small_params());
  EXPECT_EQ(g.entry_point(), 0u);
  for (std::size_t l = 0; l <= g.level(0); ++l) EXPECT_TRUE(g.neighbors(0, l).empty());
  auto hits = g.search({{g.dataset().feature(0).begin(), g.dataset().feature(0).end()},
                        {g.dataset().attrs(0)[0]}, 1, 1});
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].id, 0u);
}

TEST(GraphBuild, MatchedPairAreMutualNeighbors) {
  std::vector<HybridPoint> pts{{0, {1, 0}, {4}}, {1, {0, 1}, {4}}, {2, {1, 0}, {5}}};
  auto ds = std::make_shared<const HybridDataset>(
      HybridDataset::from_points(pts, {2, 1, FeatureMetric::IP}));
  FusionParams p;
  // Brute-force check that dominance makes 0 and 1 each other's nearest.
  auto d01 = fused_distance(p, FeatureMetric::IP, ds->feature(0), ds->attrs(0),
                            ds->feature(1), ds->attrs(1));
  auto d02 = fused_distance(p, FeatureMetric::IP, ds->feature(0), ds->attrs(0),
                            ds->feature(2), ds->attrs(2));
  auto d12 = fused_distance(p, FeatureMetric::IP, ds->feature(1), ds->attrs(1),
                            ds->feature(2), ds->attrs(2));
  ASSERT_LT(d01, d02);
  ASSERT_LT(d01, d12);

  auto g = CompositeGraph::build(ds, p, small_params(2, 4));
  auto n0 = g.neighbors(0, 0);
  auto n1 = g.neighbors(1, 0);
  EXPECT_NE(std::find(n0.begin(), n0.end(), 1u), n0.end());
  EXPECT_NE(std::find(n1.begin(), n1.end(), 0u), n1.end());
}

TEST(GraphBuild, InvariantsHoldAfterEveryInsertion) {
  // Levels are drawn in id order, so the graph over the first i points is the
  // state of the full build after i insertions.
  auto full = synthetic(80, 4, 9);
  for (std::size_t i = 1; i <= full->size(); ++i) {
    std::vector<float> f(full->features().begin(),
                         full->features().begin() + i * full->dim());
    std::vector<std::int32_t> a(full->all_attrs().begin(),
                                full->all_attrs().begin() + i);
    auto prefix = std::make_shared<const HybridDataset>(full->shape(), f, a);
    auto g = CompositeGraph::build(prefix, FusionParams(), small_params(3, 6));
    expect_invariants(g);
  }
}

TEST(GraphBuild, LevelZeroKeepsSameAttributeNeighbor) {
  auto ds = synthetic(1000, 10, 5);
  auto g = CompositeGraph::build(ds, FusionParams(), small_params(8, 64));
  expect_invariants(g);
  std::vector<std::size_t> class_size(10, 0);
  for (std::size_t i = 0; i < ds->size(); ++i) ++class_size[ds->attrs(i)[0]];
  std::size_t eligible = 0, ok = 0;
  for (PointId v = 0; v < g.size(); ++v) {
    if (class_size[ds->attrs(v)[0]] < 8) continue;
    ++eligible;
    for (PointId u : g.neighbors(v, 0)) {
      if (ds->attrs(u)[0] == ds->attrs(v)[0]) {
        ++ok;
        break;
      }
    }
  }
  EXPECT_GE(double(ok), 0.99 * double(eligible));
  EXPECT_TRUE(g.level0_connected());
}

TEST(GraphBuild, DeterministicForSeed) {
  auto ds = synthetic(500, 7, 2);
  auto a = CompositeGraph::build(ds, FusionParams(), small_params());
  auto b = CompositeGraph::build(ds, FusionParams(), small_params());
  EXPECT_TRUE(a.same_structure(b));
  auto qs = queries_from(generate_queries({500, 16, 7, 1, 2, true}, 20), 10, 40);
  for (const auto& q : qs) EXPECT_EQ(a.search(q), b.search(q));

  auto other = small_params();
  other.seed = 99;
  auto c = CompositeGraph::build(ds, FusionParams(), other);
  EXPECT_FALSE(a.same_structure(c));
}

TEST(GraphBuild, ParallelBuildIsValid) {
  auto ds = synthetic(2000, 20, 4);
  auto g = CompositeGraph::build(ds, FusionParams(), small_params(8, 64), 4);
  expect_invariants(g);
  auto qs = queries_from(generate_queries({2000, 16, 20, 1, 4, true}, 50), 10, 64);
  std::size_t agree = 0, total = 0;
  for (const auto& q : qs) {
    auto got = g.search(q);
    auto want = exact_fused_topk(*ds, g.fusion(), q, 10);
    std::set<PointId> truth;
    for (const auto& h : want) truth.insert(h.id);
    for (const auto& h : got) agree += truth.count(h.id);
    total += want.size();
  }
  EXPECT_GE(double(agree) / double(total), 0.95);
}

TEST(GraphSearch, FindsIndexedPoint) {
  // L2 keeps the self-distance exactly zero.
  auto ds = std::make_shared<const HybridDataset>(
      generate_synthetic({300, 8, 5, 1, 6, false}));
  auto g = CompositeGraph::build(ds, FusionParams::make(0.25, 20.0, 10.0,
                                                        AttrMetric::ManhattanLog),
                                 small_params());
  for (PointId id : {0u, 17u, 299u}) {
    HybridQuery q{{ds->feature(id).begin(), ds->feature(id).end()},
                  {ds->attrs(id)[0]}, 5, ds->size()};
    auto hits = g.search(q);
    ASSERT_FALSE(hits.empty());
    EXPECT_EQ(hits[0].id, id);
    EXPECT_EQ(hits[0].fused_dist, 0.0);
    EXPECT_TRUE(hits[0].attrs_match);
  }
}

TEST(GraphSearch, UnmatchedAttributesAreFlagged) {
  auto ds = synthetic(300, 5, 8);
  auto g = CompositeGraph::build(ds, FusionParams(), small_params());
  HybridQuery q{{ds->feature(0).begin(), ds->feature(0).end()}, {77}, 10, 50};
  auto hits = g.search(q);
  ASSERT_EQ(hits.size(), 10u);
  for (const auto& h : hits) EXPECT_FALSE(h.attrs_match);
  EXPECT_TRUE(std::is_sorted(hits.begin(), hits.end(), hit_less));
}

TEST(GraphSearch, Errors) {
  auto ds = synthetic(50, 5, 8);
  auto g = CompositeGraph::build(ds, FusionParams(), small_params());
  HybridQuery q{std::vector<float>(16, 0.25f), {1}, 10, 5};
  EXPECT_THROW(g.search(q), BudgetTooSmall);
  q.ef_search = 10;
  q.feature.resize(15);
  EXPECT_THROW(g.search(q), DimensionMismatch);
}

TEST(GraphSearch, FullBudgetMatchesExactOracle) {
  auto ds = synthetic(1000, 10, 12);
  auto g = CompositeGraph::build(ds, FusionParams(), small_params(8, 64));
  auto qs = queries_from(generate_queries({1000, 16, 10, 1, 12, true}, 100), 10, 1000);
  std::size_t equal = 0;
  for (const auto& q : qs) {
    auto got = g.search(q);
    auto want = exact_fused_topk(*ds, g.fusion(), q, 10);
    equal += got == want;
  }
  EXPECT_GE(equal, 99u);
  if (g.level0_connected()) {
    EXPECT_EQ(equal, 100u);
  }
}

TEST(GraphSearch, LargerBudgetNeverWorsensDistances) {
  auto ds = synthetic(1500, 30, 21);
  auto g = CompositeGraph::build(ds, FusionParams(), small_params(8, 48));
  auto qs = queries_from(generate_queries({1500, 16, 30, 1, 21, true}, 100), 10, 10);
  for (auto q : qs) {
    q.ef_search = 10;
    auto lo = g.search(q);
    q.ef_search = 200;
    auto hi = g.search(q);
    ASSERT_EQ(lo.size(), hi.size());
    for (std::size_t i = 0; i < lo.size(); ++i)
      EXPECT_LE(hi[i].fused_dist, lo[i].fused_dist);
  }
}

TEST(GraphIo, RoundTrip) {
  auto ds = synthetic(600, 6, 13);
  auto g = CompositeGraph::build(ds, FusionParams(), small_params());
  auto path = temp_path("roundtrip.hqan");
  g.save(path);
  auto loaded = CompositeGraph::load(path, ds);
  EXPECT_TRUE(g.same_structure(loaded));
  auto qs = queries_from(generate_queries({600, 16, 6, 1, 13, true}, 10), 10, 40);
  for (const auto& q : qs) EXPECT_EQ(g.search(q), loaded.search(q));
}

TEST(GraphIo, HeaderLayout) {
  auto ds = synthetic(10, 2, 13);
  auto g = CompositeGraph::build(ds, FusionParams(), small_params(4, 8));
  auto path = temp_path("header.hqan");
  g.save(path);
  std::ifstream in(path, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
  ASSERT_GT(bytes.size(), 4u + 4 + 4 + 4 + 4 + 24 + 2 + 8 + 8 + 4 + 16);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "HQAN");
  EXPECT_EQ(bytes[4], 1);  // version, little-endian
  EXPECT_EQ(bytes[12], 4);  // M
  EXPECT_EQ(bytes[16], 8);  // ef_construction
  EXPECT_EQ(bytes[44], static_cast<unsigned char>(AttrMetric::ManhattanLog));
  EXPECT_EQ(bytes[45], static_cast<unsigned char>(FeatureMetric::IP));
  EXPECT_EQ(bytes[46], 10);  // point count
}

TEST(GraphIo, RejectsBadMagic) {
  auto ds = synthetic(20, 2, 1);
  auto path = temp_path("bad_magic.hqan");
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOPE and some more bytes to read";
  }
  EXPECT_THROW(CompositeGraph::load(path, ds), FormatError);
}

TEST(GraphIo, RejectsWrongDataset) {
  auto ds = synthetic(50, 3, 1);
  auto g = CompositeGraph::build(ds, FusionParams(), small_params());
  auto path = temp_path("mismatch.hqan");
  g.save(path);
  EXPECT_THROW(CompositeGraph::load(path, synthetic(49, 3, 1)), DatasetMismatch);
  // Same count, different content.
  EXPECT_THROW(CompositeGraph::load(path, synthetic(50, 3, 2)), DatasetMismatch);
}

TEST(GraphIo, RejectsTruncatedFile) {
  auto ds = synthetic(50, 3, 1);
  auto g = CompositeGraph::build(ds, FusionParams(), small_params());
  auto path = temp_path("truncated.hqan");
  g.save(path);
  fs::resize_file(path, fs::file_size(path) - 3);
  EXPECT_THROW(CompositeGraph::load(path, ds), FormatError);
  EXPECT_THROW(CompositeGraph::load(temp_path("missing.hqan"), ds), IoError);
}

}  // namespace
}  // namespace hqann
