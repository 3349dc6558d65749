#include "hqann/strategies.hpp"

#include <algorithm>

#include "hqann/metrics.hpp"

namespace hqann {

namespace {

bool same_attrs(std::span<const std::int32_t> a, std::span<const std::int32_t> b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end());
}

void check_query_dims(const HybridDataset& ds, const HybridQuery& q) {
  if (q.feature.size() != ds.dim())
    throw DimensionMismatch("query feature", ds.dim(), q.feature.size());
  if (q.attrs.size() != ds.attr_dim())
    throw DimensionMismatch("query attribute", ds.attr_dim(), q.attrs.size());
}

struct Scored {
  double dist;
  PointId id;
  bool operator<(const Scored& o) const {
    return dist < o.dist || (dist == o.dist && id < o.id);
  }
};

}  // namespace

Strategy Strategy::search_then_filter(std::size_t f) {
  if (f < 1) throw InvalidArgument("expansion F must be >= 1");
  return {StrategyKind::SearchThenFilter, f};
}

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Fusion:
      return "fusion";
    case StrategyKind::SearchThenFilter:
      return "post-filter";
    case StrategyKind::FilterThenSearch:
      return "pre-filter";
  }
  return "unknown";
}

StrategyKind parse_strategy(const std::string& s) {
  if (s == "fusion") return StrategyKind::Fusion;
  if (s == "post-filter" || s == "search-then-filter")
    return StrategyKind::SearchThenFilter;
  if (s == "pre-filter" || s == "filter-then-search")
    return StrategyKind::FilterThenSearch;
  throw InvalidArgument("unknown strategy '" + s +
                        "' (expected fusion|post-filter|pre-filter)");
}

std::vector<SearchHit> exact_fused_topk(const HybridDataset& ds,
                                        const FusionParams& fusion,
                                        const HybridQuery& q, std::size_t k) {
  check_query_dims(ds, q);
  const FusedMetric metric(fusion, ds.metric());
  const std::size_t m = ds.dim(), n = ds.attr_dim();
  std::vector<SearchHit> all;
  all.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto p = metric.parts(q.feature.data(), q.attrs.data(), ds.feature(i).data(),
                          ds.attrs(i).data(), m, n);
    all.push_back({static_cast<PointId>(i), p.fused, p.feature, p.attrs_match});
  }
  k = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + k, all.end(), hit_less);
  all.resize(k);
  return all;
}

namespace {

std::vector<Scored> filtered_scan(const HybridDataset& ds, const HybridQuery& q,
                                  std::size_t k) {
  check_query_dims(ds, q);
  const FusedMetric metric(FusionParams(), ds.metric());
  const std::size_t m = ds.dim();
  std::vector<Scored> matched;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!same_attrs(ds.attrs(i), q.attrs)) continue;
    matched.push_back({metric.feature(q.feature.data(), ds.feature(i).data(), m),
                       static_cast<PointId>(i)});
  }
  k = std::min(k, matched.size());
  std::partial_sort(matched.begin(), matched.begin() + k, matched.end());
  matched.resize(k);
  return matched;
}

}  // namespace

std::vector<std::int64_t> exact_filtered_topk(const HybridDataset& ds,
                                              const HybridQuery& q,
                                              std::size_t k) {
  auto top = filtered_scan(ds, q, k);
  std::vector<std::int64_t> row(k, kNoNeighbor);
  for (std::size_t i = 0; i < top.size(); ++i) row[i] = top[i].id;
  return row;
}

GroundTruth compute_ground_truth(const HybridDataset& ds,
                                 const std::vector<HybridQuery>& queries,
                                 std::size_t k) {
  GroundTruth gt;
  gt.k = k;
  gt.rows.reserve(queries.size());
  for (const auto& q : queries) gt.rows.push_back(exact_filtered_topk(ds, q, k));
  return gt;
}

void check_resources(const Strategy& s, const StrategyResources& res) {
  if (!res.dataset) throw InvalidArgument("strategy resources need a dataset");
  switch (s.kind) {
    case StrategyKind::Fusion:
      if (!res.composite)
        throw InvalidArgument("fusion strategy needs a composite graph");
      if (res.composite->size() != res.dataset->size())
        throw DatasetMismatch("composite graph and dataset sizes differ");
      break;
    case StrategyKind::SearchThenFilter:
      if (s.expansion < 1) throw InvalidArgument("expansion F must be >= 1");
      if (!res.feature_graph)
        throw InvalidArgument("post-filter strategy needs a feature-only graph");
      if (res.feature_graph->size() != res.dataset->size() ||
          res.feature_graph->dataset().dim() != res.dataset->dim())
        throw DatasetMismatch("feature graph and dataset shapes differ");
      break;
    case StrategyKind::FilterThenSearch:
      break;
  }
}

std::vector<SearchHit> run_strategy(const Strategy& s,
                                    const StrategyResources& res,
                                    const HybridQuery& q) {
  check_resources(s, res);
  const HybridDataset& ds = *res.dataset;
  switch (s.kind) {
    case StrategyKind::Fusion:
      return res.composite->search(q);

    case StrategyKind::SearchThenFilter: {
      validate_query(q, ds.dim(), ds.attr_dim());
      const std::size_t want = s.expansion * q.k;
      HybridQuery inner;
      inner.feature = q.feature;
      inner.attrs.assign(res.feature_graph->dataset().attr_dim(), 0);
      inner.k = want;
      inner.ef_search = std::max(q.ef_search, want);
      auto candidates = res.feature_graph->search(inner);
      std::vector<SearchHit> hits;
      for (const auto& c : candidates) {
        if (!same_attrs(ds.attrs(c.id), q.attrs)) continue;
        double g = c.feature_dist;
        hits.push_back({c.id, res.fusion.w() * g, g, true});
        if (hits.size() == q.k) break;
      }
      std::sort(hits.begin(), hits.end(), hit_less);
      return hits;
    }

    case StrategyKind::FilterThenSearch: {
      validate_query(q, ds.dim(), ds.attr_dim());
      auto top = filtered_scan(ds, q, q.k);
      std::vector<SearchHit> hits;
      hits.reserve(top.size());
      for (const auto& t : top)
        hits.push_back({t.id, res.fusion.w() * t.dist, t.dist, true});
      return hits;
    }
  }
  return {};
}

}  // namespace hqann
