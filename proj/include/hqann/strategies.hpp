#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hqann/core.hpp"
#include "hqann/graph.hpp"

namespace hqann {

enum class StrategyKind : std::uint8_t {
  Fusion,            // one traversal of the composite graph
  SearchThenFilter,  // feature kNN over F*k candidates, then drop mismatches
  FilterThenSearch,  // attribute whitelist, then exact feature scan
};

struct Strategy {
  StrategyKind kind = StrategyKind::Fusion;
  std::size_t expansion = 100;  // F, SearchThenFilter only

  static Strategy fusion() { return {StrategyKind::Fusion, 100}; }
  static Strategy search_then_filter(std::size_t f = 100);
  static Strategy filter_then_search() {
    return {StrategyKind::FilterThenSearch, 100};
  }
};

std::string to_string(StrategyKind kind);
/// Accepts fusion | post-filter | search-then-filter | pre-filter | filter-then-search.
StrategyKind parse_strategy(const std::string& s);

inline constexpr std::int64_t kNoNeighbor = -1;

/// One ground-truth row per query; each row holds exactly k ids, padded
/// with kNoNeighbor.
struct GroundTruth {
  std::size_t k = 0;
  std::vector<std::vector<std::int64_t>> rows;
};

/// Brute-force top-k by fused distance, ascending, ties by id.
std::vector<SearchHit> exact_fused_topk(const HybridDataset& ds,
                                        const FusionParams& fusion,
                                        const HybridQuery& q, std::size_t k);

/// Exact-attribute matches ranked by feature distance (ties by id), padded
/// to length k with kNoNeighbor.
std::vector<std::int64_t> exact_filtered_topk(const HybridDataset& ds,
                                              const HybridQuery& q,
                                              std::size_t k);

GroundTruth compute_ground_truth(const HybridDataset& ds,
                                 const std::vector<HybridQuery>& queries,
                                 std::size_t k);

/// What a strategy may need. Fusion needs `composite`; SearchThenFilter needs
/// `feature_graph` (built with FusionParams::feature_only()) over the same
/// features as `dataset`; FilterThenSearch needs only `dataset`. `fusion`
/// is used to report fused distances for the non-fusion strategies.
struct StrategyResources {
  std::shared_ptr<const HybridDataset> dataset;
  const CompositeGraph* composite = nullptr;
  const CompositeGraph* feature_graph = nullptr;
  FusionParams fusion;
};

/// Result lists may be shorter than k for the filtering strategies.
std::vector<SearchHit> run_strategy(const Strategy& s,
                                    const StrategyResources& res,
                                    const HybridQuery& q);

/// Checks that `res` carries what `s` needs; throws InvalidArgument.
void check_resources(const Strategy& s, const StrategyResources& res);

}  // namespace hqann
