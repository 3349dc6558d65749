#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "hqann/core.hpp"
#include "hqann/metrics.hpp"

namespace hqann {

struct GraphParams {
  std::size_t M = 32;                 // max degree above level 0; 2M at level 0
  std::size_t ef_construction = 512;
  double level_norm = 0.0;            // <= 0 selects 1/ln(M)
  std::uint64_t seed = 42;

  void validate() const;
  double effective_level_norm() const;
  std::size_t max_degree(std::size_t level) const {
    return level == 0 ? 2 * M : M;
  }
};

struct SearchStats {
  std::size_t distance_evals = 0;
  std::size_t hops = 0;
};

/// Hierarchical navigable proximity graph whose edges are chosen under the
/// fused hybrid distance. With AttrMetric::Ignore it degenerates to a plain
/// feature-space HNSW.
///
/// The graph shares ownership of its dataset; vectors are never copied.
class CompositeGraph {
 public:
  /// Inserts points in id order. threads == 1 gives a deterministic graph
  /// for a given seed; threads > 1 inserts concurrently under per-node locks.
  static CompositeGraph build(std::shared_ptr<const HybridDataset> ds,
                              const FusionParams& fusion,
                              const GraphParams& params,
                              std::size_t threads = 1);

  /// Top-k by fused distance, ascending, ties by id.
  std::vector<SearchHit> search(const HybridQuery& q,
                                SearchStats* stats = nullptr) const;

  void save(const std::filesystem::path& path) const;
  static CompositeGraph load(const std::filesystem::path& path,
                             std::shared_ptr<const HybridDataset> ds);

  std::size_t size() const { return levels_.size(); }
  const GraphParams& params() const { return params_; }
  const FusionParams& fusion() const { return metric_.params(); }
  FeatureMetric feature_metric() const { return metric_.feature_metric(); }
  const HybridDataset& dataset() const { return *ds_; }
  std::shared_ptr<const HybridDataset> dataset_ptr() const { return ds_; }

  PointId entry_point() const { return entry_point_; }
  std::size_t max_level() const { return max_level_; }
  std::size_t level(PointId node) const { return levels_[node]; }
  std::span<const PointId> neighbors(PointId node, std::size_t level) const;

  /// Number of nodes reachable from the entry point over level-0 edges.
  std::size_t reachable_at_level0() const;
  bool level0_connected() const { return reachable_at_level0() == size(); }

  /// Same levels, adjacency, entry point, M, ef_construction, metric config.
  bool same_structure(const CompositeGraph& other) const;

 private:
  CompositeGraph(std::shared_ptr<const HybridDataset> ds, FusionParams fusion,
                 GraphParams params);
  struct Builder;
  friend struct Builder;

  void allocate(std::vector<std::uint32_t> levels);
  PointId* list_ptr(PointId node, std::size_t level);
  const PointId* list_ptr(PointId node, std::size_t level) const;
  void set_list(PointId node, std::size_t level, std::span<const PointId> ids);

  std::shared_ptr<const HybridDataset> ds_;
  FusedMetric metric_;
  GraphParams params_;
  std::vector<std::uint32_t> levels_;
  // Each list slot is [count, id_0 .. id_{cap-1}].
  std::vector<PointId> level0_;
  std::vector<std::vector<PointId>> upper_;
  PointId entry_point_ = 0;
  std::size_t max_level_ = 0;
};

}  // namespace hqann
