#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hqann/core.hpp"
#include "hqann/dataio.hpp"
#include "hqann/graph.hpp"
#include "hqann/strategies.hpp"

namespace hqann {

/// One measured (strategy, budget) point.
struct RunRecord {
  std::string dataset;
  std::string strategy;
  std::size_t categories = 0;
  double w = 0.0;
  double bias = 0.0;
  std::size_t M = 0;
  std::size_t ef_construction = 0;
  std::size_t budget = 0;  // ef_search, or F for post-filter
  std::size_t k = 0;
  std::size_t threads = 1;
  double recall = 0.0;
  double qps = 0.0;
  double p50_us = 0.0;
  double p99_us = 0.0;
};

/// Mean over queries of |returned[:k] ∩ gt| / |gt|, where gt excludes
/// kNoNeighbor padding. Queries with empty ground truth are skipped; returns
/// 1.0 if every query was skipped.
double recall_at_k(const std::vector<std::vector<std::int64_t>>& results,
                   const GroundTruth& gt, std::size_t k);

/// Columns stamped on every record of a sweep.
struct RunLabels {
  std::string dataset = "synthetic";
  std::size_t categories = 0;
  GraphParams graph;
  FusionParams fusion;
};

/// For each budget: one untimed warm-up pass, then a timed pass with
/// `threads` workers. Budget is ef_search for fusion/pre-filter and the
/// expansion F for post-filter.
std::vector<RunRecord> sweep(const Strategy& strategy,
                             const StrategyResources& res,
                             const std::vector<HybridQuery>& queries,
                             const GroundTruth& gt,
                             const std::vector<std::size_t>& budgets,
                             const RunLabels& labels, std::size_t threads);

/// Runs every query once and returns the result id lists (no timing).
std::vector<std::vector<std::int64_t>> run_queries(
    const Strategy& strategy, const StrategyResources& res,
    const std::vector<HybridQuery>& queries, std::size_t threads);

struct SuiteConfig {
  std::string dataset = "synthetic";
  GraphParams graph;
  FusionParams fusion;
  std::size_t ef_search = 80;
  std::size_t k = 10;
  std::size_t expansion = 100;
  std::size_t n = 1;  // attribute dims
  std::uint64_t seed = 42;
  std::size_t threads = 1;        // search workers
  std::size_t build_threads = 1;  // graph construction
  std::vector<StrategyKind> strategies{StrategyKind::Fusion,
                                       StrategyKind::SearchThenFilter,
                                       StrategyKind::FilterThenSearch};
  std::function<void(const std::string&)> log;
};

/// Seed used for the attributes of C categories (base and query sets differ).
std::uint64_t attribute_seed(std::uint64_t seed, std::size_t categories,
                             bool queries);

/// For each C: regenerate attributes on the fixed base/query features,
/// rebuild the composite graph, and measure each strategy at cfg.ef_search.
std::vector<RunRecord> robustness_suite(const FloatMatrix& base,
                                        const FloatMatrix& queries,
                                        FeatureMetric metric,
                                        const std::vector<std::size_t>& categories,
                                        const SuiteConfig& cfg);

/// Bias used for scale factor w: `fixed_bias` when admissible, otherwise the
/// smallest admissible value plus 1e-6.
double sensitivity_bias(double w, double g_max, double fixed_bias);

/// Rebuilds the composite graph for every w (bias per sensitivity_bias) and
/// records fusion recall at cfg.ef_search.
std::vector<RunRecord> w_sensitivity_suite(const FloatMatrix& base,
                                           const FloatMatrix& queries,
                                           FeatureMetric metric,
                                           const std::vector<double>& w_list,
                                           std::size_t categories,
                                           const SuiteConfig& cfg,
                                           double fixed_bias = FusionParams::kDefaultBias);

inline constexpr const char* kCsvHeader =
    "dataset,strategy,C,w,bias,M,ef_construction,budget,k,threads,recall,qps,"
    "p50_us,p99_us";

/// Shortest round-trip decimal, independent of the global locale.
std::string format_number(double v);

void write_csv(std::ostream& out, const std::vector<RunRecord>& records,
               const std::string& comment = {});
void write_csv(const std::filesystem::path& path,
               const std::vector<RunRecord>& records,
               const std::string& comment = {});

}  // namespace hqann
