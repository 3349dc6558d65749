#include "hqann/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <thread>
#include <unordered_set>

#include "hqann/rng.hpp"

namespace hqann {

double recall_at_k(const std::vector<std::vector<std::int64_t>>& results,
                   const GroundTruth& gt, std::size_t k) {
  if (results.size() != gt.rows.size())
    throw LengthMismatch("results cover " + std::to_string(results.size()) +
                         " queries, ground truth covers " +
                         std::to_string(gt.rows.size()));
  // Hits grouped by per-query denominator keeps the common all-k case a
  // single division.
  std::map<std::size_t, std::size_t> hits_by_denominator;
  std::size_t counted = 0;
  for (std::size_t q = 0; q < results.size(); ++q) {
    std::unordered_set<std::int64_t> truth;
    const auto& row = gt.rows[q];
    for (std::size_t i = 0; i < std::min(k, row.size()); ++i)
      if (row[i] != kNoNeighbor) truth.insert(row[i]);
    if (truth.empty()) continue;
    std::size_t hit = 0;
    const auto& got = results[q];
    for (std::size_t i = 0; i < std::min(k, got.size()); ++i)
      hit += truth.count(got[i]);
    hits_by_denominator[truth.size()] += hit;
    ++counted;
  }
  if (counted == 0) return 1.0;
  double sum = 0.0;
  for (const auto& [denominator, hits] : hits_by_denominator)
    sum += double(hits) / double(denominator);
  return sum / double(counted);
}

namespace {

using Clock = std::chrono::steady_clock;

HybridQuery with_budget(const HybridQuery& q, const Strategy& s,
                        std::size_t budget) {
  HybridQuery out = q;
  if (s.kind != StrategyKind::SearchThenFilter)
    out.ef_search = std::max(budget, q.k);
  return out;
}

Strategy strategy_for_budget(Strategy s, std::size_t budget) {
  if (s.kind == StrategyKind::SearchThenFilter) s.expansion = std::max<std::size_t>(1, budget);
  return s;
}

std::vector<std::int64_t> ids_of(const std::vector<SearchHit>& hits) {
  std::vector<std::int64_t> out;
  out.reserve(hits.size());
  for (const auto& h : hits) out.push_back(h.id);
  return out;
}

struct Pass {
  std::vector<std::vector<std::int64_t>> ids;
  std::vector<double> latency_us;
  double wall_s = 0.0;
};

// Each worker timestamps back-to-back, so its latencies tile its timeline.
Pass timed_pass(const Strategy& s, const StrategyResources& res,
                const std::vector<HybridQuery>& queries, std::size_t threads) {
  Pass pass;
  const std::size_t nq = queries.size();
  pass.ids.resize(nq);
  pass.latency_us.resize(nq);
  threads = std::max<std::size_t>(1, std::min(threads, std::max<std::size_t>(nq, 1)));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  auto worker = [&] {
    auto t = Clock::now();
    for (std::size_t i = next++; i < nq; i = next++) {
      try {
        pass.ids[i] = ids_of(run_strategy(s, res, queries[i]));
      } catch (...) {
        std::lock_guard<std::mutex> guard(failure_lock);
        failure = std::current_exception();
        next = nq;
      }
      auto now = Clock::now();
      pass.latency_us[i] = std::chrono::duration<double, std::micro>(now - t).count();
      t = now;
    }
  };

  if (threads == 1) {
    worker();
    double total = 0.0;
    for (double l : pass.latency_us) total += l;
    pass.wall_s = total * 1e-6;
  } else {
    auto start = Clock::now();
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    pass.wall_s = std::chrono::duration<double>(Clock::now() - start).count();
  }
  if (failure) std::rethrow_exception(failure);
  return pass;
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  auto rank = static_cast<std::size_t>(std::ceil(p * double(v.size())));
  rank = std::clamp<std::size_t>(rank, 1, v.size());
  return v[rank - 1];
}

}  // namespace

std::vector<std::vector<std::int64_t>> run_queries(
    const Strategy& strategy, const StrategyResources& res,
    const std::vector<HybridQuery>& queries, std::size_t threads) {
  return timed_pass(strategy, res, queries, threads).ids;
}

std::vector<RunRecord> sweep(const Strategy& strategy,
                             const StrategyResources& res,
                             const std::vector<HybridQuery>& queries,
                             const GroundTruth& gt,
                             const std::vector<std::size_t>& budgets,
                             const RunLabels& labels, std::size_t threads) {
  if (gt.rows.size() != queries.size())
    throw LengthMismatch("ground truth and query counts differ");
  check_resources(strategy, res);
  threads = std::max<std::size_t>(1, threads);
  std::vector<RunRecord> out;
  for (std::size_t budget : budgets) {
    Strategy s = strategy_for_budget(strategy, budget);
    std::vector<HybridQuery> qs;
    qs.reserve(queries.size());
    for (const auto& q : queries) qs.push_back(with_budget(q, s, budget));

    timed_pass(s, res, qs, threads);  // warm-up
    Pass pass = timed_pass(s, res, qs, threads);

    RunRecord r;
    r.dataset = labels.dataset;
    r.strategy = to_string(s.kind);
    r.categories = labels.categories;
    r.w = labels.fusion.w();
    r.bias = labels.fusion.bias();
    r.M = labels.graph.M;
    r.ef_construction = labels.graph.ef_construction;
    r.budget = budget;
    r.k = gt.k;
    r.threads = threads;
    r.recall = recall_at_k(pass.ids, gt, gt.k);
    r.qps = pass.wall_s > 0.0 ? double(qs.size()) / pass.wall_s : 0.0;
    r.p50_us = percentile(pass.latency_us, 0.50);
    r.p99_us = percentile(pass.latency_us, 0.99);
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Suites

std::uint64_t attribute_seed(std::uint64_t seed, std::size_t categories,
                             bool queries) {
  return mix_seed(seed ^ (std::uint64_t(categories) << 1) ^
                  (queries ? kQueryStream : 0));
}

namespace {

std::vector<HybridQuery> make_queries(const FloatMatrix& features,
                                      FeatureMetric metric, std::size_t C,
                                      const SuiteConfig& cfg) {
  auto ds = attach_attributes(features, metric, C, cfg.n,
                              attribute_seed(cfg.seed, C, true));
  return queries_from(ds, cfg.k, std::max(cfg.ef_search, cfg.k));
}

void note(const SuiteConfig& cfg, const std::string& msg) {
  if (cfg.log) cfg.log(msg);
}

}  // namespace

std::vector<RunRecord> robustness_suite(const FloatMatrix& base,
                                        const FloatMatrix& queries,
                                        FeatureMetric metric,
                                        const std::vector<std::size_t>& categories,
                                        const SuiteConfig& cfg) {
  const bool wants = [&] {
    for (auto s : cfg.strategies)
      if (s == StrategyKind::SearchThenFilter) return true;
    return false;
  }();

  std::unique_ptr<CompositeGraph> feature_graph;
  std::vector<RunRecord> out;
  for (std::size_t C : categories) {
    auto ds = std::make_shared<const HybridDataset>(attach_attributes(
        base, metric, C, cfg.n, attribute_seed(cfg.seed, C, false)));
    auto qs = make_queries(queries, metric, C, cfg);
    auto gt = compute_ground_truth(*ds, qs, cfg.k);

    StrategyResources res{ds, nullptr, nullptr, cfg.fusion};
    std::unique_ptr<CompositeGraph> composite;
    for (auto kind : cfg.strategies) {
      if (kind == StrategyKind::Fusion && !composite) {
        note(cfg, "building composite graph for C=" + std::to_string(C));
        composite = std::make_unique<CompositeGraph>(
            CompositeGraph::build(ds, cfg.fusion, cfg.graph, cfg.build_threads));
      }
    }
    if (wants && !feature_graph) {
      // Feature-only graph ignores attributes, so one build serves every C.
      note(cfg, "building feature-only graph");
      feature_graph = std::make_unique<CompositeGraph>(CompositeGraph::build(
          ds, FusionParams::feature_only(), cfg.graph, cfg.build_threads));
    }
    res.composite = composite.get();
    res.feature_graph = feature_graph.get();

    RunLabels labels{cfg.dataset, C, cfg.graph, cfg.fusion};
    for (auto kind : cfg.strategies) {
      Strategy s{kind, cfg.expansion};
      std::size_t budget =
          kind == StrategyKind::SearchThenFilter ? cfg.expansion : cfg.ef_search;
      note(cfg, "measuring " + to_string(kind) + " at C=" + std::to_string(C));
      auto rows = sweep(s, res, qs, gt, {budget}, labels, cfg.threads);
      out.insert(out.end(), rows.begin(), rows.end());
    }
  }
  return out;
}

double sensitivity_bias(double w, double g_max, double fixed_bias) {
  double lo = FusionParams::min_bias(w, g_max);
  return fixed_bias > lo ? fixed_bias : lo + 1e-6;
}

std::vector<RunRecord> w_sensitivity_suite(const FloatMatrix& base,
                                           const FloatMatrix& queries,
                                           FeatureMetric metric,
                                           const std::vector<double>& w_list,
                                           std::size_t categories,
                                           const SuiteConfig& cfg,
                                           double fixed_bias) {
  auto ds = std::make_shared<const HybridDataset>(attach_attributes(
      base, metric, categories, cfg.n, attribute_seed(cfg.seed, categories, false)));
  auto qs = make_queries(queries, metric, categories, cfg);
  auto gt = compute_ground_truth(*ds, qs, cfg.k);

  std::vector<RunRecord> out;
  for (double w : w_list) {
    const double g_max = cfg.fusion.g_max();
    auto fusion = FusionParams::make(w, sensitivity_bias(w, g_max, fixed_bias),
                                     g_max, cfg.fusion.attr_metric());
    note(cfg, "building composite graph for w=" + format_number(w) +
                  " C=" + std::to_string(categories));
    auto graph = CompositeGraph::build(ds, fusion, cfg.graph, cfg.build_threads);
    StrategyResources res{ds, &graph, nullptr, fusion};
    RunLabels labels{cfg.dataset, categories, cfg.graph, fusion};
    auto rows = sweep(Strategy::fusion(), res, qs, gt, {cfg.ef_search}, labels,
                      cfg.threads);
    out.insert(out.end(), rows.begin(), rows.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string fixed3(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 3);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<RunRecord>& records,
               const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.dataset << ',' << r.strategy << ',' << r.categories << ','
        << format_number(r.w) << ',' << format_number(r.bias) << ',' << r.M
        << ',' << r.ef_construction << ',' << r.budget << ',' << r.k << ','
        << r.threads << ',' << format_number(r.recall) << ',' << fixed3(r.qps)
        << ',' << fixed3(r.p50_us) << ',' << fixed3(r.p99_us) << '\n';
  }
}

void write_csv(const std::filesystem::path& path,
               const std::vector<RunRecord>& records,
               const std::string& comment) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_csv(out, records, comment);
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace hqann
