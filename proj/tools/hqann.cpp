// hqann: command-line front end for the hybrid-query library.
//
// Exit codes: 0 success, 1 runtime failure, 2 invalid flags or refused
// overwrite. Machine-readable output goes to files or stdout; diagnostics go
// to stderr.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "hqann/bench.hpp"
#include "hqann/dataio.hpp"
#include "hqann/graph.hpp"
#include "hqann/strategies.hpp"

namespace fs = std::filesystem;
using namespace hqann;

namespace {

/// Bad flag values or a refused overwrite; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataFiles {
  fs::path base, attrs, queries, query_attrs, gt, index;

  explicit DataFiles(const fs::path& dir)
      : base(dir / "base.fvecs"),
        attrs(dir / "attrs.ivecs"),
        queries(dir / "query.fvecs"),
        query_attrs(dir / "query_attrs.ivecs"),
        gt(dir / "gt.ivecs"),
        index(dir / "index.hqan") {}
};

struct Options {
  // shared
  std::string data;
  std::string out;
  bool force = false;
  std::uint64_t seed = 42;
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  std::string metric = "ip";
  // gen
  std::size_t count = 10000;
  std::size_t dim = 32;
  std::size_t categories = 100;
  std::size_t attr_dims = 1;
  std::size_t num_queries = 1000;
  // metric / graph
  double w = FusionParams::kDefaultW;
  double bias = FusionParams::kDefaultBias;
  double g_max = FusionParams::kDefaultGMax;
  std::string attr_metric = "manhattan";
  std::size_t M = 32;
  std::size_t ef_construction = 512;
  // search / bench
  std::string index;
  std::string gt;
  std::size_t k = 10;
  std::vector<std::size_t> ef{80};
  std::vector<std::size_t> expansion{100};
  std::string strategy = "fusion";
  std::vector<std::string> strategies{"fusion", "post-filter", "pre-filter"};
  std::vector<std::size_t> category_list{10, 100, 500, 1000};
  std::vector<double> w_list{1.0, 0.5, 0.25, 0.1};
  std::string name = "synthetic";
  bool categories_set = false;
};

void refuse_overwrite(const fs::path& p, bool force) {
  if (!force && fs::exists(p))
    throw UsageError("'" + p.string() + "' exists; pass --force to overwrite");
}

FeatureMetric metric_of(const Options& o) {
  try {
    return parse_feature_metric(o.metric);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

FusionParams fusion_of(const Options& o) {
  try {
    return make_fusion_params(o.w, o.bias, o.g_max, parse_attr_metric(o.attr_metric));
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

GraphParams graph_of(const Options& o) {
  GraphParams gp;
  gp.M = o.M;
  gp.ef_construction = o.ef_construction;
  gp.seed = o.seed;
  try {
    gp.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return gp;
}

std::string describe(const Options& o, const std::string& cmd,
                     const FusionParams& fusion, const GraphParams& gp) {
  std::ostringstream os;
  os << "hqann " << cmd << " seed=" << gp.seed << " k=" << o.k
     << " w=" << format_number(fusion.w()) << " bias=" << format_number(fusion.bias())
     << " g_max=" << format_number(fusion.g_max())
     << " attr_metric=" << to_string(fusion.attr_metric()) << " M=" << gp.M
     << " ef_construction=" << gp.ef_construction << " metric=" << o.metric;
  return os.str();
}

std::string describe(const Options& o, const std::string& cmd) {
  return describe(o, cmd, fusion_of(o), graph_of(o));
}

// Attribute values are drawn from [0, C), so the largest one bounds C.
std::size_t infer_categories(const HybridDataset& ds) {
  const auto attrs = ds.all_attrs();
  if (attrs.empty()) return 0;
  return std::size_t(*std::max_element(attrs.begin(), attrs.end())) + 1;
}

void emit_csv(const Options& o, const std::vector<RunRecord>& rows,
              const std::string& comment) {
  if (o.out.empty() || o.out == "-") {
    write_csv(std::cout, rows, comment);
  } else {
    write_csv(fs::path(o.out), rows, comment);
    std::cerr << "wrote " << rows.size() << " rows to " << o.out << "\n";
  }
}

// ---------------------------------------------------------------------------

int cmd_gen(const Options& o) {
  const FeatureMetric metric = metric_of(o);
  const fs::path dir(o.out);
  refuse_overwrite(dir, o.force);
  SyntheticSpec spec{o.count, o.dim, o.categories, o.attr_dims, o.seed,
                     metric == FeatureMetric::IP};
  try {
    spec.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  fs::create_directories(dir);
  DataFiles files(dir);
  auto base = generate_synthetic(spec);
  auto queries = generate_queries(spec, o.num_queries);
  save_hybrid(base, files.base, files.attrs);
  save_hybrid(queries, files.queries, files.query_attrs);
  auto manifest = [&](const fs::path& p, std::size_t rows, std::size_t d) {
    std::cout << p.string() << "\trows=" << rows << "\tdim=" << d
              << "\tC=" << o.categories << "\tseed=" << o.seed << "\n";
  };
  manifest(files.base, base.size(), base.dim());
  manifest(files.attrs, base.size(), base.attr_dim());
  manifest(files.queries, queries.size(), queries.dim());
  manifest(files.query_attrs, queries.size(), queries.attr_dim());
  return 0;
}

std::shared_ptr<const HybridDataset> load_base(const Options& o) {
  DataFiles files(o.data);
  return std::make_shared<const HybridDataset>(
      load_hybrid(files.base, files.attrs, metric_of(o)));
}

std::vector<HybridQuery> load_queries(const Options& o, std::size_t ef) {
  DataFiles files(o.data);
  auto qs = load_hybrid(files.queries, files.query_attrs, metric_of(o));
  return queries_from(qs, o.k, std::max(ef, o.k));
}

fs::path index_path(const Options& o) {
  return o.index.empty() ? DataFiles(o.data).index : fs::path(o.index);
}

fs::path gt_path(const Options& o) {
  return o.gt.empty() ? DataFiles(o.data).gt : fs::path(o.gt);
}

int cmd_build(const Options& o) {
  auto fusion = fusion_of(o);
  auto gp = graph_of(o);
  const fs::path out = o.out.empty() ? DataFiles(o.data).index : fs::path(o.out);
  refuse_overwrite(out, o.force);
  auto ds = load_base(o);
  std::cerr << describe(o, "build") << "\n";
  auto g = CompositeGraph::build(ds, fusion, gp, o.threads);
  g.save(out);
  std::cout << out.string() << "\tpoints=" << g.size()
            << "\tmax_level=" << g.max_level()
            << "\treachable=" << g.reachable_at_level0() << "\n";
  return 0;
}

int cmd_gt(const Options& o) {
  const fs::path out = o.out.empty() ? DataFiles(o.data).gt : fs::path(o.out);
  refuse_overwrite(out, o.force);
  auto ds = load_base(o);
  auto qs = load_queries(o, o.k);
  write_ground_truth(out, compute_ground_truth(*ds, qs, o.k));
  std::cout << out.string() << "\trows=" << qs.size() << "\tk=" << o.k << "\n";
  return 0;
}

int cmd_search(const Options& o) {
  const std::size_t ef = o.ef.empty() ? 80 : o.ef.front();
  if (ef < o.k) throw UsageError("--ef must be >= --k");
  auto ds = load_base(o);
  auto g = CompositeGraph::load(index_path(o), ds);
  auto qs = load_queries(o, ef);
  std::cout << "query\trank\tid\tfused_dist\n";
  for (std::size_t qi = 0; qi < qs.size(); ++qi) {
    auto hits = g.search(qs[qi]);
    for (std::size_t r = 0; r < hits.size(); ++r)
      std::cout << qi << '\t' << r << '\t' << hits[r].id << '\t'
                << format_number(hits[r].fused_dist) << '\n';
  }
  return 0;
}

int cmd_bench(const Options& o) {
  Strategy strategy;
  try {
    strategy.kind = parse_strategy(o.strategy);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  auto gp = graph_of(o);
  if (!o.out.empty() && o.out != "-") refuse_overwrite(o.out, o.force);

  auto ds = load_base(o);
  auto qs = load_queries(o, o.k);
  GroundTruth gt = fs::exists(gt_path(o)) ? read_ground_truth(gt_path(o))
                                          : compute_ground_truth(*ds, qs, o.k);
  if (gt.k != o.k)
    throw DatasetMismatch("ground truth has k=" + std::to_string(gt.k) +
                          ", --k is " + std::to_string(o.k));

  StrategyResources res{ds, nullptr, nullptr, FusionParams()};
  std::unique_ptr<CompositeGraph> graph;
  std::vector<std::size_t> budgets = o.ef;
  switch (strategy.kind) {
    case StrategyKind::Fusion:
      graph = std::make_unique<CompositeGraph>(CompositeGraph::load(index_path(o), ds));
      res.composite = graph.get();
      res.fusion = graph->fusion();
      gp = graph->params();
      break;
    case StrategyKind::SearchThenFilter:
      res.fusion = fusion_of(o);
      std::cerr << "building feature-only graph\n";
      graph = std::make_unique<CompositeGraph>(
          CompositeGraph::build(ds, FusionParams::feature_only(), gp, o.threads));
      res.feature_graph = graph.get();
      budgets = o.expansion;
      break;
    case StrategyKind::FilterThenSearch:
      res.fusion = fusion_of(o);
      break;
  }
  const std::size_t categories = o.categories_set ? o.categories : infer_categories(*ds);
  RunLabels labels{o.name, categories, gp, res.fusion};
  auto rows = sweep(strategy, res, qs, gt, budgets, labels, o.threads);
  emit_csv(o, rows, describe(o, "bench", res.fusion, gp) + " strategy=" + o.strategy);
  return 0;
}

SuiteConfig suite_of(const Options& o) {
  SuiteConfig cfg;
  cfg.dataset = o.name;
  cfg.graph = graph_of(o);
  cfg.fusion = fusion_of(o);
  cfg.ef_search = o.ef.empty() ? 80 : o.ef.front();
  cfg.k = o.k;
  cfg.expansion = o.expansion.empty() ? 100 : o.expansion.front();
  cfg.n = o.attr_dims;
  cfg.seed = o.seed;
  cfg.threads = o.threads;
  cfg.build_threads = o.threads;
  cfg.strategies.clear();
  for (const auto& s : o.strategies) {
    try {
      cfg.strategies.push_back(parse_strategy(s));
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  cfg.log = [](const std::string& msg) { std::cerr << msg << "\n"; };
  return cfg;
}

int cmd_robustness(const Options& o) {
  auto cfg = suite_of(o);
  if (!o.out.empty() && o.out != "-") refuse_overwrite(o.out, o.force);
  DataFiles files(o.data);
  auto base = read_fvecs(files.base);
  auto queries = read_fvecs(files.queries);
  auto rows = robustness_suite(base, queries, metric_of(o), o.category_list, cfg);
  emit_csv(o, rows, describe(o, "robustness"));
  return 0;
}

int cmd_sensitivity(const Options& o) {
  auto cfg = suite_of(o);
  if (!o.out.empty() && o.out != "-") refuse_overwrite(o.out, o.force);
  DataFiles files(o.data);
  auto base = read_fvecs(files.base);
  auto queries = read_fvecs(files.queries);
  auto rows = w_sensitivity_suite(base, queries, metric_of(o), o.w_list,
                                  o.categories, cfg, o.bias);
  emit_csv(o, rows, describe(o, "sensitivity"));
  return 0;
}

// ---------------------------------------------------------------------------

void add_metric_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--w", o.w, "Feature-distance scale factor")->check(CLI::PositiveNumber);
  cmd->add_option("--bias", o.bias, "Attribute bias");
  cmd->add_option("--g-max", o.g_max, "Declared upper bound of the feature distance")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--attr-metric", o.attr_metric, "manhattan | hamming");
}

void add_graph_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--M", o.M, "Max neighbors per node (2M at level 0)")
      ->check(CLI::Range(2, 4096));
  cmd->add_option("--ef-construction", o.ef_construction, "Build beam width")
      ->check(CLI::PositiveNumber);
}

void add_common(CLI::App* cmd, Options& o, bool needs_data) {
  auto* data = cmd->add_option("--data", o.data, "Directory with base/query files");
  if (needs_data) data->required()->check(CLI::ExistingDirectory);
  cmd->add_option("--metric", o.metric, "Feature metric: ip | l2");
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--force", o.force, "Overwrite existing outputs");
  cmd->add_option("--k", o.k, "Neighbors per query")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid (vector + attribute) nearest-neighbor search tool"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic hybrid dataset");
  gen->add_option("--out", o.out, "Output directory")->required();
  gen->add_option("--count", o.count, "Base points")->check(CLI::PositiveNumber);
  gen->add_option("--dim", o.dim, "Feature dimension")->check(CLI::PositiveNumber);
  gen->add_option("--categories", o.categories, "Values per attribute dimension")
      ->check(CLI::PositiveNumber);
  gen->add_option("--attr-dims", o.attr_dims, "Attribute dimensions")
      ->check(CLI::PositiveNumber);
  gen->add_option("--queries", o.num_queries, "Query points")->check(CLI::PositiveNumber);
  gen->add_option("--metric", o.metric, "ip (unit-norm features) | l2");
  gen->add_option("--seed", o.seed, "Random seed");
  gen->add_flag("--force", o.force, "Overwrite an existing output directory");

  auto* build = app.add_subcommand("build", "Build a composite graph index");
  add_common(build, o, true);
  add_metric_flags(build, o);
  add_graph_flags(build, o);
  build->add_option("--out", o.out, "Index path (default <data>/index.hqan)");

  auto* gt = app.add_subcommand("gt", "Compute exact filtered ground truth");
  add_common(gt, o, true);
  gt->add_option("--out", o.out, "Output ivecs (default <data>/gt.ivecs)");

  auto* search = app.add_subcommand("search", "Query an index, print top-k");
  add_common(search, o, true);
  search->add_option("--index", o.index, "Index path (default <data>/index.hqan)");
  search->add_option("--ef", o.ef, "Search beam width")->expected(1);

  auto* bench = app.add_subcommand("bench", "Recall/QPS sweep for one strategy");
  add_common(bench, o, true);
  add_metric_flags(bench, o);
  add_graph_flags(bench, o);
  bench->add_option("--strategy", o.strategy, "fusion | post-filter | pre-filter");
  bench->add_option("--index", o.index, "Index path (fusion)");
  bench->add_option("--gt", o.gt, "Ground truth (default <data>/gt.ivecs or computed)");
  bench->add_option("--ef", o.ef, "ef_search budgets")->delimiter(',');
  bench->add_option("--F", o.expansion, "post-filter expansion budgets")->delimiter(',');
  bench->add_option("--name", o.name, "Dataset label for the CSV");
  bench->add_option("--categories", o.categories,
                    "C label for the CSV (default: max attribute value + 1)");
  bench->add_option("--out", o.out, "CSV path (default stdout)");

  auto* robust = app.add_subcommand("robustness", "Recall/latency across attribute cardinalities");
  add_common(robust, o, true);
  add_metric_flags(robust, o);
  add_graph_flags(robust, o);
  robust->add_option("--categories", o.category_list, "Cardinalities to sweep")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  robust->add_option("--attr-dims", o.attr_dims, "Attribute dimensions")
      ->check(CLI::PositiveNumber);
  robust->add_option("--strategies", o.strategies, "Strategies to run")->delimiter(',');
  robust->add_option("--ef", o.ef, "ef_search")->expected(1);
  robust->add_option("--F", o.expansion, "post-filter expansion")->expected(1);
  robust->add_option("--name", o.name, "Dataset label for the CSV");
  robust->add_option("--out", o.out, "CSV path (default stdout)");

  auto* sens = app.add_subcommand("sensitivity", "Recall across scale factors w");
  add_common(sens, o, true);
  add_metric_flags(sens, o);
  add_graph_flags(sens, o);
  sens->add_option("--w-list", o.w_list, "Scale factors")->delimiter(',')
      ->check(CLI::PositiveNumber);
  sens->add_option("--categories", o.categories, "Attribute cardinality")
      ->check(CLI::PositiveNumber);
  sens->add_option("--attr-dims", o.attr_dims, "Attribute dimensions")
      ->check(CLI::PositiveNumber);
  sens->add_option("--ef", o.ef, "ef_search")->expected(1);
  sens->add_option("--name", o.name, "Dataset label for the CSV");
  sens->add_option("--out", o.out, "CSV path (default stdout)");
  o.strategies = {"fusion"};

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_gen(o);
    if (*build) return cmd_build(o);
    if (*gt) return cmd_gt(o);
    if (*search) return cmd_search(o);
    if (*bench) {
      o.categories_set = bench->count("--categories") > 0;
      return cmd_bench(o);
    }
    if (*robust) {
      if (robust->count("--strategies") == 0)
        o.strategies = {"fusion", "post-filter", "pre-filter"};
      return cmd_robustness(o);
    }
    if (*sens) return cmd_sensitivity(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
