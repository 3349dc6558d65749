#include "hqann/graph.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <mutex>
#include <queue>
#include <random>
#include <thread>
#include <utility>

#include "hqann/rng.hpp"

namespace hqann {

namespace {

using Cand = std::pair<double, PointId>;  // (distance, id); ordered lexicographically

class VisitedTable {
 public:
  void reset(std::size_t n) {
    if (marks_.size() != n) {
      marks_.assign(n, 0);
      epoch_ = 0;
    }
    if (++epoch_ == 0) {
      std::fill(marks_.begin(), marks_.end(), 0);
      epoch_ = 1;
    }
  }
  bool visit(PointId id) {
    if (marks_[id] == epoch_) return false;
    marks_[id] = epoch_;
    return true;
  }

 private:
  std::vector<std::uint32_t> marks_;
  std::uint32_t epoch_ = 0;
};

constexpr char kMagic[4] = {'H', 'Q', 'A', 'N'};
constexpr std::uint32_t kFormatVersion = 1;

class LeWriter {
 public:
  explicit LeWriter(const std::filesystem::path& path)
      : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
    if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
  }
  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 4);
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void finish() {
    out_.flush();
    if (!out_) throw IoError("write to '" + path_.string() + "' failed");
  }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

class LeReader {
 public:
  explicit LeReader(const std::filesystem::path& path)
      : in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open '" + path.string() + "' for reading");
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw FormatError("index file truncated");
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  bool at_end() { return in_.peek() == std::ifstream::traits_type::eof(); }

 private:
  std::ifstream in_;
};

}  // namespace

// ---------------------------------------------------------------------------

void GraphParams::validate() const {
  if (M < 2) throw InvalidArgument("M must be >= 2");
  if (ef_construction < M) throw InvalidArgument("ef_construction must be >= M");
}

double GraphParams::effective_level_norm() const {
  return level_norm > 0.0 ? level_norm : 1.0 / std::log(static_cast<double>(M));
}

CompositeGraph::CompositeGraph(std::shared_ptr<const HybridDataset> ds,
                               FusionParams fusion, GraphParams params)
    : ds_(std::move(ds)),
      metric_(fusion, ds_ ? ds_->metric() : FeatureMetric::IP),
      params_(params) {}

void CompositeGraph::allocate(std::vector<std::uint32_t> levels) {
  levels_ = std::move(levels);
  const std::size_t n = levels_.size();
  level0_.assign(n * (2 * params_.M + 1), 0);
  upper_.assign(n, {});
  for (std::size_t i = 0; i < n; ++i)
    if (levels_[i] > 0) upper_[i].assign(levels_[i] * (params_.M + 1), 0);
}

PointId* CompositeGraph::list_ptr(PointId node, std::size_t level) {
  if (level == 0) return level0_.data() + std::size_t(node) * (2 * params_.M + 1);
  return upper_[node].data() + (level - 1) * (params_.M + 1);
}

const PointId* CompositeGraph::list_ptr(PointId node, std::size_t level) const {
  return const_cast<CompositeGraph*>(this)->list_ptr(node, level);
}

std::span<const PointId> CompositeGraph::neighbors(PointId node,
                                                   std::size_t level) const {
  if (node >= size() || level > levels_[node]) return {};
  const PointId* p = list_ptr(node, level);
  return {p + 1, p[0]};
}

void CompositeGraph::set_list(PointId node, std::size_t level,
                              std::span<const PointId> ids) {
  PointId* p = list_ptr(node, level);
  p[0] = static_cast<PointId>(ids.size());
  std::copy(ids.begin(), ids.end(), p + 1);
}

// ---------------------------------------------------------------------------
// Construction and traversal

struct CompositeGraph::Builder {
  CompositeGraph& g;
  const HybridDataset& ds;
  const std::size_t m;
  const std::size_t n;
  const bool locked;
  std::unique_ptr<std::mutex[]> node_locks;
  std::mutex global_lock;

  Builder(CompositeGraph& graph, bool use_locks)
      : g(graph),
        ds(*graph.ds_),
        m(graph.ds_->dim()),
        n(graph.ds_->attr_dim()),
        locked(use_locks) {
    if (locked) node_locks = std::make_unique<std::mutex[]>(g.size());
  }

  double node_distance(PointId a, PointId b) const {
    return g.metric_(ds.feature(a).data(), ds.attrs(a).data(),
                     ds.feature(b).data(), ds.attrs(b).data(), m, n);
  }

  // Copies a neighbor list, under the node's lock when building in parallel.
  void read_list(PointId node, std::size_t level,
                 std::vector<PointId>& out) const {
    if (locked) {
      std::lock_guard<std::mutex> guard(node_locks[node]);
      auto s = g.neighbors(node, level);
      out.assign(s.begin(), s.end());
    } else {
      auto s = g.neighbors(node, level);
      out.assign(s.begin(), s.end());
    }
  }

  /// HNSW heuristic: walk candidates nearest-first and keep one only if it
  /// is closer to the base than to every neighbor already kept.
  std::vector<PointId> select(const std::vector<Cand>& sorted,
                              std::size_t max_count) const {
    std::vector<PointId> out;
    if (sorted.size() <= max_count) {
      out.reserve(sorted.size());
      for (const auto& c : sorted) out.push_back(c.second);
      return out;
    }
    out.reserve(max_count);
    for (const auto& [dist, id] : sorted) {
      if (out.size() >= max_count) break;
      bool keep = true;
      for (PointId s : out) {
        if (node_distance(id, s) < dist) {
          keep = false;
          break;
        }
      }
      if (keep) out.push_back(id);
    }
    return out;
  }

  void connect(PointId node, PointId added, std::size_t level) {
    std::unique_lock<std::mutex> guard;
    if (locked) guard = std::unique_lock<std::mutex>(node_locks[node]);
    const std::size_t cap = g.params_.max_degree(level);
    auto current = g.neighbors(node, level);
    if (std::find(current.begin(), current.end(), added) != current.end())
      return;
    if (current.size() < cap) {
      PointId* p = g.list_ptr(node, level);
      p[1 + p[0]] = added;
      ++p[0];
      return;
    }
    std::vector<Cand> cands;
    cands.reserve(current.size() + 1);
    for (PointId id : current) cands.emplace_back(node_distance(node, id), id);
    cands.emplace_back(node_distance(node, added), added);
    std::sort(cands.begin(), cands.end());
    auto kept = select(cands, cap);
    g.set_list(node, level, kept);
  }

  void insert(PointId id, VisitedTable& visited, std::vector<PointId>& scratch) {
    const std::size_t node_level = g.levels_[id];
    const float* x = ds.feature(id).data();
    const std::int32_t* a = ds.attrs(id).data();
    auto dist = [&](PointId o) {
      return g.metric_(x, a, ds.feature(o).data(), ds.attrs(o).data(), m, n);
    };

    std::unique_lock<std::mutex> global;
    if (locked) global = std::unique_lock<std::mutex>(global_lock);
    PointId ep = g.entry_point_;
    std::size_t top = g.max_level_;
    if (locked && node_level <= top) global.unlock();

    Cand cur{dist(ep), ep};
    for (std::size_t l = top; l > node_level; --l)
      cur = greedy(dist, cur, l, scratch);

    for (std::size_t l = std::min(node_level, top) + 1; l-- > 0;) {
      auto found = layer_search(dist, cur, g.params_.ef_construction, l,
                                visited, scratch, nullptr);
      auto chosen = select(found, g.params_.M);
      {
        std::unique_lock<std::mutex> guard;
        if (locked) guard = std::unique_lock<std::mutex>(node_locks[id]);
        g.set_list(id, l, chosen);
      }
      for (PointId nb : chosen) connect(nb, id, l);
      cur = found.front();
    }

    if (node_level > top) {
      g.entry_point_ = id;
      g.max_level_ = node_level;
    }
  }

  template <class Dist>
  Cand greedy(Dist&& dist, Cand cur, std::size_t level,
              std::vector<PointId>& scratch, SearchStats* stats = nullptr) const {
    bool moved = true;
    while (moved) {
      moved = false;
      read_list(cur.second, level, scratch);
      if (stats) stats->distance_evals += scratch.size();
      for (PointId nb : scratch) {
        double d = dist(nb);
        if (d < cur.first || (d == cur.first && nb < cur.second)) {
          cur = {d, nb};
          moved = true;
        }
      }
      if (stats && moved) ++stats->hops;
    }
    return cur;
  }

  /// Best-first beam search on one level. Returns up to ef candidates sorted
  /// ascending by (distance, id).
  template <class Dist>
  std::vector<Cand> layer_search(Dist&& dist, Cand start, std::size_t ef,
                                 std::size_t level, VisitedTable& visited,
                                 std::vector<PointId>& scratch,
                                 SearchStats* stats) const {
    visited.reset(g.size());
    std::priority_queue<Cand, std::vector<Cand>, std::greater<>> frontier;
    std::priority_queue<Cand> best;
    visited.visit(start.second);
    frontier.push(start);
    best.push(start);
    while (!frontier.empty()) {
      Cand c = frontier.top();
      if (best.size() >= ef && c > best.top()) break;
      frontier.pop();
      if (stats) ++stats->hops;
      read_list(c.second, level, scratch);
      for (PointId nb : scratch) {
        if (!visited.visit(nb)) continue;
        Cand e{dist(nb), nb};
        if (stats) ++stats->distance_evals;
        if (best.size() < ef || e < best.top()) {
          frontier.push(e);
          best.push(e);
          if (best.size() > ef) best.pop();
        }
      }
    }
    std::vector<Cand> out(best.size());
    for (std::size_t i = out.size(); i-- > 0;) {
      out[i] = best.top();
      best.pop();
    }
    return out;
  }
};

CompositeGraph CompositeGraph::build(std::shared_ptr<const HybridDataset> ds,
                                     const FusionParams& fusion,
                                     const GraphParams& params,
                                     std::size_t threads) {
  if (!ds || ds->empty()) throw EmptyDataset();
  params.validate();
  CompositeGraph g(ds, fusion, params);

  // Levels are drawn up front so parallel builds see the same hierarchy.
  std::mt19937_64 rng(mix_seed(params.seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double norm = params.effective_level_norm();
  std::vector<std::uint32_t> levels(ds->size());
  for (auto& l : levels) {
    double u = 1.0 - unit(rng);  // (0, 1]
    l = static_cast<std::uint32_t>(std::floor(-std::log(u) * norm));
  }
  g.allocate(std::move(levels));
  g.entry_point_ = 0;
  g.max_level_ = g.levels_[0];

  const std::size_t count = ds->size();
  threads = std::max<std::size_t>(1, std::min(threads, count));
  Builder b(g, threads > 1);
  if (threads == 1) {
    VisitedTable visited;
    std::vector<PointId> scratch;
    for (std::size_t i = 1; i < count; ++i)
      b.insert(static_cast<PointId>(i), visited, scratch);
    return g;
  }

  std::atomic<std::size_t> next{1};
  std::exception_ptr failure;
  std::mutex failure_lock;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      VisitedTable visited;
      std::vector<PointId> scratch;
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          b.insert(static_cast<PointId>(i), visited, scratch);
        } catch (...) {
          std::lock_guard<std::mutex> guard(failure_lock);
          failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return g;
}

std::vector<SearchHit> CompositeGraph::search(const HybridQuery& q,
                                              SearchStats* stats) const {
  validate_query(q, ds_->dim(), ds_->attr_dim());
  thread_local VisitedTable visited;
  thread_local std::vector<PointId> scratch;

  // Builder is only used for its traversal routines; no locks on a finished graph.
  Builder walker(const_cast<CompositeGraph&>(*this), false);
  const float* x = q.feature.data();
  const std::int32_t* a = q.attrs.data();
  const std::size_t m = ds_->dim();
  const std::size_t n = ds_->attr_dim();
  auto dist = [&](PointId o) {
    return metric_(x, a, ds_->feature(o).data(), ds_->attrs(o).data(), m, n);
  };

  Cand cur{dist(entry_point_), entry_point_};
  if (stats) ++stats->distance_evals;
  for (std::size_t l = max_level_; l > 0; --l)
    cur = walker.greedy(dist, cur, l, scratch, stats);
  auto found = walker.layer_search(dist, cur, q.ef_search, 0, visited, scratch,
                                   stats);

  std::vector<SearchHit> hits;
  const std::size_t k = std::min(q.k, found.size());
  hits.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    PointId id = found[i].second;
    auto p = metric_.parts(x, a, ds_->feature(id).data(),
                           ds_->attrs(id).data(), m, n);
    hits.push_back({id, p.fused, p.feature, p.attrs_match});
  }
  return hits;
}

std::size_t CompositeGraph::reachable_at_level0() const {
  if (levels_.empty()) return 0;
  std::vector<char> seen(size(), 0);
  std::vector<PointId> stack{entry_point_};
  seen[entry_point_] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    PointId cur = stack.back();
    stack.pop_back();
    for (PointId nb : neighbors(cur, 0)) {
      if (!seen[nb]) {
        seen[nb] = 1;
        ++count;
        stack.push_back(nb);
      }
    }
  }
  return count;
}

bool CompositeGraph::same_structure(const CompositeGraph& other) const {
  if (size() != other.size() || entry_point_ != other.entry_point_ ||
      max_level_ != other.max_level_ || params_.M != other.params_.M ||
      params_.ef_construction != other.params_.ef_construction ||
      !(fusion() == other.fusion()) ||
      feature_metric() != other.feature_metric() || levels_ != other.levels_)
    return false;
  for (PointId v = 0; v < size(); ++v) {
    for (std::size_t l = 0; l <= levels_[v]; ++l) {
      auto x = neighbors(v, l);
      auto y = other.neighbors(v, l);
      if (!std::equal(x.begin(), x.end(), y.begin(), y.end())) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Persistence

void CompositeGraph::save(const std::filesystem::path& path) const {
  LeWriter out(path);
  out.bytes(kMagic, 4);
  out.u32(kFormatVersion);
  out.u32(0);  // flags
  out.u32(static_cast<std::uint32_t>(params_.M));
  out.u32(static_cast<std::uint32_t>(params_.ef_construction));
  out.f64(fusion().w());
  out.f64(fusion().bias());
  out.f64(fusion().g_max());
  out.u8(static_cast<std::uint8_t>(fusion().attr_metric()));
  out.u8(static_cast<std::uint8_t>(feature_metric()));
  out.u64(size());
  out.u64(entry_point_);
  out.u32(static_cast<std::uint32_t>(max_level_));
  auto sum = ds_->checksum();
  out.bytes(sum.data(), sum.size());
  for (PointId v = 0; v < size(); ++v) {
    out.u32(levels_[v]);
    for (std::size_t l = 0; l <= levels_[v]; ++l) {
      auto nb = neighbors(v, l);
      out.u32(static_cast<std::uint32_t>(nb.size()));
      for (PointId id : nb) out.u32(id);
    }
  }
  out.finish();
}

CompositeGraph CompositeGraph::load(const std::filesystem::path& path,
                                    std::shared_ptr<const HybridDataset> ds) {
  if (!ds) throw InvalidArgument("load requires a dataset");
  LeReader in(path);
  char magic[4];
  in.bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kMagic))
    throw FormatError("'" + path.string() + "' is not an index file (bad magic)");
  std::uint32_t version = in.u32();
  if (version != kFormatVersion)
    throw FormatError("unsupported index version " + std::to_string(version));
  in.u32();  // flags
  GraphParams gp;
  gp.M = in.u32();
  gp.ef_construction = in.u32();
  double w = in.f64();
  double bias = in.f64();
  double g_max = in.f64();
  std::uint8_t attr_metric = in.u8();
  std::uint8_t feature_metric = in.u8();
  if (attr_metric > 2 || feature_metric > 1)
    throw FormatError("unknown metric code in index header");
  if (gp.M < 2) throw FormatError("invalid M in index header");
  FusionParams fusion =
      FusionParams::make(w, bias, g_max, static_cast<AttrMetric>(attr_metric));
  std::uint64_t count = in.u64();
  std::uint64_t entry = in.u64();
  std::uint32_t max_level = in.u32();
  std::array<std::uint8_t, 16> sum;
  in.bytes(sum.data(), sum.size());

  if (count != ds->size())
    throw DatasetMismatch("index has " + std::to_string(count) +
                          " points, dataset has " + std::to_string(ds->size()));
  if (static_cast<FeatureMetric>(feature_metric) != ds->metric())
    throw DatasetMismatch("index feature metric differs from dataset metric");
  if (sum != ds->checksum())
    throw DatasetMismatch("dataset checksum differs from the one recorded in the index");
  if (entry >= count) throw FormatError("entry point out of range");

  CompositeGraph g(ds, fusion, gp);
  g.levels_.resize(count);
  std::vector<std::vector<std::vector<PointId>>> lists(count);
  for (std::uint64_t v = 0; v < count; ++v) {
    std::uint32_t lvl = in.u32();
    if (lvl > max_level) throw FormatError("node level exceeds max level");
    g.levels_[v] = lvl;
    lists[v].resize(lvl + 1);
    for (std::uint32_t l = 0; l <= lvl; ++l) {
      std::uint32_t cnt = in.u32();
      if (cnt > gp.max_degree(l)) throw FormatError("neighbor list over capacity");
      lists[v][l].resize(cnt);
      for (auto& id : lists[v][l]) {
        id = in.u32();
        if (id >= count) throw FormatError("neighbor id out of range");
      }
    }
  }
  if (!in.at_end()) throw FormatError("trailing bytes after index payload");
  if (g.levels_[entry] != max_level)
    throw FormatError("entry point is not on the top level");

  auto levels = g.levels_;
  g.allocate(std::move(levels));
  for (PointId v = 0; v < count; ++v)
    for (std::size_t l = 0; l < lists[v].size(); ++l) g.set_list(v, l, lists[v][l]);
  g.entry_point_ = static_cast<PointId>(entry);
  g.max_level_ = max_level;
  return g;
}

}  // namespace hqann
