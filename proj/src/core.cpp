#include "hqann/core.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace hqann {

namespace {

std::string dim_message(const std::string& what, std::size_t expected,
                        std::size_t actual, std::int64_t id) {
  std::ostringstream os;
  os << what << " dimension mismatch: expected " << expected << ", got "
     << actual;
  if (id >= 0) os << " (point " << id << ")";
  return os.str();
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

DimensionMismatch::DimensionMismatch(std::string what_dim, std::size_t expected,
                                     std::size_t actual, std::int64_t point_id)
    : Error(dim_message(what_dim, expected, actual, point_id)),
      point_id_(point_id),
      expected_(expected),
      actual_(actual) {}

NotNormalized::NotNormalized(PointId id, double norm)
    : Error("point " + std::to_string(id) + " is not unit-norm (norm " +
            num(norm) + ")"),
      id_(id),
      norm_(norm) {}

NonContiguousIds::NonContiguousIds(std::size_t position, std::int64_t found_id)
    : Error("point ids must be 0..count-1 in order: position " +
            std::to_string(position) + " holds id " +
            std::to_string(found_id)) {}

BiasTooSmall::BiasTooSmall(double min_bias)
    : Error("bias must exceed w * g_max + 1/log10(2) = " + num(min_bias)),
      min_bias_(min_bias) {}

BudgetTooSmall::BudgetTooSmall(std::size_t ef_search, std::size_t k)
    : Error("ef_search (" + std::to_string(ef_search) + ") must be >= k (" +
            std::to_string(k) + ")") {}

RaggedDims::RaggedDims(std::size_t record, std::size_t expected,
                       std::size_t actual)
    : Error("record " + std::to_string(record) + " has dimension " +
            std::to_string(actual) + ", expected " + std::to_string(expected)),
      record_(record) {}

TruncatedRecord::TruncatedRecord(std::size_t record)
    : Error("truncated record " + std::to_string(record)) {}

std::string to_string(FeatureMetric m) {
  return m == FeatureMetric::IP ? "ip" : "l2";
}

std::string to_string(AttrMetric m) {
  switch (m) {
    case AttrMetric::ManhattanLog:
      return "manhattan";
    case AttrMetric::Hamming:
      return "hamming";
    case AttrMetric::Ignore:
      return "ignore";
  }
  return "unknown";
}

FeatureMetric parse_feature_metric(const std::string& s) {
  if (s == "ip" || s == "IP") return FeatureMetric::IP;
  if (s == "l2" || s == "L2") return FeatureMetric::L2;
  throw InvalidArgument("unknown feature metric '" + s + "' (expected ip|l2)");
}

AttrMetric parse_attr_metric(const std::string& s) {
  if (s == "manhattan") return AttrMetric::ManhattanLog;
  if (s == "hamming") return AttrMetric::Hamming;
  if (s == "ignore") return AttrMetric::Ignore;
  throw InvalidArgument("unknown attribute metric '" + s +
                        "' (expected manhattan|hamming|ignore)");
}

// ---------------------------------------------------------------------------

void validate_dataset(std::span<const HybridPoint> points,
                      const DatasetShape& shape) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const HybridPoint& p = points[i];
    if (p.id != static_cast<std::int64_t>(i)) throw NonContiguousIds(i, p.id);
    if (p.feature.size() != shape.m)
      throw DimensionMismatch("feature", shape.m, p.feature.size(), p.id);
    if (p.attrs.size() != shape.n)
      throw DimensionMismatch("attribute", shape.n, p.attrs.size(), p.id);
    if (shape.metric == FeatureMetric::IP) {
      double sq = 0.0;
      for (float x : p.feature) sq += double(x) * double(x);
      double norm = std::sqrt(sq);
      if (std::abs(norm - 1.0) > kNormTolerance)
        throw NotNormalized(static_cast<PointId>(p.id), norm);
    }
  }
}

HybridDataset::HybridDataset(DatasetShape shape, std::vector<float> features,
                             std::vector<std::int32_t> attrs)
    : shape_(shape), features_(std::move(features)), attrs_(std::move(attrs)) {
  if (shape_.m == 0) throw InvalidArgument("feature dimension must be > 0");
  if (features_.size() % shape_.m != 0)
    throw DimensionMismatch("feature storage", shape_.m,
                            features_.size() % shape_.m);
  count_ = features_.size() / shape_.m;
  if (attrs_.size() != count_ * shape_.n)
    throw DimensionMismatch("attribute storage", count_ * shape_.n,
                            attrs_.size());
  if (count_ > std::size_t(UINT32_MAX))
    throw InvalidArgument("dataset too large for 32-bit point ids");
  if (shape_.metric == FeatureMetric::IP) {
    for (std::size_t i = 0; i < count_; ++i) {
      double sq = 0.0;
      for (float x : feature(i)) sq += double(x) * double(x);
      double norm = std::sqrt(sq);
      if (std::abs(norm - 1.0) > kNormTolerance)
        throw NotNormalized(static_cast<PointId>(i), norm);
    }
  }
}

HybridDataset HybridDataset::from_points(std::span<const HybridPoint> points,
                                         const DatasetShape& shape) {
  validate_dataset(points, shape);
  std::vector<float> f;
  std::vector<std::int32_t> a;
  f.reserve(points.size() * shape.m);
  a.reserve(points.size() * shape.n);
  for (const auto& p : points) {
    f.insert(f.end(), p.feature.begin(), p.feature.end());
    a.insert(a.end(), p.attrs.begin(), p.attrs.end());
  }
  return HybridDataset(shape, std::move(f), std::move(a));
}

HybridPoint HybridDataset::point(std::size_t id) const {
  auto f = feature(id);
  auto a = attrs(id);
  return HybridPoint{static_cast<std::int64_t>(id), {f.begin(), f.end()},
                     {a.begin(), a.end()}};
}

HybridDataset HybridDataset::with_attrs(std::size_t n,
                                        std::vector<std::int32_t> attrs) const {
  HybridDataset out;
  out.shape_ = shape_;
  out.shape_.n = n;
  out.count_ = count_;
  if (attrs.size() != count_ * n)
    throw DimensionMismatch("attribute storage", count_ * n, attrs.size());
  out.features_ = features_;
  out.attrs_ = std::move(attrs);
  return out;
}

std::array<std::uint8_t, 16> HybridDataset::checksum() const {
  std::array<std::uint8_t, 16> out{};
  std::uint32_t header[3] = {static_cast<std::uint32_t>(count_),
                             static_cast<std::uint32_t>(shape_.m),
                             static_cast<std::uint32_t>(shape_.n)};
  std::memcpy(out.data(), header, sizeof(header));
  std::uint32_t fold = 0;
  auto fold_bytes = [&fold](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const std::uint8_t*>(data);
    for (std::size_t i = 0; i < len; ++i)
      fold ^= std::uint32_t(bytes[i]) << (8 * (i % 4));
  };
  fold_bytes(features_.data(), features_.size() * sizeof(float));
  fold_bytes(attrs_.data(), attrs_.size() * sizeof(std::int32_t));
  std::memcpy(out.data() + 12, &fold, sizeof(fold));
  return out;
}

// ---------------------------------------------------------------------------

FusionParams::FusionParams()
    : FusionParams(kDefaultW, kDefaultBias, kDefaultGMax,
                   AttrMetric::ManhattanLog) {}

double FusionParams::min_bias(double w, double g_max) {
  return w * g_max + 1.0 / std::log10(2.0);
}

FusionParams FusionParams::make(double w, double bias, double g_max,
                                AttrMetric attr_metric) {
  if (!(w > 0.0) || !std::isfinite(w))
    throw InvalidArgument("w must be a finite value > 0");
  if (!(g_max > 0.0) || !std::isfinite(g_max))
    throw InvalidArgument("g_max must be a finite value > 0");
  double lo = min_bias(w, g_max);
  if (!(bias > lo) || !std::isfinite(bias)) throw BiasTooSmall(lo);
  return FusionParams(w, bias, g_max, attr_metric);
}

FusionParams FusionParams::feature_only(double g_max) {
  return make(1.0, min_bias(1.0, g_max) + 1.0, g_max, AttrMetric::Ignore);
}

void validate_query(const HybridQuery& q, std::size_t m, std::size_t n) {
  if (q.feature.size() != m)
    throw DimensionMismatch("query feature", m, q.feature.size());
  if (q.attrs.size() != n)
    throw DimensionMismatch("query attribute", n, q.attrs.size());
  if (q.k == 0) throw InvalidArgument("k must be >= 1");
  if (q.ef_search < q.k) throw BudgetTooSmall(q.ef_search, q.k);
}

std::vector<HybridQuery> queries_from(const HybridDataset& ds, std::size_t k,
                                      std::size_t ef_search) {
  std::vector<HybridQuery> out;
  out.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto f = ds.feature(i);
    auto a = ds.attrs(i);
    out.push_back({{f.begin(), f.end()}, {a.begin(), a.end()}, k, ef_search});
  }
  return out;
}

}  // namespace hqann
