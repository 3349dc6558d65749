#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hqann {

using PointId = std::uint32_t;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A vector (feature, attribute or query) has the wrong length.
class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::string what_dim, std::size_t expected,
                    std::size_t actual, std::int64_t point_id = -1);

  std::int64_t point_id() const { return point_id_; }
  std::size_t expected() const { return expected_; }
  std::size_t actual() const { return actual_; }

 private:
  std::int64_t point_id_;
  std::size_t expected_;
  std::size_t actual_;
};

class NotNormalized : public Error {
 public:
  NotNormalized(PointId id, double norm);
  PointId point_id() const { return id_; }
  double norm() const { return norm_; }

 private:
  PointId id_;
  double norm_;
};

class NonContiguousIds : public Error {
 public:
  NonContiguousIds(std::size_t position, std::int64_t found_id);
};

class BiasTooSmall : public Error {
 public:
  explicit BiasTooSmall(double min_bias);
  /// Smallest bias the inequality would accept is anything strictly above this.
  double min_bias() const { return min_bias_; }

 private:
  double min_bias_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class EmptyDataset : public Error {
 public:
  EmptyDataset() : Error("dataset is empty") {}
};

class BudgetTooSmall : public Error {
 public:
  BudgetTooSmall(std::size_t ef_search, std::size_t k);
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class DatasetMismatch : public Error {
 public:
  using Error::Error;
};

class RaggedDims : public Error {
 public:
  RaggedDims(std::size_t record, std::size_t expected, std::size_t actual);
  std::size_t record() const { return record_; }

 private:
  std::size_t record_;
};

class TruncatedRecord : public Error {
 public:
  explicit TruncatedRecord(std::size_t record);
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

enum class FeatureMetric : std::uint8_t { L2 = 0, IP = 1 };

enum class AttrMetric : std::uint8_t {
  ManhattanLog = 0,
  Hamming = 1,
  // Attribute term contributes nothing; yields a plain feature-space graph.
  Ignore = 2,
};

std::string to_string(FeatureMetric m);
std::string to_string(AttrMetric m);
FeatureMetric parse_feature_metric(const std::string& s);
AttrMetric parse_attr_metric(const std::string& s);

/// Owning form of one hybrid datapoint, used when assembling a dataset.
struct HybridPoint {
  std::int64_t id = 0;
  std::vector<float> feature;
  std::vector<std::int32_t> attrs;
};

struct DatasetShape {
  std::size_t m = 0;  // feature dims
  std::size_t n = 0;  // attribute dims
  FeatureMetric metric = FeatureMetric::IP;
};

inline constexpr double kNormTolerance = 1e-4;

/// Checks ids, dimensions and (for IP) unit norm. Throws the first violation
/// found scanning points in order; each point is checked id, feature length,
/// attribute length, norm.
void validate_dataset(std::span<const HybridPoint> points,
                      const DatasetShape& shape);

/// Immutable, validated collection of hybrid points in contiguous storage.
class HybridDataset {
 public:
  HybridDataset() = default;

  /// Flat row-major storage; throws if sizes disagree or norms are off.
  HybridDataset(DatasetShape shape, std::vector<float> features,
                std::vector<std::int32_t> attrs);

  static HybridDataset from_points(std::span<const HybridPoint> points,
                                   const DatasetShape& shape);

  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  std::size_t dim() const { return shape_.m; }
  std::size_t attr_dim() const { return shape_.n; }
  FeatureMetric metric() const { return shape_.metric; }
  const DatasetShape& shape() const { return shape_; }

  std::span<const float> feature(std::size_t id) const {
    return {features_.data() + id * shape_.m, shape_.m};
  }
  std::span<const std::int32_t> attrs(std::size_t id) const {
    return {attrs_.data() + id * shape_.n, shape_.n};
  }

  const std::vector<float>& features() const { return features_; }
  const std::vector<std::int32_t>& all_attrs() const { return attrs_; }

  HybridPoint point(std::size_t id) const;

  /// Same features, different attributes (attribute dims may change).
  HybridDataset with_attrs(std::size_t n, std::vector<std::int32_t> attrs) const;

  /// 16-byte fingerprint: count, m, n and an xor-fold of feature/attr bytes.
  std::array<std::uint8_t, 16> checksum() const;

 private:
  DatasetShape shape_;
  std::size_t count_ = 0;
  std::vector<float> features_;
  std::vector<std::int32_t> attrs_;
};

/// Metric configuration for the fused hybrid distance.
class FusionParams {
 public:
  static constexpr double kDefaultW = 0.25;
  static constexpr double kDefaultBias = 4.3219;
  static constexpr double kDefaultGMax = 1.0;

  /// Defaults: w = 0.25, bias = 4.3219, g_max = 1, Manhattan mapping.
  FusionParams();

  /// Rejects unless w > 0, g_max > 0 and bias > w * g_max + 1/log10(2).
  static FusionParams make(double w, double bias, double g_max,
                           AttrMetric attr_metric);

  /// Parameters whose attribute term is always zero (feature-only ranking).
  static FusionParams feature_only(double g_max = 2.0);

  /// Strict lower bound for bias: w * g_max + 1/log10(2).
  static double min_bias(double w, double g_max);

  double w() const { return w_; }
  double bias() const { return bias_; }
  double g_max() const { return g_max_; }
  AttrMetric attr_metric() const { return attr_metric_; }

  friend bool operator==(const FusionParams&, const FusionParams&) = default;

 private:
  FusionParams(double w, double bias, double g_max, AttrMetric attr_metric)
      : w_(w), bias_(bias), g_max_(g_max), attr_metric_(attr_metric) {}

  double w_;
  double bias_;
  double g_max_;
  AttrMetric attr_metric_;
};

inline FusionParams make_fusion_params(double w, double bias, double g_max,
                                       AttrMetric attr_metric) {
  return FusionParams::make(w, bias, g_max, attr_metric);
}

struct HybridQuery {
  std::vector<float> feature;
  std::vector<std::int32_t> attrs;
  std::size_t k = 10;
  std::size_t ef_search = 80;
};

/// Throws DimensionMismatch or BudgetTooSmall.
void validate_query(const HybridQuery& q, std::size_t m, std::size_t n);

/// Builds one query per row of `ds`, with shared k / ef_search.
std::vector<HybridQuery> queries_from(const HybridDataset& ds, std::size_t k,
                                      std::size_t ef_search);

struct SearchHit {
  PointId id = 0;
  double fused_dist = 0.0;
  double feature_dist = 0.0;
  bool attrs_match = false;

  friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

/// Ascending fused distance, ties by ascending id.
inline bool hit_less(const SearchHit& a, const SearchHit& b) {
  return a.fused_dist < b.fused_dist ||
         (a.fused_dist == b.fused_dist && a.id < b.id);
}

}  // namespace hqann
