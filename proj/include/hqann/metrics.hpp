#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include "hqann/core.hpp"

namespace hqann {

// All distances are accumulated in double, whatever the storage type.

/// IP: 1 - <x, y>.  L2: true (rooted) Euclidean distance.
double feature_distance(FeatureMetric metric, std::span<const float> x,
                        std::span<const float> y);

/// e(v, w) = sum_k |v[k] - w[k]|, exact.
std::int64_t manhattan_distance(std::span<const std::int32_t> v,
                                std::span<const std::int32_t> w);

/// Number of dimensions where v and w differ (xor-sum mapping).
std::int64_t hamming_attribute_distance(std::span<const std::int32_t> v,
                                        std::span<const std::int32_t> w);

/// 0 when v == w, otherwise bias - 1/log10(e + 1) where e is the mapping
/// selected by params.attr_metric() (Manhattan or Hamming). Always 0 for
/// AttrMetric::Ignore.
double attribute_distance(const FusionParams& params,
                          std::span<const std::int32_t> v,
                          std::span<const std::int32_t> w);

/// 1/log10(e + 1), tabulated for small e.
double inverse_log_term(std::int64_t e);

/// bias - 1/log10(e + 1) for a mapped difference e >= 1.
inline double attribute_distance_from_mapping(double bias, std::int64_t e) {
  return bias - inverse_log_term(e);
}

/// w * g(xa, xb) + f(va, vb).
double fused_distance(const FusionParams& params, FeatureMetric metric,
                      std::span<const float> xa, std::span<const std::int32_t> va,
                      std::span<const float> xb,
                      std::span<const std::int32_t> vb);

/// Both components of one fused evaluation.
struct FusedParts {
  double fused;
  double feature;
  bool attrs_match;
};

/// Hot-path evaluator bound to one metric configuration. Dimensions are
/// assumed checked by the caller.
class FusedMetric {
 public:
  FusedMetric(FusionParams params, FeatureMetric metric)
      : params_(params), metric_(metric) {}

  const FusionParams& params() const { return params_; }
  FeatureMetric feature_metric() const { return metric_; }

  double feature(const float* x, const float* y, std::size_t m) const {
    double acc = 0.0;
    if (metric_ == FeatureMetric::IP) {
      for (std::size_t i = 0; i < m; ++i) acc += double(x[i]) * double(y[i]);
      return 1.0 - acc;
    }
    for (std::size_t i = 0; i < m; ++i) {
      double d = double(x[i]) - double(y[i]);
      acc += d * d;
    }
    return std::sqrt(acc);
  }

  double attribute(const std::int32_t* v, const std::int32_t* w,
                   std::size_t n) const {
    if (params_.attr_metric() == AttrMetric::Ignore) return 0.0;
    std::int64_t e = 0;
    if (params_.attr_metric() == AttrMetric::Hamming) {
      for (std::size_t i = 0; i < n; ++i) e += v[i] != w[i];
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        std::int64_t d = std::int64_t(v[i]) - std::int64_t(w[i]);
        e += d < 0 ? -d : d;
      }
    }
    if (e == 0) return 0.0;
    return attribute_distance_from_mapping(params_.bias(), e);
  }

  double operator()(const float* xa, const std::int32_t* va, const float* xb,
                    const std::int32_t* vb, std::size_t m,
                    std::size_t n) const {
    return params_.w() * feature(xa, xb, m) + attribute(va, vb, n);
  }

  FusedParts parts(const float* xa, const std::int32_t* va, const float* xb,
                   const std::int32_t* vb, std::size_t m, std::size_t n) const {
    double g = feature(xa, xb, m);
    bool match = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (va[i] != vb[i]) {
        match = false;
        break;
      }
    }
    return {params_.w() * g + attribute(va, vb, n), g, match};
  }

 private:
  FusionParams params_;
  FeatureMetric metric_;
};

}  // namespace hqann
