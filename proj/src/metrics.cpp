#include "hqann/metrics.hpp"

#include <cstdlib>
#include <vector>

namespace hqann {

namespace {

void check_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw DimensionMismatch(what, a, b);
}

constexpr std::int64_t kTableSize = 4096;

}  // namespace

double inverse_log_term(std::int64_t e) {
  static const std::vector<double> table = [] {
    std::vector<double> t(kTableSize);
    for (std::int64_t i = 1; i < kTableSize; ++i)
      t[i] = 1.0 / std::log10(static_cast<double>(i) + 1.0);
    return t;
  }();
  if (e > 0 && e < kTableSize) return table[e];
  return 1.0 / std::log10(static_cast<double>(e) + 1.0);
}

double feature_distance(FeatureMetric metric, std::span<const float> x,
                        std::span<const float> y) {
  check_same(x.size(), y.size(), "feature");
  return FusedMetric(FusionParams(), metric).feature(x.data(), y.data(),
                                                     x.size());
}

std::int64_t manhattan_distance(std::span<const std::int32_t> v,
                                std::span<const std::int32_t> w) {
  check_same(v.size(), w.size(), "attribute");
  std::int64_t e = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    e += std::llabs(std::int64_t(v[i]) - std::int64_t(w[i]));
  return e;
}

std::int64_t hamming_attribute_distance(std::span<const std::int32_t> v,
                                        std::span<const std::int32_t> w) {
  check_same(v.size(), w.size(), "attribute");
  std::int64_t h = 0;
  for (std::size_t i = 0; i < v.size(); ++i) h += v[i] != w[i];
  return h;
}

double attribute_distance(const FusionParams& params,
                          std::span<const std::int32_t> v,
                          std::span<const std::int32_t> w) {
  check_same(v.size(), w.size(), "attribute");
  return FusedMetric(params, FeatureMetric::IP)
      .attribute(v.data(), w.data(), v.size());
}

double fused_distance(const FusionParams& params, FeatureMetric metric,
                      std::span<const float> xa, std::span<const std::int32_t> va,
                      std::span<const float> xb,
                      std::span<const std::int32_t> vb) {
  check_same(xa.size(), xb.size(), "feature");
  check_same(va.size(), vb.size(), "attribute");
  return FusedMetric(params, metric)(xa.data(), va.data(), xb.data(),
                                     vb.data(), xa.size(), va.size());
}

}  // namespace hqann
