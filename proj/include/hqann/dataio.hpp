#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "hqann/core.hpp"
#include "hqann/strategies.hpp"

namespace hqann {

/// Row-major matrix as stored in *vecs files.
template <class T>
struct Matrix {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<T> data;

  std::span<const T> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
  friend bool operator==(const Matrix&, const Matrix&) = default;
};

using FloatMatrix = Matrix<float>;        // .fvecs
using IntMatrix = Matrix<std::int32_t>;   // .ivecs
using ByteMatrix = Matrix<std::uint8_t>;  // .bvecs

/// Each record: little-endian i32 dimension d, then d elements. All records
/// must share d. An empty file reads as 0 rows of dim 0.
template <class T>
Matrix<T> read_vecs(const std::filesystem::path& path);

template <class T>
void write_vecs(const std::filesystem::path& path, const Matrix<T>& m);

inline FloatMatrix read_fvecs(const std::filesystem::path& p) { return read_vecs<float>(p); }
inline IntMatrix read_ivecs(const std::filesystem::path& p) { return read_vecs<std::int32_t>(p); }
inline ByteMatrix read_bvecs(const std::filesystem::path& p) { return read_vecs<std::uint8_t>(p); }

struct SyntheticSpec {
  std::size_t count = 1000;
  std::size_t m = 32;
  std::size_t categories = 100;  // C, values per attribute dimension
  std::size_t n = 1;
  std::uint64_t seed = 42;
  bool normalized = true;  // unit-norm features and IP metric; else L2

  void validate() const;
};

/// Standard-normal features (optionally unit-normalised) and per-dimension
/// uniform attributes in [0, C). Point i draws from its own streams seeded
/// by seed ^ i, so features do not depend on C or n.
HybridDataset generate_synthetic(const SyntheticSpec& spec);

/// Query set drawn like generate_synthetic but from a separate stream.
HybridDataset generate_queries(const SyntheticSpec& spec, std::size_t count);

/// Attribute block for `count` points, same draw as generate_synthetic.
std::vector<std::int32_t> random_attributes(std::size_t count,
                                            std::size_t categories,
                                            std::size_t n, std::uint64_t seed);

/// Pairs existing feature vectors with random attributes.
HybridDataset attach_attributes(const FloatMatrix& features,
                                FeatureMetric metric, std::size_t categories,
                                std::size_t n, std::uint64_t seed);

/// Reads base features + attributes (e.g. base.fvecs / attrs.ivecs).
HybridDataset load_hybrid(const std::filesystem::path& features,
                          const std::filesystem::path& attrs,
                          FeatureMetric metric);
void save_hybrid(const HybridDataset& ds, const std::filesystem::path& features,
                 const std::filesystem::path& attrs);

FloatMatrix feature_matrix(const HybridDataset& ds);

/// Ground truth rows as ivecs; kNoNeighbor is stored as -1.
void write_ground_truth(const std::filesystem::path& path, const GroundTruth& gt);
GroundTruth read_ground_truth(const std::filesystem::path& path);

}  // namespace hqann
