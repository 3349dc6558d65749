#include "hqann/dataio.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "hqann/rng.hpp"

namespace hqann {

static_assert(std::endian::native == std::endian::little,
              "vecs I/O assumes a little-endian host");

template <class T>
Matrix<T> read_vecs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  Matrix<T> out;
  std::size_t record = 0;
  while (true) {
    std::int32_t d = 0;
    in.read(reinterpret_cast<char*>(&d), sizeof(d));
    if (in.gcount() == 0) break;
    if (in.gcount() != sizeof(d)) throw TruncatedRecord(record);
    if (d < 0) throw FormatError("negative dimension in record " + std::to_string(record));
    if (record == 0) {
      out.dim = static_cast<std::size_t>(d);
    } else if (static_cast<std::size_t>(d) != out.dim) {
      throw RaggedDims(record, out.dim, static_cast<std::size_t>(d));
    }
    const std::size_t offset = out.data.size();
    out.data.resize(offset + out.dim);
    const auto bytes = static_cast<std::streamsize>(out.dim * sizeof(T));
    in.read(reinterpret_cast<char*>(out.data.data() + offset), bytes);
    if (in.gcount() != bytes) throw TruncatedRecord(record);
    ++record;
  }
  out.rows = record;
  return out;
}

template <class T>
void write_vecs(const std::filesystem::path& path, const Matrix<T>& m) {
  if (m.data.size() != m.rows * m.dim)
    throw InvalidArgument("matrix storage does not match rows x dim");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const auto d = static_cast<std::int32_t>(m.dim);
  for (std::size_t i = 0; i < m.rows; ++i) {
    out.write(reinterpret_cast<const char*>(&d), sizeof(d));
    out.write(reinterpret_cast<const char*>(m.data.data() + i * m.dim),
              static_cast<std::streamsize>(m.dim * sizeof(T)));
  }
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

template Matrix<float> read_vecs<float>(const std::filesystem::path&);
template Matrix<std::int32_t> read_vecs<std::int32_t>(const std::filesystem::path&);
template Matrix<std::uint8_t> read_vecs<std::uint8_t>(const std::filesystem::path&);
template void write_vecs<float>(const std::filesystem::path&, const Matrix<float>&);
template void write_vecs<std::int32_t>(const std::filesystem::path&,
                                       const Matrix<std::int32_t>&);
template void write_vecs<std::uint8_t>(const std::filesystem::path&,
                                       const Matrix<std::uint8_t>&);

// ---------------------------------------------------------------------------

void SyntheticSpec::validate() const {
  if (count == 0) throw InvalidArgument("count must be > 0");
  if (m == 0) throw InvalidArgument("feature dimension must be > 0");
  if (categories == 0) throw InvalidArgument("categories must be >= 1");
  if (n == 0) throw InvalidArgument("attribute dimension must be > 0");
  if (categories > std::size_t(INT32_MAX))
    throw InvalidArgument("categories must fit in a 32-bit integer");
}

namespace {

std::vector<float> random_features(std::size_t count, std::size_t m,
                                   bool normalized, std::uint64_t seed) {
  std::vector<float> out(count * m);
  std::vector<double> row(m);
  for (std::size_t i = 0; i < count; ++i) {
    std::mt19937_64 rng(mix_seed(seed ^ kFeatureStream ^ i));
    std::normal_distribution<double> normal(0.0, 1.0);
    double sq = 0.0;
    for (auto& x : row) {
      x = normal(rng);
      sq += x * x;
    }
    const double scale = normalized && sq > 0.0 ? 1.0 / std::sqrt(sq) : 1.0;
    for (std::size_t j = 0; j < m; ++j)
      out[i * m + j] = static_cast<float>(row[j] * scale);
  }
  return out;
}

}  // namespace

std::vector<std::int32_t> random_attributes(std::size_t count,
                                            std::size_t categories,
                                            std::size_t n, std::uint64_t seed) {
  if (categories == 0) throw InvalidArgument("categories must be >= 1");
  std::vector<std::int32_t> out(count * n);
  std::uniform_int_distribution<std::int32_t> pick(
      0, static_cast<std::int32_t>(categories - 1));
  for (std::size_t i = 0; i < count; ++i) {
    std::mt19937_64 rng(mix_seed(seed ^ kAttributeStream ^ i));
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = pick(rng);
  }
  return out;
}

HybridDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  DatasetShape shape{spec.m, spec.n,
                     spec.normalized ? FeatureMetric::IP : FeatureMetric::L2};
  return HybridDataset(
      shape, random_features(spec.count, spec.m, spec.normalized, spec.seed),
      random_attributes(spec.count, spec.categories, spec.n, spec.seed));
}

HybridDataset generate_queries(const SyntheticSpec& spec, std::size_t count) {
  SyntheticSpec q = spec;
  q.count = count;
  q.seed = mix_seed(spec.seed ^ kQueryStream);
  return generate_synthetic(q);
}

HybridDataset attach_attributes(const FloatMatrix& features,
                                FeatureMetric metric, std::size_t categories,
                                std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("attribute dimension must be > 0");
  DatasetShape shape{features.dim, n, metric};
  return HybridDataset(shape, features.data,
                       random_attributes(features.rows, categories, n, seed));
}

HybridDataset load_hybrid(const std::filesystem::path& features,
                          const std::filesystem::path& attrs,
                          FeatureMetric metric) {
  auto f = read_fvecs(features);
  auto a = read_ivecs(attrs);
  if (f.rows != a.rows)
    throw DatasetMismatch("'" + features.string() + "' has " +
                          std::to_string(f.rows) + " rows but '" +
                          attrs.string() + "' has " + std::to_string(a.rows));
  if (f.rows == 0) throw EmptyDataset();
  return HybridDataset(DatasetShape{f.dim, a.dim, metric}, std::move(f.data),
                       std::move(a.data));
}

FloatMatrix feature_matrix(const HybridDataset& ds) {
  return {ds.size(), ds.dim(), ds.features()};
}

void save_hybrid(const HybridDataset& ds, const std::filesystem::path& features,
                 const std::filesystem::path& attrs) {
  write_vecs(features, feature_matrix(ds));
  write_vecs(attrs, IntMatrix{ds.size(), ds.attr_dim(), ds.all_attrs()});
}

void write_ground_truth(const std::filesystem::path& path,
                        const GroundTruth& gt) {
  IntMatrix m{gt.rows.size(), gt.k, {}};
  m.data.reserve(m.rows * m.dim);
  for (const auto& row : gt.rows) {
    if (row.size() != gt.k) throw LengthMismatch("ground-truth row length differs from k");
    for (auto id : row) {
      if (id < kNoNeighbor || id > INT32_MAX)
        throw InvalidArgument("ground-truth id does not fit in ivecs");
      m.data.push_back(static_cast<std::int32_t>(id));
    }
  }
  write_vecs(path, m);
}

GroundTruth read_ground_truth(const std::filesystem::path& path) {
  auto m = read_ivecs(path);
  GroundTruth gt;
  gt.k = m.dim;
  gt.rows.reserve(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) {
    auto r = m.row(i);
    gt.rows.emplace_back(r.begin(), r.end());
  }
  return gt;
}

}  // namespace hqann
