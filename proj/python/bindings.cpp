#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>

#include "hqann/bench.hpp"
#include "hqann/dataio.hpp"
#include "hqann/graph.hpp"
#include "hqann/metrics.hpp"
#include "hqann/strategies.hpp"

namespace py = pybind11;
using namespace hqann;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<std::int32_t, py::array::c_style | py::array::forcecast>;

std::shared_ptr<HybridDataset> dataset_from_arrays(FloatArray features, IntArray attrs,
                                                   FeatureMetric metric) {
  if (features.ndim() != 2 || attrs.ndim() != 2)
    throw InvalidArgument("features and attrs must be 2-D arrays");
  if (features.shape(0) != attrs.shape(0))
    throw LengthMismatch("features and attrs have different row counts");
  DatasetShape shape{std::size_t(features.shape(1)), std::size_t(attrs.shape(1)), metric};
  std::vector<float> f(features.data(), features.data() + features.size());
  std::vector<std::int32_t> a(attrs.data(), attrs.data() + attrs.size());
  return std::make_shared<HybridDataset>(shape, std::move(f), std::move(a));
}

py::array_t<float> features_array(const HybridDataset& ds) {
  py::array_t<float> out({ds.size(), ds.dim()});
  std::copy(ds.features().begin(), ds.features().end(), out.mutable_data());
  return out;
}

py::array_t<std::int32_t> attrs_array(const HybridDataset& ds) {
  py::array_t<std::int32_t> out({ds.size(), ds.attr_dim()});
  std::copy(ds.all_attrs().begin(), ds.all_attrs().end(), out.mutable_data());
  return out;
}

HybridQuery make_query(FloatArray feature, IntArray attrs, std::size_t k, std::size_t ef) {
  return {std::vector<float>(feature.data(), feature.data() + feature.size()),
          std::vector<std::int32_t>(attrs.data(), attrs.data() + attrs.size()), k, ef};
}

// Owns the dataset alongside the graph so Python keeps both alive together.
struct PyGraph {
  std::shared_ptr<const HybridDataset> ds;
  std::shared_ptr<CompositeGraph> graph;
};

}  // namespace

PYBIND11_MODULE(_hqann, m) {
  m.doc() = "Hybrid vector + attribute nearest-neighbor search";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", error.ptr());
  py::register_exception<NotNormalized>(m, "NotNormalized", error.ptr());
  py::register_exception<BiasTooSmall>(m, "BiasTooSmall", error.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", error.ptr());
  py::register_exception<EmptyDataset>(m, "EmptyDataset", error.ptr());
  py::register_exception<BudgetTooSmall>(m, "BudgetTooSmall", error.ptr());
  py::register_exception<IoError>(m, "IoError", error.ptr());
  py::register_exception<FormatError>(m, "FormatError", error.ptr());
  py::register_exception<DatasetMismatch>(m, "DatasetMismatch", error.ptr());
  py::register_exception<LengthMismatch>(m, "LengthMismatch", error.ptr());

  py::enum_<FeatureMetric>(m, "FeatureMetric")
      .value("L2", FeatureMetric::L2)
      .value("IP", FeatureMetric::IP);
  py::enum_<AttrMetric>(m, "AttrMetric")
      .value("MANHATTAN", AttrMetric::ManhattanLog)
      .value("HAMMING", AttrMetric::Hamming)
      .value("IGNORE", AttrMetric::Ignore);

  py::class_<FusionParams>(m, "FusionParams")
      .def(py::init(&make_fusion_params), py::arg("w") = FusionParams::kDefaultW,
           py::arg("bias") = FusionParams::kDefaultBias,
           py::arg("g_max") = FusionParams::kDefaultGMax,
           py::arg("attr_metric") = AttrMetric::ManhattanLog)
      .def_static("min_bias", &FusionParams::min_bias, py::arg("w"), py::arg("g_max"))
      .def_property_readonly("w", &FusionParams::w)
      .def_property_readonly("bias", &FusionParams::bias)
      .def_property_readonly("g_max", &FusionParams::g_max)
      .def_property_readonly("attr_metric", &FusionParams::attr_metric)
      .def("__repr__", [](const FusionParams& p) {
        return "FusionParams(w=" + format_number(p.w()) + ", bias=" + format_number(p.bias()) +
               ", g_max=" + format_number(p.g_max()) + ", attr_metric=" +
               to_string(p.attr_metric()) + ")";
      });

  m.def("attribute_distance",
        [](const FusionParams& p, std::vector<std::int32_t> v, std::vector<std::int32_t> w) {
          return attribute_distance(p, v, w);
        });
  m.def("fused_distance",
        [](const FusionParams& p, FeatureMetric metric, std::vector<float> xa,
           std::vector<std::int32_t> va, std::vector<float> xb, std::vector<std::int32_t> vb) {
          return fused_distance(p, metric, xa, va, xb, vb);
        });

  py::class_<HybridDataset, std::shared_ptr<HybridDataset>>(m, "HybridDataset")
      .def(py::init(&dataset_from_arrays), py::arg("features"), py::arg("attrs"),
           py::arg("metric") = FeatureMetric::IP)
      .def("__len__", &HybridDataset::size)
      .def_property_readonly("dim", &HybridDataset::dim)
      .def_property_readonly("attr_dim", &HybridDataset::attr_dim)
      .def_property_readonly("metric", &HybridDataset::metric)
      .def_property_readonly("features", &features_array)
      .def_property_readonly("attrs", &attrs_array);

  m.def(
      "generate_synthetic",
      [](std::size_t count, std::size_t dim, std::size_t categories, std::size_t attr_dims,
         std::uint64_t seed, bool normalized) {
        return std::make_shared<HybridDataset>(
            generate_synthetic({count, dim, categories, attr_dims, seed, normalized}));
      },
      py::arg("count"), py::arg("dim") = 32, py::arg("categories") = 100,
      py::arg("attr_dims") = 1, py::arg("seed") = 42, py::arg("normalized") = true);
  m.def(
      "generate_queries",
      [](std::size_t count, std::size_t dim, std::size_t categories, std::size_t attr_dims,
         std::uint64_t seed, bool normalized) {
        return std::make_shared<HybridDataset>(generate_queries(
            {count, dim, categories, attr_dims, seed, normalized}, count));
      },
      py::arg("count"), py::arg("dim") = 32, py::arg("categories") = 100,
      py::arg("attr_dims") = 1, py::arg("seed") = 42, py::arg("normalized") = true);
  m.def("load_hybrid", [](const std::filesystem::path& f, const std::filesystem::path& a,
                          FeatureMetric metric) {
    return std::make_shared<HybridDataset>(load_hybrid(f, a, metric));
  });
  m.def("save_hybrid", [](const HybridDataset& ds, const std::filesystem::path& f,
                          const std::filesystem::path& a) { save_hybrid(ds, f, a); });

  py::class_<SearchHit>(m, "SearchHit")
      .def_readonly("id", &SearchHit::id)
      .def_readonly("fused_dist", &SearchHit::fused_dist)
      .def_readonly("feature_dist", &SearchHit::feature_dist)
      .def_readonly("attrs_match", &SearchHit::attrs_match)
      .def("__repr__", [](const SearchHit& h) {
        return "SearchHit(id=" + std::to_string(h.id) +
               ", fused_dist=" + format_number(h.fused_dist) + ")";
      });

  py::class_<PyGraph>(m, "CompositeGraph")
      .def_static(
          "build",
          [](std::shared_ptr<HybridDataset> ds, const FusionParams& fusion, std::size_t M,
             std::size_t ef_construction, std::uint64_t seed, std::size_t threads) {
            GraphParams gp;
            gp.M = M;
            gp.ef_construction = ef_construction;
            gp.seed = seed;
            std::shared_ptr<const HybridDataset> cds = ds;
            CompositeGraph g = [&] {
              py::gil_scoped_release release;
              return CompositeGraph::build(cds, fusion, gp, threads);
            }();
            return PyGraph{cds, std::make_shared<CompositeGraph>(std::move(g))};
          },
          py::arg("dataset"), py::arg("fusion") = FusionParams(), py::arg("M") = 32,
          py::arg("ef_construction") = 512, py::arg("seed") = 42, py::arg("threads") = 1)
      .def_static("load",
                  [](const std::filesystem::path& path, std::shared_ptr<HybridDataset> ds) {
                    std::shared_ptr<const HybridDataset> cds = ds;
                    return PyGraph{cds,
                                   std::make_shared<CompositeGraph>(CompositeGraph::load(path, cds))};
                  })
      .def("save", [](const PyGraph& g, const std::filesystem::path& p) { g.graph->save(p); })
      .def(
          "search",
          [](const PyGraph& g, FloatArray feature, IntArray attrs, std::size_t k,
             std::size_t ef_search) {
            return g.graph->search(make_query(feature, attrs, k, ef_search));
          },
          py::arg("feature"), py::arg("attrs"), py::arg("k") = 10, py::arg("ef_search") = 80)
      .def("__len__", [](const PyGraph& g) { return g.graph->size(); })
      .def_property_readonly("max_level", [](const PyGraph& g) { return g.graph->max_level(); })
      .def_property_readonly("fusion", [](const PyGraph& g) { return g.graph->fusion(); })
      .def("level0_connected", [](const PyGraph& g) { return g.graph->level0_connected(); })
      .def("same_structure",
           [](const PyGraph& a, const PyGraph& b) { return a.graph->same_structure(*b.graph); });

  m.def(
      "exact_fused_topk",
      [](const HybridDataset& ds, const FusionParams& p, FloatArray feature, IntArray attrs,
         std::size_t k) { return exact_fused_topk(ds, p, make_query(feature, attrs, k, k), k); },
      py::arg("dataset"), py::arg("fusion"), py::arg("feature"), py::arg("attrs"),
      py::arg("k") = 10);
  m.def(
      "exact_filtered_topk",
      [](const HybridDataset& ds, FloatArray feature, IntArray attrs, std::size_t k) {
        return exact_filtered_topk(ds, make_query(feature, attrs, k, k), k);
      },
      py::arg("dataset"), py::arg("feature"), py::arg("attrs"), py::arg("k") = 10);
  m.def("recall_at_k",
        [](const std::vector<std::vector<std::int64_t>>& results,
           const std::vector<std::vector<std::int64_t>>& gt, std::size_t k) {
          return recall_at_k(results, GroundTruth{k, gt}, k);
        });
}
