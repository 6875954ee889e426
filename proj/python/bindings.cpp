#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "nsgraph/dataset.hpp"
#include "nsgraph/edge_similarity.hpp"
#include "nsgraph/error.hpp"
#include "nsgraph/filter_components.hpp"
#include "nsgraph/knn_graph.hpp"
#include "nsgraph/ncut.hpp"
#include "nsgraph/postprocess.hpp"
#include "nsgraph/sort_sweep.hpp"

namespace py = pybind11;

namespace {

using Points = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Ids = py::array_t<std::int32_t, py::array::c_style | py::array::forcecast>;
using Mask = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

template <typename T>
py::array_t<T> to_array(const std::vector<T>& v) {
  return py::array_t<T>(static_cast<py::ssize_t>(v.size()), v.data());
}

template <typename T, typename A>
std::vector<T> to_vector(const A& a) {
  return std::vector<T>(a.data(), a.data() + a.size());
}

nsg::Dataset dataset(const Points& points) {
  if (points.ndim() != 2) throw nsg::Error("points must be a 2-D array");
  nsg::PointMatrix p(points.shape(0), points.shape(1));
  std::copy(points.data(), points.data() + points.size(), p.data());
  return nsg::Dataset(std::move(p));
}

nsg::EdgeMask mask(const nsg::KnnGraph& g, const Mask& m) {
  if (static_cast<std::size_t>(m.size()) != g.num_edges()) throw nsg::Error("mask length must equal n * k");
  return to_vector<std::uint8_t>(m);
}

nsg::Partition partition(const Ids& ids) { return nsg::make_partition(to_vector<std::int32_t>(ids)); }

py::array_t<double> matrix(const nsg::PointMatrix& p) {
  py::array_t<double> out({p.rows(), p.cols()});
  std::copy(p.data(), p.data() + p.size(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_nsgraph, m) {
  m.doc() = "Neighbourhood-similarity kNN graph toolkit";
  py::register_exception<nsg::Error>(m, "NsgraphError", PyExc_ValueError);

  py::class_<nsg::KnnGraph>(m, "KnnGraph")
      .def_property_readonly("n", &nsg::KnnGraph::n)
      .def_property_readonly("k", &nsg::KnnGraph::k)
      .def_property_readonly("metric", &nsg::KnnGraph::metric_tag)
      .def_property_readonly("neighbors",
                             [](const nsg::KnnGraph& g) {
                               py::array_t<std::uint32_t> a({g.n(), g.k()});
                               for (std::size_t i = 0; i < g.n(); ++i)
                                 std::copy(g.neighbors(i).begin(), g.neighbors(i).end(), a.mutable_data(i, 0));
                               return a;
                             })
      .def_property_readonly("distances",
                             [](const nsg::KnnGraph& g) {
                               py::array_t<double> a({g.n(), g.k()});
                               for (std::size_t i = 0; i < g.n(); ++i)
                                 std::copy(g.dists(i).begin(), g.dists(i).end(), a.mutable_data(i, 0));
                               return a;
                             })
      .def("save", [](const nsg::KnnGraph& g, const std::filesystem::path& p) { nsg::write_edge_list(p, g); })
      .def_static("load", &nsg::read_edge_list)
      .def("__eq__", [](const nsg::KnnGraph& a, const nsg::KnnGraph& b) { return a == b; })
      .def("__repr__", [](const nsg::KnnGraph& g) {
        return "KnnGraph(n=" + std::to_string(g.n()) + ", k=" + std::to_string(g.k()) + ")";
      });

  py::class_<nsg::EdgeScores>(m, "EdgeScores")
      .def_readonly("k", &nsg::EdgeScores::k)
      .def_property_readonly("sK", [](const nsg::EdgeScores& s) { return to_array(s.sK); })
      .def_property_readonly("sJ", [](const nsg::EdgeScores& s) { return to_array(s.sJ); })
      .def_property_readonly("sA", [](const nsg::EdgeScores& s) { return to_array(s.sA); })
      .def("__len__", &nsg::EdgeScores::size);

  m.def(
      "build_knn",
      [](const Points& points, std::size_t k, const std::string& metric, unsigned threads) {
        const auto d = dataset(points);
        py::gil_scoped_release release;
        return nsg::build_knn(d, {k, metric, threads});
      },
      py::arg("points"), py::arg("k") = 20, py::arg("metric") = "euclidean", py::arg("threads") = 0);

  m.def(
      "score_edges",
      [](const nsg::KnnGraph& g, unsigned threads) {
        py::gil_scoped_release release;
        return nsg::score_all_edges(g, threads);
      },
      py::arg("graph"), py::arg("threads") = 0);

  m.def(
      "ks_count",
      [](const std::vector<double>& u, const std::vector<double>& v) { return nsg::ks_count(u, v); },
      py::arg("dists_u"), py::arg("dists_v"));
  m.def("shared_neighbors", &nsg::shared_neighbors, py::arg("graph"), py::arg("u"), py::arg("v"));
  m.def("combined_similarity", &nsg::combined_similarity, py::arg("sJ"), py::arg("sK"), py::arg("k"));

  m.def(
      "filter_edges",
      [](const nsg::KnnGraph& g, const nsg::EdgeScores& s, std::optional<double> sA_min, std::optional<int> sK_max,
         std::optional<int> sJ_min) {
        nsg::FilterPredicate pred;
        if (sA_min && !sK_max && !sJ_min) {
          pred = nsg::CombinedThreshold{*sA_min};
        } else if (!sA_min && sK_max && sJ_min) {
          pred = nsg::PairThreshold{*sK_max, *sJ_min};
        } else {
          throw nsg::Error("give either sA_min, or both sK_max and sJ_min");
        }
        return to_array(nsg::filter_edges(g, s, pred));
      },
      py::arg("graph"), py::arg("scores"), py::kw_only(), py::arg("sA_min") = py::none(),
      py::arg("sK_max") = py::none(), py::arg("sJ_min") = py::none());

  m.def(
      "scc",
      [](const nsg::KnnGraph& g, std::optional<Mask> keep) {
        const auto c = nsg::scc(g, keep ? mask(g, *keep) : nsg::keep_all(g));
        return py::make_tuple(to_array(c.component_id), c.sizes);
      },
      py::arg("graph"), py::arg("mask") = py::none(),
      "Strongly connected components; returns (component_id, sizes).");

  m.def(
      "sweep",
      [](const nsg::KnnGraph& g, const nsg::EdgeScores& s, std::size_t steps) {
        const auto r = nsg::sweep_sort(g, s, steps);
        py::list out;
        for (const auto& st : r.steps) {
          py::dict d;
          d["threshold"] = st.threshold;
          d["permutation"] = to_array(st.permutation);
          d["component_id"] = to_array(st.labeling.component_id);
          d["sizes"] = st.labeling.sizes;
          out.append(std::move(d));
        }
        return out;
      },
      py::arg("graph"), py::arg("scores"), py::arg("steps") = nsg::kDefaultSweepSteps);

  m.def(
      "ncut",
      [](const nsg::KnnGraph& g, const Mask& keep, const std::vector<nsg::NodeId>& nodes, double cut_threshold,
         double stability_threshold, std::size_t min_cluster_size, std::size_t max_depth) {
        nsg::NcutParams p;
        p.cut_threshold = cut_threshold;
        p.stability_threshold = stability_threshold;
        p.min_cluster_size = min_cluster_size;
        p.max_depth = max_depth;
        const auto ug = nsg::symmetrize(g, mask(g, keep), nodes);
        nsg::NcutResult res;
        {
          py::gil_scoped_release release;
          res = nsg::ncut_recursive(ug, p);
        }
        return py::make_tuple(to_array(nsg::lift_partition(res.partition, ug, g.n()).cluster_id), res.warnings);
      },
      py::arg("graph"), py::arg("mask"), py::arg("nodes"), py::arg("cut_threshold") = 0.1,
      py::arg("stability_threshold") = 0.04, py::arg("min_cluster_size") = 50, py::arg("max_depth") = 10,
      "Recursive normalised cut of the symmetrised subgraph on `nodes`; returns (cluster_id over all n nodes, "
      "warnings).");

  m.def(
      "merge_clusters",
      [](const Ids& ids, const std::vector<std::vector<std::int32_t>>& groups) {
        return to_array(nsg::merge_clusters(partition(ids), {groups}).cluster_id);
      },
      py::arg("cluster_id"), py::arg("groups"));

  m.def(
      "suggest_merges",
      [](const Ids& ids, const nsg::KnnGraph& g, const Mask& keep, double density_min) {
        return nsg::suggest_merges(partition(ids), g, mask(g, keep), density_min).groups;
      },
      py::arg("cluster_id"), py::arg("graph"), py::arg("mask"), py::arg("density_min"));

  m.def(
      "reassign_small",
      [](const Ids& ids, const nsg::KnnGraph& g, std::size_t major_min_size, std::size_t iterations) {
        return to_array(nsg::reassign_small(partition(ids), g, {major_min_size, iterations}).cluster_id);
      },
      py::arg("cluster_id"), py::arg("graph"), py::arg("major_min_size") = 300, py::arg("iterations") = 2);

  m.def(
      "f_measure",
      [](const Ids& ids, const std::vector<int>& truth) { return nsg::f_measure(partition(ids), truth); },
      py::arg("cluster_id"), py::arg("truth"));

  m.def(
      "two_spirals",
      [](std::size_t n_per_arm, double turns, double noise, std::uint64_t seed) {
        nsg::SpiralParams sp;
        sp.n_per_arm = n_per_arm;
        sp.turns = turns;
        sp.noise_sigma = noise;
        sp.seed = seed;
        const auto d = nsg::gen_two_spirals(sp);
        return py::make_tuple(matrix(d.points()), to_array(*d.labels()));
      },
      py::arg("n_per_arm") = 500, py::arg("turns") = 2.0, py::arg("noise") = 0.05, py::arg("seed") = 0);

  m.def(
      "load_idx",
      [](const std::filesystem::path& images, std::optional<std::filesystem::path> labels) -> py::tuple {
        const auto d = nsg::load_idx_images(images);
        if (!labels) return py::make_tuple(matrix(d.points()), py::none());
        return py::make_tuple(matrix(d.points()), to_array(nsg::load_idx_labels(*labels)));
      },
      py::arg("images"), py::arg("labels") = py::none());
}
