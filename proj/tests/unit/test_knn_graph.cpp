#include <doctest.h>

#include <filesystem>
#include <random>

#include "nsgraph/error.hpp"
#include "nsgraph/knn_graph.hpp"
#include "oracles.hpp"

namespace {

nsg::Dataset line_points(std::initializer_list<double> xs) {
  nsg::PointMatrix p(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) p(i++, 0) = x;
  return nsg::Dataset(p);
}

std::vector<double> row(const nsg::Dataset& d, std::size_t i) {
  return {d.points().data() + i * d.dim(), d.points().data() + (i + 1) * d.dim()};
}

}  // namespace

TEST_CASE("metric_distance: 3-4-5 triangle, identity, dimension mismatch") {
  const std::vector<double> a{0, 0}, b{3, 4}, c{1, 2, 3};
  CHECK(nsg::metric_distance(a, b) == 5.0);
  CHECK(nsg::metric_distance(b, b) == 0.0);
  CHECK_THROWS_AS(nsg::metric_distance(a, c), nsg::Error);
  CHECK_THROWS_AS(nsg::metric_distance(a, b, "no-such-metric"), nsg::Error);
}

TEST_CASE("metric_distance matches a naive loop on random pairs") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 10.0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = 1 + rng() % 50;
    std::vector<double> a(d), b(d);
    for (auto& x : a) x = g(rng);
    for (auto& x : b) x = g(rng);
    const double want = oracle::naive_euclid(a, b);
    CHECK(nsg::metric_distance(a, b) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("metric registry accepts new metrics") {
  nsg::register_metric("manhattan", [](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
  });
  const std::vector<double> a{0, 0}, b{3, 4};
  CHECK(nsg::metric_distance(a, b, "manhattan") == 7.0);
  const auto d = line_points({0, 1, 3});
  const auto g = nsg::build_knn(d, {1, "manhattan", 1});
  CHECK(g.metric_tag() == "manhattan");
}

TEST_CASE("build_knn: collinear points {0,1,3} with k=1") {
  const auto g = nsg::build_knn(line_points({0, 1, 3}), {1, "euclidean", 1});
  CHECK(g.neighbors(0)[0] == 1);
  CHECK(g.neighbors(1)[0] == 0);
  CHECK(g.neighbors(2)[0] == 1);
  CHECK(g.dists(2)[0] == 2.0);
}

TEST_CASE("build_knn: k = N-1 gives every other node; k >= N rejected") {
  const auto d = line_points({0, 5, 2, 9, 1});
  const auto g = nsg::build_knn(d, {4, "euclidean", 1});
  for (std::size_t i = 0; i < 5; ++i) {
    std::vector<nsg::NodeId> ids(g.neighbors(i).begin(), g.neighbors(i).end());
    std::sort(ids.begin(), ids.end());
    std::vector<nsg::NodeId> want;
    for (nsg::NodeId j = 0; j < 5; ++j)
      if (j != i) want.push_back(j);
    CHECK(ids == want);
  }
  CHECK_THROWS_AS(nsg::build_knn(d, {5, "euclidean", 1}), nsg::Error);
  CHECK_THROWS_AS(nsg::build_knn(d, {0, "euclidean", 1}), nsg::Error);
}

TEST_CASE("build_knn: duplicate points rank by id") {
  const auto g = nsg::build_knn(line_points({1, 1, 1, 4}), {2, "euclidean", 1});
  CHECK(g.neighbors(0)[0] == 1);
  CHECK(g.neighbors(0)[1] == 2);
  CHECK(g.neighbors(2)[0] == 0);
  CHECK(g.neighbors(2)[1] == 1);
  CHECK(g.dists(2)[1] == 0.0);
}

TEST_CASE("build_knn equals the quadratic oracle on 200 random 5-D points, k=10") {
  std::mt19937_64 rng(21);
  const auto d = oracle::random_dataset(200, 5, rng);
  const auto want = oracle::knn_brute(d, 10);
  for (unsigned threads : {1u, 3u}) {
    const auto g = nsg::build_knn(d, {10, "euclidean", threads});
    for (std::size_t i = 0; i < 200; ++i) {
      CHECK(std::vector<nsg::NodeId>(g.neighbors(i).begin(), g.neighbors(i).end()) == want.neighbors[i]);
      CHECK(std::vector<double>(g.dists(i).begin(), g.dists(i).end()) == want.dists[i]);
    }
  }
}

TEST_CASE("build_knn: rows sorted, stored distances exact, exhaustive exactness") {
  std::mt19937_64 rng(5);
  const auto d = oracle::random_dataset(150, 3, rng);
  const auto g = nsg::build_knn(d, {7, "euclidean", 2});
  for (std::size_t i = 0; i < g.n(); ++i) {
    const auto nb = g.neighbors(i);
    const auto ds = g.dists(i);
    for (std::size_t j = 0; j < g.k(); ++j) {
      CHECK(ds[j] == nsg::metric_distance(row(d, i), row(d, nb[j])));
      if (j) CHECK(ds[j - 1] <= ds[j]);
    }
    for (std::size_t m = 0; m < g.n(); ++m) {
      if (m == i || std::find(nb.begin(), nb.end(), m) != nb.end()) continue;
      CHECK(nsg::metric_distance(row(d, i), row(d, m)) >= ds[g.k() - 1]);
    }
  }
}

TEST_CASE("edge list round trip preserves the graph bit for bit") {
  std::mt19937_64 rng(8);
  const auto d = oracle::random_dataset(60, 4, rng);
  const auto g = nsg::build_knn(d, {6, "euclidean", 1});
  const auto p = std::filesystem::temp_directory_path() / "nsgraph_knn_roundtrip.edges";
  nsg::write_edge_list(p, g);
  CHECK(nsg::read_edge_list(p) == g);
}

TEST_CASE("KnnGraph rejects malformed rows") {
  CHECK_THROWS_AS(nsg::KnnGraph(3, 1, {0, 0, 1}, {1, 1, 1}, "x"), nsg::Error);        // self loop
  CHECK_THROWS_AS(nsg::KnnGraph(3, 2, {1, 1, 0, 2, 0, 1}, {1, 1, 1, 1, 1, 1}, "x"), nsg::Error);  // duplicate
  CHECK_THROWS_AS(nsg::KnnGraph(3, 2, {1, 2, 0, 2, 0, 1}, {2, 1, 1, 1, 1, 1}, "x"), nsg::Error);  // unsorted
}
