#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "nsgraph/error.hpp"
#include "nsgraph/postprocess.hpp"
#include "oracles.hpp"

namespace {

// Pairwise-count F-measure written from the definition.
double f_oracle(const std::vector<std::int32_t>& cluster, const std::vector<int>& truth) {
  std::map<int, std::vector<std::size_t>> classes;
  std::map<std::int32_t, std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    classes[truth[i]].push_back(i);
    clusters[cluster[i] < 0 ? -1 : cluster[i]].push_back(i);
  }
  double total = 0.0;
  for (const auto& [label, a] : classes) {
    double best = 0.0;
    for (const auto& [id, b] : clusters) {
      double both = 0.0;
      for (auto x : a)
        for (auto y : b) both += x == y;
      if (both == 0.0) continue;
      const double prec = both / b.size(), rec = both / a.size();
      best = std::max(best, 2.0 * prec * rec / (prec + rec));
    }
    total += best;
  }
  return total / classes.size();
}

// k-row graph from explicit rows of (target, distance).
nsg::KnnGraph graph_from_rows(const std::vector<std::vector<std::pair<nsg::NodeId, double>>>& rows) {
  std::vector<nsg::NodeId> nb;
  std::vector<double> ds;
  for (const auto& r : rows)
    for (auto [v, d] : r) {
      nb.push_back(v);
      ds.push_back(d);
    }
  return nsg::KnnGraph(rows.size(), rows.front().size(), nb, ds, "hand");
}

}  // namespace

TEST_CASE("merge_clusters: identity, pair, total, errors") {
  const auto p = nsg::make_partition({0, 0, 0, 1, 1, 2, -1});
  CHECK(nsg::merge_clusters(p, {}) == p);
  const auto m = nsg::merge_clusters(p, {{{0, 1}}});
  CHECK(m.sizes == std::vector<std::size_t>{5, 1});
  CHECK(m.cluster_id[6] == nsg::kUnassigned);
  const auto all = nsg::merge_clusters(p, {{{0, 1, 2}}});
  CHECK(all.num_clusters() == 1);
  CHECK(all.num_assigned() == p.num_assigned());
  CHECK_THROWS_AS(nsg::merge_clusters(p, {{{0, 9}}}), nsg::Error);
  CHECK_THROWS_AS(nsg::merge_clusters(p, {{{0, 1}, {1, 2}}}), nsg::Error);
}

TEST_CASE("merge_clusters preserves the assigned count on random partitions") {
  std::mt19937_64 rng(67);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::int32_t> g(50);
    for (auto& x : g) x = static_cast<std::int32_t>(rng() % 8) - 1;
    const auto p = nsg::make_partition(g);
    nsg::MergeSpec spec;
    std::vector<std::int32_t> ids(p.num_clusters());
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), rng);
    for (std::size_t i = 0; i + 1 < ids.size(); i += 3)
      spec.groups.push_back({ids[i], ids[i + 1]});
    const auto m = nsg::merge_clusters(p, spec);
    CHECK(m.num_assigned() == p.num_assigned());
    CHECK(m.num_clusters() == p.num_clusters() - spec.groups.size());
  }
}

TEST_CASE("suggest_merges: none, dense pair, infinite density") {
  // Clusters A={0,1}, B={2,3}, C={4,5}. Every A node points into B.
  const auto g = graph_from_rows({{{2, 1}, {3, 2}},
                                  {{3, 1}, {2, 2}},
                                  {{3, 1}, {0, 2}},
                                  {{2, 1}, {1, 2}},
                                  {{5, 1}, {0, 9}},
                                  {{4, 1}, {1, 9}}});
  const auto p = nsg::make_partition({0, 0, 1, 1, 2, 2});
  nsg::EdgeMask intra(g.num_edges(), 0);
  for (std::size_t e = 0; e < g.num_edges(); ++e)
    intra[e] = p.cluster_id[g.source(e)] == p.cluster_id[g.target(e)];
  CHECK(nsg::suggest_merges(p, g, intra, 0.5).groups.empty());

  // A<->B: 4 + 2 = 6 surviving edges over min size 2 gives 3.0; C<->A is masked.
  nsg::EdgeMask keep = nsg::keep_all(g);
  keep[9] = keep[11] = 0;
  const auto s = nsg::suggest_merges(p, g, keep, 0.5);
  REQUIRE(s.groups.size() == 1);
  auto grp = s.groups[0];
  std::sort(grp.begin(), grp.end());
  const std::int32_t a = p.cluster_id[0], b = p.cluster_id[2];
  CHECK(grp == std::vector<std::int32_t>{std::min(a, b), std::max(a, b)});
  CHECK(nsg::suggest_merges(p, g, keep, std::numeric_limits<double>::infinity()).groups.empty());
}

TEST_CASE("reassign_small: unchanged, singleton, two-pass chain") {
  // Major cluster {0,1,2}; 3 touches it directly, 4 only via 3, 5 only via 3 and 4.
  const auto g = graph_from_rows({{{1, 1}, {2, 2}},
                                  {{0, 1}, {2, 2}},
                                  {{0, 1}, {1, 2}},
                                  {{2, 1}, {4, 2}},
                                  {{3, 1}, {5, 2}},
                                  {{4, 1}, {3, 2}}});
  const auto p = nsg::make_partition({7, 7, 7, 1, 2, 2});
  nsg::ReassignParams rp{3, 1};
  const auto one = nsg::reassign_small(p, g, rp);
  CHECK(one.cluster_id == std::vector<std::int32_t>{0, 0, 0, 0, -1, -1});
  rp.iterations = 2;
  const auto two = nsg::reassign_small(p, g, rp);
  CHECK(two.cluster_id == std::vector<std::int32_t>{0, 0, 0, 0, 0, 0});

  rp.major_min_size = 1;
  CHECK(nsg::reassign_small(p, g, rp) == p);
  rp.major_min_size = 4;
  CHECK_THROWS_AS(nsg::reassign_small(p, g, rp), nsg::Error);
}

TEST_CASE("reassign_small: equidistant assigned neighbours resolve to the smaller id") {
  const auto g = graph_from_rows({{{1, 1}, {4, 3}},
                                  {{0, 1}, {4, 1}},
                                  {{3, 1}, {4, 1}},
                                  {{2, 1}, {4, 3}},
                                  {{1, 1}, {2, 1}}});
  const auto p = nsg::make_partition({0, 0, 1, 1, 2});
  const auto r = nsg::reassign_small(p, g, {2, 1});
  CHECK(r.cluster_id[4] == r.cluster_id[1]);
}

TEST_CASE("reassign_small on random graphs: majors fixed, unassigned set shrinks") {
  std::mt19937_64 rng(71);
  for (int t = 0; t < 50; ++t) {
    const auto g = oracle::random_knn_graph(120, 5, rng);
    std::vector<std::int32_t> grp(120);
    for (std::size_t i = 0; i < 120; ++i) grp[i] = i < 60 ? static_cast<std::int32_t>(i % 2) : static_cast<std::int32_t>(2 + rng() % 40);
    const auto p = nsg::make_partition(grp);
    std::size_t prev_unassigned = 120;
    for (std::size_t it = 0; it <= 4; ++it) {
      const auto r = nsg::reassign_small(p, g, {25, it});
      std::size_t un = 0;
      for (std::size_t i = 0; i < 120; ++i) {
        if (i < 60) REQUIRE(r.cluster_id[i] == r.cluster_id[i % 2]);
        un += r.cluster_id[i] == nsg::kUnassigned;
      }
      REQUIRE(r.cluster_id[0] != r.cluster_id[1]);
      REQUIRE(un <= prev_unassigned);
      prev_unassigned = un;
    }
  }
}

TEST_CASE("f_measure: identity, worked example, relabelling, oracle") {
  const std::vector<int> truth{0, 0, 0, 0, 1, 1};
  CHECK(nsg::f_measure(nsg::make_partition({3, 3, 3, 3, 8, 8}), truth) == 1.0);
  CHECK(nsg::f_measure(nsg::make_partition({0, 0, 0, 1, 0, 1}), truth) == doctest::Approx(0.625).epsilon(1e-15));
  CHECK(nsg::f_measure(nsg::make_partition({1, 1, 1, 0, 1, 0}), truth) == doctest::Approx(0.625).epsilon(1e-15));

  const auto table = nsg::f_measure_table(nsg::make_partition({0, 0, 0, 1, 0, 1}), truth);
  REQUIRE(table.size() == 2);
  CHECK(table[0].f1 == doctest::Approx(0.75));
  CHECK(table[1].f1 == doctest::Approx(0.5));

  // Unassigned points form their own candidate cluster.
  CHECK(nsg::f_measure(nsg::make_partition({-1, -1, -1, -1, 0, 0}), truth) == 1.0);

  CHECK_THROWS_AS(nsg::f_measure(nsg::make_partition({0, 0}), truth), nsg::Error);

  std::mt19937_64 rng(73);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<int> y(n);
    std::vector<std::int32_t> c(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng() % 4);
      c[i] = static_cast<std::int32_t>(rng() % 6) - 1;
    }
    const double f = nsg::f_measure(nsg::make_partition(c), y);
    REQUIRE(f == doctest::Approx(f_oracle(c, y)).epsilon(1e-12));
    REQUIRE(f >= 0.0);
    REQUIRE(f <= 1.0);
    std::vector<std::int32_t> relabel(c);
    for (auto& x : relabel) if (x >= 0) x = 100 - x;
    REQUIRE(nsg::f_measure(nsg::make_partition(relabel), y) == f);
  }
}

TEST_CASE("merge spec file: comments, round trip") {
  const auto dir = std::filesystem::temp_directory_path();
  std::ofstream(dir / "nsgraph_merge.txt") << "# manual merges\nmerge 3 7 12\n\nmerge 1 2  # pair\n";
  const auto s = nsg::read_merge_spec(dir / "nsgraph_merge.txt");
  CHECK(s.groups == std::vector<std::vector<std::int32_t>>{{3, 7, 12}, {1, 2}});
  nsg::write_merge_spec(dir / "nsgraph_merge2.txt", s);
  CHECK(nsg::read_merge_spec(dir / "nsgraph_merge2.txt") == s);
  std::ofstream(dir / "nsgraph_merge_bad.txt") << "merge 1 x\n";
  CHECK_THROWS_AS(nsg::read_merge_spec(dir / "nsgraph_merge_bad.txt"), nsg::Error);
}
