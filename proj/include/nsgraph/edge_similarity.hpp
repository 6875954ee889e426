#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "nsgraph/knn_graph.hpp"

namespace nsg {

// Per-edge scores aligned with KnnGraph edge numbering.
//   sK  cumulative-count gap between the two endpoints' distance lists, 0..k
//   sJ  number of shared out-neighbours, 0..k-1
//   sA  harmonic mean of (sJ+1)/k and 1 - sK/(k+1), in (0, 1]
struct EdgeScores {
  std::size_t k = 0;
  std::vector<std::int32_t> sK;
  std::vector<std::int32_t> sJ;
  std::vector<double> sA;

  std::size_t size() const noexcept { return sA.size(); }
  bool operator==(const EdgeScores&) const = default;
};

// k times the two-sample Kolmogorov-Smirnov statistic of two equally sized
// ascending lists. All values tied at a threshold are consumed before the
// gap is read, so the result is max_t |#{u <= t} - #{v <= t}|.
int ks_count(std::span<const double> dists_u, std::span<const double> dists_v);

// |N(u) ∩ N(v)|; throws if v is not an out-neighbour of u.
int shared_neighbors(const KnnGraph& g, NodeId u, NodeId v);

double combined_similarity(int sJ, int sK, std::size_t k);

EdgeScores score_all_edges(const KnnGraph& g, unsigned threads = 0);

// "src dst dist sK sJ sA" per edge under the edge-list header.
void write_scored_edges(const std::filesystem::path& path, const KnnGraph& g,
                        const EdgeScores& scores);

struct ScoredGraph {
  KnnGraph graph;
  EdgeScores scores;
};
ScoredGraph read_scored_edges(const std::filesystem::path& path);

}  // namespace nsg
