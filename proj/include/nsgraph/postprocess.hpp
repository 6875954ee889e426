#pragma once

#include <filesystem>
#include <limits>
#include <vector>

#include "nsgraph/filter_components.hpp"
#include "nsgraph/knn_graph.hpp"
#include "nsgraph/ncut.hpp"

namespace nsg {

// Groups of cluster ids to union.
struct MergeSpec {
  std::vector<std::vector<std::int32_t>> groups;
  bool operator==(const MergeSpec&) const = default;
};

Partition merge_clusters(const Partition& p, const MergeSpec& spec);

// Proposes merging cluster pairs whose surviving inter-cluster edge count
// (both directions) divided by the smaller cluster's size exceeds
// `density_min`; pairs are closed transitively into groups.
MergeSpec suggest_merges(const Partition& p, const KnnGraph& g, const EdgeMask& keep,
                         double density_min);

struct ReassignParams {
  std::size_t major_min_size = 300;
  std::size_t iterations = 2;
};

// Clusters of at least major_min_size points are fixed at entry; everything
// else is unassigned and then, per pass, takes the cluster of its closest
// original neighbour that was assigned before the pass began.
Partition reassign_small(const Partition& p, const KnnGraph& g, const ReassignParams& params);

// Unweighted mean over true classes of the best F1 against any cluster.
// Unassigned points count as one extra candidate cluster.
double f_measure(const Partition& p, const std::vector<int>& truth);

struct ClassScore {
  int label = 0;
  std::size_t size = 0;
  double f1 = 0.0;
  std::int32_t best_cluster = kUnassigned;
};
std::vector<ClassScore> f_measure_table(const Partition& p, const std::vector<int>& truth);

// "merge 3 7 12" lines; '#' starts a comment.
MergeSpec read_merge_spec(const std::filesystem::path& path);
void write_merge_spec(const std::filesystem::path& path, const MergeSpec& spec);

}  // namespace nsg
