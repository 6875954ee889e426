#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nsgraph/filter_components.hpp"
#include "nsgraph/knn_graph.hpp"

namespace nsg {

// Undirected unweighted graph over a subset of the original nodes. Local
// index i corresponds to original id ids[i]; ids are ascending.
class UGraph {
 public:
  // `edges` are local index pairs; duplicates and both orientations are
  // collapsed, self-loops rejected.
  UGraph(std::vector<NodeId> ids, const std::vector<std::pair<std::size_t, std::size_t>>& edges);

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t num_edges() const noexcept { return adj_.size() / 2; }
  const std::vector<NodeId>& ids() const noexcept { return ids_; }
  std::span<const std::uint32_t> adjacent(std::size_t i) const {
    return {adj_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::size_t degree(std::size_t i) const noexcept { return offsets_[i + 1] - offsets_[i]; }

  // Subgraph induced by ascending local indices.
  UGraph induced(const std::vector<std::size_t>& locals) const;

  // Connected components as ascending local index lists, ordered by their
  // smallest member.
  std::vector<std::vector<std::size_t>> connected_components() const;

 private:
  std::vector<NodeId> ids_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> adj_;
};

// Undirected edge {u,v} iff u->v or v->u survives the mask, both in `subset`.
UGraph symmetrize(const KnnGraph& g, const EdgeMask& keep, std::vector<NodeId> subset);

struct FiedlerResult {
  std::vector<double> vector;  // unit length, generalised-problem eigenvector
  double eigenvalue = 0.0;
  double residual = 0.0;  // ||(D-W)x - lambda D x||
  std::size_t iterations = 0;
};

struct FiedlerOptions {
  double tolerance = 1e-10;
  std::size_t max_iterations = 10000;
  std::size_t krylov_dim = 160;
};

// Second smallest eigenpair of (D-W)x = lambda D x for a connected graph.
// Throws on isolated nodes and ConvergenceError when the residual does not
// reach tolerance within max_iterations operator applications.
FiedlerResult fiedler_vector(const UGraph& g, const FiedlerOptions& opts = {});

// Ncut(A,B) = cut/assoc(A,V) + cut/assoc(B,V); side[i] != 0 puts i in A.
double ncut_value(const UGraph& g, const std::vector<std::uint8_t>& side);

struct Split {
  std::vector<std::uint8_t> side;  // 1 = eigenvector entry <= threshold
  double ncut = 0.0;
  double threshold = 0.0;
};

inline constexpr std::size_t kDefaultSplitCandidates = 64;

// Best threshold cut of the eigenvector. Uses n_candidates evenly spaced
// interior thresholds, or every distinct-value cut when there are no more of
// those than n_candidates.
Split best_split(std::span<const double> eigvec, const UGraph& g,
                 std::size_t n_candidates = kDefaultSplitCandidates);

// min/max bin count of an equal-width histogram over [min, max]; 1.0 for a
// constant vector.
double stability(std::span<const double> eigvec, std::size_t bins = 10);

struct NcutParams {
  double cut_threshold = 0.1;
  double stability_threshold = 0.04;
  std::size_t min_cluster_size = 50;
  std::size_t max_depth = 10;
  std::size_t split_candidates = kDefaultSplitCandidates;
  std::size_t stability_bins = 10;
};

inline constexpr std::int32_t kUnassigned = -1;

// Node -> cluster id or kUnassigned. Cluster ids ordered by decreasing size,
// ties by smaller minimum member.
struct Partition {
  std::vector<std::int32_t> cluster_id;
  std::vector<std::size_t> sizes;

  std::size_t num_clusters() const noexcept { return sizes.size(); }
  std::size_t num_assigned() const noexcept;
  bool operator==(const Partition&) const = default;
};

// Canonical partition from arbitrary group ids; negative ids become unassigned.
Partition make_partition(const std::vector<std::int32_t>& group);

struct NcutResult {
  Partition partition;  // over the graph's local indices
  std::vector<std::string> warnings;
};

NcutResult ncut_recursive(const UGraph& g, const NcutParams& params);

// Map a partition over g's local indices onto n original nodes; nodes outside
// g are unassigned.
Partition lift_partition(const Partition& local, const UGraph& g, std::size_t n);

// "node_id cluster_id" lines, unassigned = -1.
void write_partition(const std::filesystem::path& path, const Partition& p);
Partition read_partition(const std::filesystem::path& path);

}  // namespace nsg
