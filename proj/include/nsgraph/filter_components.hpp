#pragma once

#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

#include "nsgraph/edge_similarity.hpp"
#include "nsgraph/knn_graph.hpp"

namespace nsg {

// Remove edges with sA < min (strict).
struct CombinedThreshold {
  double sA_min = 0.0;
};

// Remove edges with sK > max or sJ < min.
struct PairThreshold {
  int sK_max = 0;
  int sJ_min = 0;
};

using FilterPredicate = std::variant<CombinedThreshold, PairThreshold>;

// One byte per edge, 1 = kept. Aligned with KnnGraph edge numbering.
using EdgeMask = std::vector<std::uint8_t>;

EdgeMask filter_edges(const KnnGraph& g, const EdgeScores& scores, const FilterPredicate& pred);
EdgeMask keep_all(const KnnGraph& g);

// Node -> component id, ids ordered by decreasing size and then by smallest
// member id (id 0 is the largest component).
struct ComponentLabeling {
  std::vector<std::int32_t> component_id;
  std::vector<std::size_t> sizes;

  std::size_t num_components() const noexcept { return sizes.size(); }
  bool operator==(const ComponentLabeling&) const = default;
};

// Canonical relabelling of an arbitrary grouping (group ids need not be
// contiguous or ordered).
ComponentLabeling canonical_labeling(const std::vector<std::int32_t>& group);

// Strongly connected components of the masked directed graph (iterative
// Tarjan, linear time).
ComponentLabeling scc(const KnnGraph& g, const EdgeMask& keep);

// Fraction of each component's nodes carrying its modal true label.
std::vector<double> component_purity(const ComponentLabeling& labeling,
                                     const std::vector<int>& labels);

// Mask file: header "n k" then one "src dst keep" line per edge.
void write_mask(const std::filesystem::path& path, const KnnGraph& g, const EdgeMask& keep);
EdgeMask read_mask(const std::filesystem::path& path, const KnnGraph& g);

// "node_id component_id" lines, and a "component_id size" summary table.
void write_components(const std::filesystem::path& path, const ComponentLabeling& c);
void write_component_summary(const std::filesystem::path& path, const ComponentLabeling& c);
ComponentLabeling read_components(const std::filesystem::path& path);

}  // namespace nsg
