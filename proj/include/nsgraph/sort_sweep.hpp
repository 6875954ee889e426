#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "nsgraph/edge_similarity.hpp"
#include "nsgraph/filter_components.hpp"
#include "nsgraph/knn_graph.hpp"

namespace nsg {

struct SweepStep {
  double threshold = 0.0;
  // Display order: permutation[pos] = node id.
  std::vector<NodeId> permutation;
  ComponentLabeling labeling;
};

// Steps run from the strictest threshold (1) to the most lenient (0).
struct SweepResult {
  std::vector<SweepStep> steps;

  std::vector<double> thresholds() const;
  // Index of the largest sweep threshold <= x (x clamped to [0, 1]).
  std::size_t snap(double x) const;
};

inline constexpr std::size_t kDefaultSweepSteps = 50;

// Thresholds 1 - i/(steps-1), i = 0..steps-1.
std::vector<double> sweep_thresholds(std::size_t steps);

// Adjacency-matrix sorting sweep over the combined score sA. At each step the
// previous step's components become blocks; blocks are grouped into the new
// components, ordered by decreasing size inside each component (ties: smaller
// min node id), and components are ordered the same way. Order inside a block
// is carried over unchanged.
SweepResult sweep_sort(const KnnGraph& g, const EdgeScores& scores,
                       std::size_t steps = kDefaultSweepSteps);

// One sweep step: regroup `prev_perm` (whose blocks are `prev`) by `next`.
std::vector<NodeId> regroup(const std::vector<NodeId>& prev_perm, const ComponentLabeling& prev,
                            const ComponentLabeling& next);

inline constexpr std::uint8_t kPixelKept = 0;
inline constexpr std::uint8_t kPixelRemoved = 160;
inline constexpr std::uint8_t kPixelEmpty = 255;

struct Box {
  std::int32_t component = 0;
  std::size_t offset = 0;  // first position in the permutation
  std::size_t size = 0;    // node count
};

struct Raster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  std::uint8_t at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
};

// Grey-scale adjacency image under `perm`: row = position of the source,
// column = position of the target. With downsample m > 1 each output pixel
// covers an m x m tile and takes the darkest value inside it.
Raster render_adjacency(const std::vector<NodeId>& perm, const KnnGraph& g, const EdgeMask& keep,
                        std::size_t downsample = 1);

// Contiguous blocks of components with at least `min_size` nodes under `perm`.
// Requires every component to be contiguous in `perm`.
std::vector<Box> component_boxes(const std::vector<NodeId>& perm, const ComponentLabeling& c,
                                 std::size_t min_size = 2);

std::vector<std::uint8_t> encode_pgm(const Raster& r);
void write_pgm(const std::filesystem::path& path, const Raster& r);
Raster decode_pgm(const std::vector<std::uint8_t>& bytes);

// "threshold n_components p0 p1 ..." per step.
void write_sweep(const std::filesystem::path& path, const SweepResult& s);

}  // namespace nsg
