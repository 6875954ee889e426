#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nsgraph/dataset.hpp"

namespace nsg {

using NodeId = std::uint32_t;

// Distance function between two equal-length points.
using MetricFn = std::function<double(std::span<const double>, std::span<const double>)>;

double euclidean(std::span<const double> a, std::span<const double> b);

// Named metric registry; "euclidean" is always present.
const MetricFn& lookup_metric(const std::string& tag);
void register_metric(const std::string& tag, MetricFn fn);

// Throws on dimension mismatch or unknown metric.
double metric_distance(std::span<const double> a, std::span<const double> b,
                       const std::string& tag = "euclidean");

// Directed kNN graph. Edge e = i*k + j is (i, neighbors[i*k + j]); each row is
// ordered by (distance, neighbor id).
class KnnGraph {
 public:
  KnnGraph(std::size_t n, std::size_t k, std::vector<NodeId> neighbors, std::vector<double> dists,
           std::string metric_tag);

  std::size_t n() const noexcept { return n_; }
  std::size_t k() const noexcept { return k_; }
  std::size_t num_edges() const noexcept { return n_ * k_; }
  const std::string& metric_tag() const noexcept { return metric_tag_; }

  std::span<const NodeId> neighbors(std::size_t i) const {
    return {neighbors_.data() + i * k_, k_};
  }
  std::span<const double> dists(std::size_t i) const { return {dists_.data() + i * k_, k_}; }

  NodeId source(std::size_t edge) const noexcept { return static_cast<NodeId>(edge / k_); }
  NodeId target(std::size_t edge) const noexcept { return neighbors_[edge]; }
  double distance(std::size_t edge) const noexcept { return dists_[edge]; }

  const std::vector<NodeId>& all_neighbors() const noexcept { return neighbors_; }
  const std::vector<double>& all_dists() const noexcept { return dists_; }

  bool operator==(const KnnGraph&) const = default;

 private:
  std::size_t n_;
  std::size_t k_;
  std::vector<NodeId> neighbors_;
  std::vector<double> dists_;
  std::string metric_tag_;
};

struct KnnOptions {
  std::size_t k = 20;
  std::string metric = "euclidean";
  // 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
};

// Exact brute-force construction; rows are computed in parallel.
KnnGraph build_knn(const Dataset& data, const KnnOptions& opts);

// Edge list text: header "n k metric_tag" then "src dst distance" per edge.
void write_edge_list(const std::filesystem::path& path, const KnnGraph& g);
KnnGraph read_edge_list(const std::filesystem::path& path);

}  // namespace nsg
