#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nsgraph/dataset.hpp"
#include "nsgraph/edge_similarity.hpp"
#include "nsgraph/filter_components.hpp"
#include "nsgraph/knn_graph.hpp"
#include "nsgraph/pipeline.hpp"
#include "nsgraph/sort_sweep.hpp"

namespace nsg {

// Read-only exploration state: graph, scores, the full sweep and one edge
// mask per sweep step. Every query snaps its threshold to the sweep grid.
class Session {
 public:
  Session(Dataset data, KnnGraph graph, EdgeScores scores, std::size_t sweep_steps);

  // Dataset from the run config, graph + scores from its build artifact.
  static std::shared_ptr<const Session> load(const RunConfig& cfg);

  const Dataset& data() const noexcept { return data_; }
  const KnnGraph& graph() const noexcept { return graph_; }
  const SweepResult& sweep() const noexcept { return sweep_; }
  const EdgeMask& mask(std::size_t step) const { return masks_.at(step); }

  nlohmann::json meta() const;

  struct Adjacency {
    nlohmann::json sidecar;  // threshold, size, boxes
    std::vector<std::uint8_t> pgm;
  };
  Adjacency adjacency(double threshold, std::size_t downsample) const;
  std::size_t default_downsample() const noexcept;

  nlohmann::json components(double threshold, std::size_t member_cap = 50) const;

  // Empty when the dataset has no display coordinates.
  std::optional<nlohmann::json> points(double threshold) const;

 private:
  Dataset data_;
  KnnGraph graph_;
  EdgeScores scores_;
  SweepResult sweep_;
  std::vector<EdgeMask> masks_;
};

// JSON-over-HTTP front end. Requests before a session is attached get 503.
class ExploreServer {
 public:
  ExploreServer();
  ~ExploreServer();
  ExploreServer(const ExploreServer&) = delete;
  ExploreServer& operator=(const ExploreServer&) = delete;

  void attach(std::shared_ptr<const Session> session);

  // Returns the bound port; port 0 picks a free one.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();

 private:
  std::shared_ptr<const Session> session() const;

  struct Impl;
  std::unique_ptr<Impl> impl_;
  mutable std::mutex mutex_;
  std::shared_ptr<const Session> session_;
};

inline constexpr const char* kMultipartBoundary = "nsgraph-part";

}  // namespace nsg
