#include "nsgraph/knn_graph.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <utility>

#include "nsgraph/error.hpp"

namespace nsg {

double euclidean(std::span<const double> a, std::span<const double> b) {
  // Four independent partial sums: a fixed summation order that the compiler
  // can still vectorise.
  const std::size_t n = a.size();
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t l = 0; l < 4; ++l) {
      const double t = a[i + l] - b[i + l];
      acc[l] += t * t;
    }
  }
  for (; i < n; ++i) {
    const double t = a[i] - b[i];
    acc[0] += t * t;
  }
  return std::sqrt((acc[0] + acc[1]) + (acc[2] + acc[3]));
}

namespace {

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, MetricFn>& registry() {
  static std::map<std::string, MetricFn> r{{"euclidean", MetricFn(&euclidean)}};
  return r;
}

}  // namespace

const MetricFn& lookup_metric(const std::string& tag) {
  std::lock_guard lock(registry_mutex());
  auto& r = registry();
  auto it = r.find(tag);
  if (it == r.end()) throw Error("unknown metric '" + tag + "'");
  return it->second;
}

void register_metric(const std::string& tag, MetricFn fn) {
  if (tag.empty() || tag.find_first_of(" \t\n") != std::string::npos)
    throw Error("metric tag must be a non-empty word");
  std::lock_guard lock(registry_mutex());
  registry()[tag] = std::move(fn);
}

double metric_distance(std::span<const double> a, std::span<const double> b,
                       const std::string& tag) {
  if (a.size() != b.size()) {
    throw Error("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()));
  }
  return lookup_metric(tag)(a, b);
}

KnnGraph::KnnGraph(std::size_t n, std::size_t k, std::vector<NodeId> neighbors,
                   std::vector<double> dists, std::string metric_tag)
    : n_(n), k_(k), neighbors_(std::move(neighbors)), dists_(std::move(dists)),
      metric_tag_(std::move(metric_tag)) {
  if (k_ < 1 || k_ >= n_) throw Error("kNN graph needs 1 <= k <= n-1");
  if (neighbors_.size() != n_ * k_ || dists_.size() != n_ * k_)
    throw Error("kNN graph arrays must hold n*k entries");
  std::vector<std::size_t> seen(n_, static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < k_; ++j) {
      const std::size_t e = i * k_ + j;
      const NodeId v = neighbors_[e];
      if (v >= n_ || v == i) throw Error("invalid neighbor id in row " + std::to_string(i));
      if (seen[v] == i) throw Error("duplicate neighbor in row " + std::to_string(i));
      seen[v] = i;
      if (!std::isfinite(dists_[e]) || dists_[e] < 0.0)
        throw Error("invalid distance in row " + std::to_string(i));
      if (j > 0) {
        const double prev = dists_[e - 1];
        if (prev > dists_[e] || (prev == dists_[e] && neighbors_[e - 1] > v))
          throw Error("row " + std::to_string(i) + " is not sorted by (distance, id)");
      }
    }
  }
}

namespace {

using Candidate = std::pair<double, NodeId>;  // lexicographic: distance, then id

void select_row_block(const Dataset& data, std::size_t k, const MetricFn& metric, bool fast_euclid,
                      std::size_t r0, std::size_t r1, std::vector<NodeId>& nbr,
                      std::vector<double>& dst) {
  const std::size_t n = data.size();
  const std::size_t d = data.dim();
  const double* base = data.points().data();
  std::vector<std::vector<Candidate>> heaps(r1 - r0);
  for (auto& h : heaps) h.reserve(k + 1);

  for (std::size_t j = 0; j < n; ++j) {
    const std::span<const double> pj(base + j * d, d);
    for (std::size_t i = r0; i < r1; ++i) {
      if (i == j) continue;
      const std::span<const double> pi(base + i * d, d);
      const double dist = fast_euclid ? euclidean(pi, pj) : metric(pi, pj);
      if (!std::isfinite(dist) || dist < 0.0) {
        throw Error("non-finite distance between points " + std::to_string(i) + " and " +
                    std::to_string(j));
      }
      auto& h = heaps[i - r0];
      const Candidate c{dist, static_cast<NodeId>(j)};
      if (h.size() < k) {
        h.push_back(c);
        std::push_heap(h.begin(), h.end());
      } else if (c < h.front()) {
        std::pop_heap(h.begin(), h.end());
        h.back() = c;
        std::push_heap(h.begin(), h.end());
      }
    }
  }
  for (std::size_t i = r0; i < r1; ++i) {
    auto& h = heaps[i - r0];
    std::sort_heap(h.begin(), h.end());
    for (std::size_t j = 0; j < k; ++j) {
      nbr[i * k + j] = h[j].second;
      dst[i * k + j] = h[j].first;
    }
  }
}

}  // namespace

KnnGraph build_knn(const Dataset& data, const KnnOptions& opts) {
  const std::size_t n = data.size();
  const std::size_t k = opts.k;
  if (k < 1 || k >= n) {
    throw Error("k must satisfy 1 <= k <= N-1 (k=" + std::to_string(k) + ", N=" +
                std::to_string(n) + ")");
  }
  const MetricFn& metric = lookup_metric(opts.metric);
  const bool fast_euclid = opts.metric == "euclidean";

  std::vector<NodeId> nbr(n * k);
  std::vector<double> dst(n * k);

  constexpr std::size_t kBlock = 32;
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, blocks));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    try {
      for (std::size_t b = next++; b < blocks; b = next++) {
        const std::size_t r0 = b * kBlock;
        select_row_block(data, k, metric, fast_euclid, r0, std::min(n, r0 + kBlock), nbr, dst);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = blocks;
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return KnnGraph(n, k, std::move(nbr), std::move(dst), opts.metric);
}

void write_edge_list(const std::filesystem::path& path, const KnnGraph& g) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << g.n() << ' ' << g.k() << ' ' << g.metric_tag() << '\n';
  out << std::setprecision(17);
  for (std::size_t e = 0; e < g.num_edges(); ++e)
    out << g.source(e) << ' ' << g.target(e) << ' ' << g.distance(e) << '\n';
}

KnnGraph read_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header)) throw FormatError(path.string() + ": missing header");
  std::istringstream hs(header);
  std::size_t n = 0, k = 0;
  std::string tag;
  if (!(hs >> n >> k >> tag)) throw FormatError(path.string() + ": bad header '" + header + "'");

  std::vector<NodeId> nbr(n * k);
  std::vector<double> dst(n * k);
  std::string line;
  for (std::size_t e = 0; e < n * k; ++e) {
    if (!std::getline(in, line))
      throw FormatError(path.string() + ": expected " + std::to_string(n * k) + " edges, got " +
                        std::to_string(e));
    std::istringstream ls(line);
    std::size_t src = 0, tgt = 0;
    double d = 0.0;
    if (!(ls >> src >> tgt >> d) || src != e / k)
      throw FormatError(path.string() + ": bad edge line " + std::to_string(e + 2));
    nbr[e] = static_cast<NodeId>(tgt);
    dst[e] = d;
  }
  return KnnGraph(n, k, std::move(nbr), std::move(dst), tag);
}

}  // namespace nsg
