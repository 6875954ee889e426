#include "nsgraph/edge_similarity.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <thread>

#include "nsgraph/error.hpp"

namespace nsg {

int ks_count(std::span<const double> dists_u, std::span<const double> dists_v) {
  if (dists_u.size() != dists_v.size()) {
    throw Error("ks_count: length mismatch " + std::to_string(dists_u.size()) + " vs " +
                std::to_string(dists_v.size()));
  }
#ifndef NDEBUG
  if (!std::is_sorted(dists_u.begin(), dists_u.end()) ||
      !std::is_sorted(dists_v.begin(), dists_v.end()))
    throw Error("ks_count: input lists must be sorted ascending");
#endif
  const std::size_t n = dists_u.size();
  std::size_t i = 0, j = 0;
  int best = 0;
  while (i < n || j < n) {
    double t;
    if (j == n || (i < n && dists_u[i] <= dists_v[j]))
      t = dists_u[i];
    else
      t = dists_v[j];
    while (i < n && dists_u[i] == t) ++i;
    while (j < n && dists_v[j] == t) ++j;
    const int gap = static_cast<int>(i > j ? i - j : j - i);
    best = std::max(best, gap);
  }
  return best;
}

int shared_neighbors(const KnnGraph& g, NodeId u, NodeId v) {
  if (u >= g.n() || v >= g.n()) throw Error("shared_neighbors: node id out of range");
  const auto nu = g.neighbors(u);
  if (std::find(nu.begin(), nu.end(), v) == nu.end()) {
    throw Error("shared_neighbors: (" + std::to_string(u) + ", " + std::to_string(v) +
                ") is not an edge");
  }
  const auto nv = g.neighbors(v);
  int count = 0;
  for (NodeId a : nu)
    if (std::find(nv.begin(), nv.end(), a) != nv.end()) ++count;
  return count;
}

double combined_similarity(int sJ, int sK, std::size_t k) {
  const auto kk = static_cast<int>(k);
  if (k < 1 || sJ < 0 || sJ > kk - 1 || sK < 0 || sK > kk) {
    throw Error("combined_similarity: arguments out of range (sJ=" + std::to_string(sJ) +
                ", sK=" + std::to_string(sK) + ", k=" + std::to_string(k) + ")");
  }
  const double overlap = (sJ + 1.0) / static_cast<double>(k);
  const double closeness = 1.0 - sK / (static_cast<double>(k) + 1.0);
  return 2.0 * (overlap * closeness) / (overlap + closeness);
}

EdgeScores score_all_edges(const KnnGraph& g, unsigned threads) {
  const std::size_t n = g.n();
  const std::size_t k = g.k();
  EdgeScores s;
  s.k = k;
  s.sK.resize(g.num_edges());
  s.sJ.resize(g.num_edges());
  s.sA.resize(g.num_edges());

  // Row-parallel; each worker owns a stamp array marking N(u).
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  threads = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    std::vector<std::size_t> stamp(n, static_cast<std::size_t>(-1));
    for (std::size_t c = next++; c < chunks; c = next++) {
      const std::size_t end = std::min(n, (c + 1) * kChunk);
      for (std::size_t u = c * kChunk; u < end; ++u) {
        for (NodeId a : g.neighbors(u)) stamp[a] = u;
        for (std::size_t j = 0; j < k; ++j) {
          const std::size_t e = u * k + j;
          const NodeId v = g.target(e);
          int shared = 0;
          for (NodeId b : g.neighbors(v)) shared += stamp[b] == u ? 1 : 0;
          const int gap = ks_count(g.dists(u), g.dists(v));
          s.sJ[e] = shared;
          s.sK[e] = gap;
          s.sA[e] = combined_similarity(shared, gap, k);
        }
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return s;
}

void write_scored_edges(const std::filesystem::path& path, const KnnGraph& g,
                        const EdgeScores& scores) {
  if (scores.size() != g.num_edges()) throw Error("scores are not aligned with graph edges");
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << g.n() << ' ' << g.k() << ' ' << g.metric_tag() << '\n';
  out << std::setprecision(17);
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    out << g.source(e) << ' ' << g.target(e) << ' ' << g.distance(e) << ' ' << scores.sK[e] << ' '
        << scores.sJ[e] << ' ' << scores.sA[e] << '\n';
  }
}

ScoredGraph read_scored_edges(const std::filesystem::path& path) {
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
  EdgeScores s;
  s.k = k;
  s.sK.resize(n * k);
  s.sJ.resize(n * k);
  s.sA.resize(n * k);
  std::string line;
  for (std::size_t e = 0; e < n * k; ++e) {
    if (!std::getline(in, line)) {
      throw FormatError(path.string() + ": expected " + std::to_string(n * k) +
                        " scored edges, got " + std::to_string(e));
    }
    std::istringstream ls(line);
    std::size_t src = 0, tgt = 0;
    if (!(ls >> src >> tgt >> dst[e] >> s.sK[e] >> s.sJ[e] >> s.sA[e]) || src != e / k)
      throw FormatError(path.string() + ": bad scored edge line " + std::to_string(e + 2));
    nbr[e] = static_cast<NodeId>(tgt);
  }
  return {KnnGraph(n, k, std::move(nbr), std::move(dst), tag), std::move(s)};
}

}  // namespace nsg
