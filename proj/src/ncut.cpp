#include "nsgraph/ncut.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "nsgraph/error.hpp"

namespace nsg {

// ---------------------------------------------------------------------------
// UGraph

UGraph::UGraph(std::vector<NodeId> ids,
               const std::vector<std::pair<std::size_t, std::size_t>>& edges)
    : ids_(std::move(ids)) {
  const std::size_t n = ids_.size();
  if (!std::is_sorted(ids_.begin(), ids_.end()) ||
      std::adjacent_find(ids_.begin(), ids_.end()) != ids_.end())
    throw Error("UGraph node ids must be strictly ascending");
  std::vector<std::pair<std::uint32_t, std::uint32_t>> arcs;
  arcs.reserve(edges.size() * 2);
  for (auto [a, b] : edges) {
    if (a >= n || b >= n) throw Error("UGraph edge endpoint out of range");
    if (a == b) throw Error("UGraph does not allow self-loops");
    arcs.emplace_back(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b));
    arcs.emplace_back(static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(a));
  }
  std::sort(arcs.begin(), arcs.end());
  arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());
  offsets_.assign(n + 1, 0);
  for (auto [a, b] : arcs) ++offsets_[a + 1];
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  adj_.reserve(arcs.size());
  for (auto [a, b] : arcs) adj_.push_back(b);
}

UGraph UGraph::induced(const std::vector<std::size_t>& locals) const {
  std::vector<std::int64_t> remap(size(), -1);
  std::vector<NodeId> ids;
  ids.reserve(locals.size());
  for (std::size_t i = 0; i < locals.size(); ++i) {
    if (locals[i] >= size() || (i && locals[i] <= locals[i - 1]))
      throw Error("induced: local indices must be ascending and in range");
    remap[locals[i]] = static_cast<std::int64_t>(i);
    ids.push_back(ids_[locals[i]]);
  }
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < locals.size(); ++i) {
    for (std::uint32_t b : adjacent(locals[i])) {
      if (remap[b] > static_cast<std::int64_t>(i))
        edges.emplace_back(i, static_cast<std::size_t>(remap[b]));
    }
  }
  return UGraph(std::move(ids), edges);
}

std::vector<std::vector<std::size_t>> UGraph::connected_components() const {
  std::vector<std::uint8_t> seen(size(), 0);
  std::vector<std::vector<std::size_t>> comps;
  std::vector<std::size_t> queue;
  for (std::size_t s = 0; s < size(); ++s) {
    if (seen[s]) continue;
    queue.assign(1, s);
    seen[s] = 1;
    for (std::size_t h = 0; h < queue.size(); ++h) {
      for (std::uint32_t b : adjacent(queue[h])) {
        if (!seen[b]) {
          seen[b] = 1;
          queue.push_back(b);
        }
      }
    }
    std::sort(queue.begin(), queue.end());
    comps.push_back(queue);
  }
  return comps;
}

UGraph symmetrize(const KnnGraph& g, const EdgeMask& keep, std::vector<NodeId> subset) {
  if (subset.empty()) throw Error("symmetrize: empty node subset");
  if (keep.size() != g.num_edges()) throw Error("symmetrize: mask is not aligned with graph");
  std::sort(subset.begin(), subset.end());
  subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
  std::vector<std::int64_t> local(g.n(), -1);
  for (std::size_t i = 0; i < subset.size(); ++i) {
    if (subset[i] >= g.n()) throw Error("symmetrize: node id out of range");
    local[subset[i]] = static_cast<std::int64_t>(i);
  }
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    if (!keep[e]) continue;
    const auto a = local[g.source(e)];
    const auto b = local[g.target(e)];
    if (a >= 0 && b >= 0) edges.emplace_back(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
  }
  return UGraph(std::move(subset), edges);
}

// ---------------------------------------------------------------------------
// Fiedler vector

namespace {

// Residual of the generalised problem for x = D^{-1/2} y scaled to unit length.
struct Generalised {
  std::vector<double> x;
  double lambda;
  double residual;
};

Generalised to_generalised(const UGraph& g, const Eigen::VectorXd& y, const Eigen::VectorXd& sqrt_deg) {
  const std::size_t n = g.size();
  Eigen::VectorXd x = y.cwiseQuotient(sqrt_deg);
  x /= x.norm();
  Eigen::VectorXd lx(n);  // (D - W) x
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = static_cast<double>(g.degree(i)) * x[i];
    for (std::uint32_t j : g.adjacent(i)) s -= x[j];
    lx[i] = s;
    num += x[i] * s;
    den += static_cast<double>(g.degree(i)) * x[i] * x[i];
  }
  const double lambda = num / den;
  double r2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = lx[i] - lambda * static_cast<double>(g.degree(i)) * x[i];
    r2 += r * r;
  }
  return {std::vector<double>(x.data(), x.data() + n), lambda, std::sqrt(r2)};
}

}  // namespace

FiedlerResult fiedler_vector(const UGraph& g, const FiedlerOptions& opts) {
  const std::size_t n = g.size();
  if (n < 2) throw Error("fiedler_vector: need at least 2 nodes");
  Eigen::VectorXd sqrt_deg(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (g.degree(i) == 0) throw Error("fiedler_vector: node " + std::to_string(g.ids()[i]) + " is isolated");
    sqrt_deg[i] = std::sqrt(static_cast<double>(g.degree(i)));
  }
  // Trivial eigenvector of D^{-1/2} W D^{-1/2}.
  const Eigen::VectorXd trivial = sqrt_deg / sqrt_deg.norm();

  auto apply = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd w(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::uint32_t j : g.adjacent(i)) s += v[j] / sqrt_deg[j];
      w[i] = s / sqrt_deg[i];
    }
    return w;
  };

  std::vector<Eigen::VectorXd> basis;
  auto orthogonalise = [&](Eigen::VectorXd& w) {
    for (int pass = 0; pass < 2; ++pass) {
      w -= trivial * trivial.dot(w);
      for (const auto& b : basis) w -= b * b.dot(w);
    }
  };

  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  auto random_vector = [&] {
    Eigen::VectorXd v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = uni(rng);
    return v;
  };

  const std::size_t dim = std::min(opts.krylov_dim, n - 1);
  Eigen::VectorXd start = random_vector();
  std::size_t matvecs = 0;
  Generalised best{{}, 0.0, std::numeric_limits<double>::infinity()};

  while (matvecs < opts.max_iterations) {
    basis.clear();
    std::vector<double> alpha, beta;
    Eigen::VectorXd v = start;
    orthogonalise(v);
    if (v.norm() < 1e-12) {
      v = random_vector();
      orthogonalise(v);
    }
    v /= v.norm();
    basis.push_back(v);
    while (true) {
      Eigen::VectorXd w = apply(basis.back());
      ++matvecs;
      alpha.push_back(basis.back().dot(w));
      orthogonalise(w);
      if (basis.size() == dim || matvecs >= opts.max_iterations) break;
      double b = w.norm();
      if (b < 1e-10) {
        // Invariant subspace found; continue with a fresh direction.
        w = random_vector();
        orthogonalise(w);
        if (w.norm() < 1e-10) break;
        b = 0.0;
      }
      beta.push_back(b);
      basis.push_back(w / w.norm());
    }

    const std::size_t m = basis.size();
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
      t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = alpha[i];
      if (i + 1 < m) {
        t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i + 1)) = beta[i];
        t(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(i)) = beta[i];
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t);
    const Eigen::VectorXd s = eig.eigenvectors().col(static_cast<Eigen::Index>(m) - 1);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < m; ++i) y += s[static_cast<Eigen::Index>(i)] * basis[i];
    y -= trivial * trivial.dot(y);
    y /= y.norm();

    Generalised cur = to_generalised(g, y, sqrt_deg);
    if (cur.residual < best.residual) best = cur;
    if (best.residual <= opts.tolerance) break;
    start = y;
  }
  if (!(best.residual <= opts.tolerance)) {
    throw ConvergenceError("fiedler_vector: no convergence after " + std::to_string(matvecs) +
                               " iterations (residual " + std::to_string(best.residual) + ")",
                           best.residual);
  }

  // Sign convention: entry of the smallest node id non-negative.
  if (best.x[0] < 0.0)
    for (double& v : best.x) v = -v;
  return {std::move(best.x), best.lambda, best.residual, matvecs};
}

// ---------------------------------------------------------------------------
// Splitting

double ncut_value(const UGraph& g, const std::vector<std::uint8_t>& side) {
  if (side.size() != g.size()) throw Error("ncut_value: side vector size mismatch");
  double cut = 0.0, assoc_a = 0.0, assoc_b = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d = static_cast<double>(g.degree(i));
    (side[i] ? assoc_a : assoc_b) += d;
    for (std::uint32_t j : g.adjacent(i))
      if (side[i] && !side[j]) cut += 1.0;
  }
  if (assoc_a == 0.0 || assoc_b == 0.0) {
    // An edgeless side: defined as 0 when nothing is cut, otherwise unbounded.
    return cut == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return cut / assoc_a + cut / assoc_b;
}

Split best_split(std::span<const double> eigvec, const UGraph& g, std::size_t n_candidates) {
  const std::size_t n = g.size();
  if (n < 2) throw Error("best_split: need at least 2 nodes");
  if (eigvec.size() != n) throw Error("best_split: eigenvector size mismatch");
  if (n_candidates < 1) throw Error("best_split: need at least one candidate");

  std::vector<double> distinct(eigvec.begin(), eigvec.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<double> thresholds;
  if (distinct.size() - 1 <= n_candidates) {
    thresholds.assign(distinct.begin(), distinct.end() - 1);
  } else {
    const double lo = distinct.front(), hi = distinct.back();
    for (std::size_t i = 1; i <= n_candidates; ++i)
      thresholds.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_candidates + 1));
  }

  Split best;
  best.ncut = std::numeric_limits<double>::infinity();
  bool found = false;
  std::vector<std::uint8_t> side(n);
  for (double t : thresholds) {
    std::size_t low = 0;
    for (std::size_t i = 0; i < n; ++i) {
      side[i] = eigvec[i] <= t ? 1 : 0;
      low += side[i];
    }
    if (low == 0 || low == n) continue;
    const double value = ncut_value(g, side);
    if (!found || value < best.ncut) {
      best = {side, value, t};
      found = true;
    }
  }
  if (!found) throw Error("best_split: every candidate split is degenerate");
  return best;
}

double stability(std::span<const double> eigvec, std::size_t bins) {
  if (bins < 2) throw Error("stability: need at least 2 bins");
  if (eigvec.empty()) throw Error("stability: empty vector");
  const auto [lo_it, hi_it] = std::minmax_element(eigvec.begin(), eigvec.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) return 1.0;
  std::vector<std::size_t> count(bins, 0);
  for (double v : eigvec) {
    auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
    ++count[std::min(b, bins - 1)];
  }
  const auto [mn, mx] = std::minmax_element(count.begin(), count.end());
  return static_cast<double>(*mn) / static_cast<double>(*mx);
}

// ---------------------------------------------------------------------------
// Partitions

std::size_t Partition::num_assigned() const noexcept {
  return std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
}

Partition make_partition(const std::vector<std::int32_t>& group) {
  std::map<std::int32_t, std::pair<std::size_t, std::size_t>> stats;  // size, min node
  for (std::size_t v = 0; v < group.size(); ++v) {
    if (group[v] < 0) continue;
    auto [it, fresh] = stats.try_emplace(group[v], 0, v);
    ++it->second.first;
  }
  std::vector<std::pair<std::int32_t, std::pair<std::size_t, std::size_t>>> order(stats.begin(),
                                                                                    stats.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second.first != b.second.first) return a.second.first > b.second.first;
    return a.second.second < b.second.second;
  });
  std::map<std::int32_t, std::int32_t> remap;
  Partition p;
  for (const auto& [gid, st] : order) {
    remap[gid] = static_cast<std::int32_t>(p.sizes.size());
    p.sizes.push_back(st.first);
  }
  p.cluster_id.resize(group.size());
  for (std::size_t v = 0; v < group.size(); ++v)
    p.cluster_id[v] = group[v] < 0 ? kUnassigned : remap[group[v]];
  return p;
}

namespace {

class Recursion {
 public:
  Recursion(const NcutParams& params, std::size_t n) : params_(params), group_(n, kUnassigned) {}

  // `g` is a subgraph; `root_index` maps its local indices to the root graph.
  void run(const UGraph& g, const std::vector<std::size_t>& root_index, std::size_t depth) {
    if (g.size() < params_.min_cluster_size || depth >= params_.max_depth || g.size() < 2) {
      leaf(root_index);
      return;
    }
    auto comps = g.connected_components();
    if (comps.size() > 1) {
      for (const auto& c : comps) run(g.induced(c), pick(root_index, c), depth + 1);
      return;
    }
    Split split;
    try {
      const FiedlerResult f = fiedler_vector(g);
      if (stability(f.vector, params_.stability_bins) > params_.stability_threshold) {
        leaf(root_index);
        return;
      }
      split = best_split(f.vector, g, params_.split_candidates);
    } catch (const Error& e) {
      warnings.push_back("subgraph of " + std::to_string(g.size()) + " nodes (min id " +
                         std::to_string(g.ids().front()) + ") kept whole: " + e.what());
      leaf(root_index);
      return;
    }
    if (split.ncut > params_.cut_threshold) {
      leaf(root_index);
      return;
    }
    std::vector<std::size_t> a, b;
    for (std::size_t i = 0; i < g.size(); ++i) (split.side[i] ? a : b).push_back(i);
    run(g.induced(a), pick(root_index, a), depth + 1);
    run(g.induced(b), pick(root_index, b), depth + 1);
  }

  Partition partition() const { return make_partition(group_); }

  std::vector<std::string> warnings;

 private:
  static std::vector<std::size_t> pick(const std::vector<std::size_t>& root_index,
                                       const std::vector<std::size_t>& locals) {
    std::vector<std::size_t> out;
    out.reserve(locals.size());
    for (std::size_t l : locals) out.push_back(root_index[l]);
    return out;
  }

  void leaf(const std::vector<std::size_t>& root_index) {
    for (std::size_t r : root_index) group_[r] = next_;
    ++next_;
  }

  const NcutParams& params_;
  std::vector<std::int32_t> group_;
  std::int32_t next_ = 0;
};

}  // namespace

NcutResult ncut_recursive(const UGraph& g, const NcutParams& params) {
  if (params.cut_threshold <= 0.0 || params.stability_threshold <= 0.0 ||
      params.min_cluster_size == 0 || params.max_depth == 0)
    throw Error("ncut parameters must all be positive");
  if (g.size() == 0) throw Error("ncut_recursive: empty graph");
  Recursion rec(params, g.size());
  std::vector<std::size_t> root(g.size());
  std::iota(root.begin(), root.end(), std::size_t{0});
  rec.run(g, root, 0);
  return {rec.partition(), std::move(rec.warnings)};
}

Partition lift_partition(const Partition& local, const UGraph& g, std::size_t n) {
  if (local.cluster_id.size() != g.size()) throw Error("lift_partition: size mismatch");
  std::vector<std::int32_t> group(n, kUnassigned);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.ids()[i] >= n) throw Error("lift_partition: node id out of range");
    group[g.ids()[i]] = local.cluster_id[i];
  }
  return make_partition(group);
}

void write_partition(const std::filesystem::path& path, const Partition& p) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (std::size_t v = 0; v < p.cluster_id.size(); ++v) out << v << ' ' << p.cluster_id[v] << '\n';
}

Partition read_partition(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::int32_t> group;
  std::size_t node = 0;
  std::int32_t id = 0;
  while (in >> node >> id) {
    if (node != group.size()) throw FormatError(path.string() + ": node ids must be 0..n-1 in order");
    if (id < kUnassigned) throw FormatError(path.string() + ": invalid cluster id");
    group.push_back(id);
  }
  if (group.empty()) throw FormatError(path.string() + ": empty partition");
  return make_partition(group);
}

}  // namespace nsg
