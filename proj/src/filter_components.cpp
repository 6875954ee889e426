#include "nsgraph/filter_components.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include "nsgraph/error.hpp"

namespace nsg {

EdgeMask filter_edges(const KnnGraph& g, const EdgeScores& scores, const FilterPredicate& pred) {
  const std::size_t m = g.num_edges();
  if (scores.size() != m || scores.sK.size() != m || scores.sJ.size() != m)
    throw Error("filter_edges: scores are not aligned with graph edges");
  EdgeMask keep(m);
  if (const auto* c = std::get_if<CombinedThreshold>(&pred)) {
    for (std::size_t e = 0; e < m; ++e) keep[e] = scores.sA[e] < c->sA_min ? 0 : 1;
  } else {
    const auto& p = std::get<PairThreshold>(pred);
    for (std::size_t e = 0; e < m; ++e)
      keep[e] = (scores.sK[e] > p.sK_max || scores.sJ[e] < p.sJ_min) ? 0 : 1;
  }
  return keep;
}

EdgeMask keep_all(const KnnGraph& g) { return EdgeMask(g.num_edges(), 1); }

ComponentLabeling canonical_labeling(const std::vector<std::int32_t>& group) {
  std::map<std::int32_t, std::pair<std::size_t, std::size_t>> stats;  // group -> (size, min node)
  for (std::size_t v = 0; v < group.size(); ++v) {
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
  ComponentLabeling out;
  for (const auto& [gid, st] : order) {
    remap[gid] = static_cast<std::int32_t>(out.sizes.size());
    out.sizes.push_back(st.first);
  }
  out.component_id.resize(group.size());
  for (std::size_t v = 0; v < group.size(); ++v) out.component_id[v] = remap[group[v]];
  return out;
}

ComponentLabeling scc(const KnnGraph& g, const EdgeMask& keep) {
  const std::size_t n = g.n();
  const std::size_t k = g.k();
  if (keep.size() != g.num_edges()) throw Error("scc: mask is not aligned with graph edges");

  constexpr std::int32_t kUnvisited = -1;
  std::vector<std::int32_t> index(n, kUnvisited), low(n, 0), comp(n, -1);
  std::vector<std::uint8_t> on_stack(n, 0);
  std::vector<NodeId> stack;
  std::vector<std::pair<NodeId, std::size_t>> call;  // (node, next edge slot)
  std::int32_t counter = 0;
  std::int32_t ncomp = 0;

  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    call.emplace_back(static_cast<NodeId>(root), 0);
    index[root] = low[root] = counter++;
    stack.push_back(static_cast<NodeId>(root));
    on_stack[root] = 1;
    while (!call.empty()) {
      auto& [v, slot] = call.back();
      bool descended = false;
      while (slot < k) {
        const std::size_t e = v * k + slot++;
        if (!keep[e]) continue;
        const NodeId w = g.target(e);
        if (index[w] == kUnvisited) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.emplace_back(w, 0);
          descended = true;
          break;
        }
        if (on_stack[w]) low[v] = std::min(low[v], index[w]);
      }
      if (descended) continue;
      const NodeId done = v;
      call.pop_back();
      if (low[done] == index[done]) {
        NodeId w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = ncomp;
        } while (w != done);
        ++ncomp;
      }
      if (!call.empty()) {
        const NodeId parent = call.back().first;
        low[parent] = std::min(low[parent], low[done]);
      }
    }
  }
  return canonical_labeling(comp);
}

std::vector<double> component_purity(const ComponentLabeling& labeling,
                                     const std::vector<int>& labels) {
  if (labels.size() != labeling.component_id.size())
    throw Error("component_purity: labels missing or misaligned");
  std::vector<std::map<int, std::size_t>> counts(labeling.num_components());
  for (std::size_t v = 0; v < labels.size(); ++v) ++counts[labeling.component_id[v]][labels[v]];
  std::vector<double> purity(labeling.num_components(), 0.0);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    std::size_t best = 0;
    for (const auto& [lab, cnt] : counts[c]) best = std::max(best, cnt);
    purity[c] = labeling.sizes[c] ? static_cast<double>(best) / labeling.sizes[c] : 0.0;
  }
  return purity;
}

void write_mask(const std::filesystem::path& path, const KnnGraph& g, const EdgeMask& keep) {
  if (keep.size() != g.num_edges()) throw Error("mask is not aligned with graph edges");
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << g.n() << ' ' << g.k() << '\n';
  for (std::size_t e = 0; e < keep.size(); ++e)
    out << g.source(e) << ' ' << g.target(e) << ' ' << int(keep[e]) << '\n';
}

EdgeMask read_mask(const std::filesystem::path& path, const KnnGraph& g) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::size_t n = 0, k = 0;
  if (!(in >> n >> k) || n != g.n() || k != g.k())
    throw FormatError(path.string() + ": mask header does not match graph");
  EdgeMask keep(g.num_edges());
  for (std::size_t e = 0; e < keep.size(); ++e) {
    std::size_t src = 0, dst = 0;
    int flag = 0;
    if (!(in >> src >> dst >> flag) || src != g.source(e) || dst != g.target(e) ||
        (flag != 0 && flag != 1))
      throw FormatError(path.string() + ": bad mask line " + std::to_string(e + 2));
    keep[e] = static_cast<std::uint8_t>(flag);
  }
  return keep;
}

void write_components(const std::filesystem::path& path, const ComponentLabeling& c) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (std::size_t v = 0; v < c.component_id.size(); ++v) out << v << ' ' << c.component_id[v] << '\n';
}

void write_component_summary(const std::filesystem::path& path, const ComponentLabeling& c) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "component_id size\n";
  for (std::size_t i = 0; i < c.sizes.size(); ++i) out << i << ' ' << c.sizes[i] << '\n';
}

ComponentLabeling read_components(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::int32_t> group;
  std::size_t node = 0;
  std::int32_t id = 0;
  while (in >> node >> id) {
    if (node != group.size()) throw FormatError(path.string() + ": node ids must be 0..n-1 in order");
    group.push_back(id);
  }
  if (group.empty()) throw FormatError(path.string() + ": no components");
  return canonical_labeling(group);
}

}  // namespace nsg
