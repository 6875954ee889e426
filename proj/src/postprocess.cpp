#include "nsgraph/postprocess.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "nsgraph/error.hpp"

namespace nsg {

Partition merge_clusters(const Partition& p, const MergeSpec& spec) {
  const auto c = static_cast<std::int32_t>(p.num_clusters());
  std::vector<std::int32_t> rep(static_cast<std::size_t>(c));
  std::iota(rep.begin(), rep.end(), 0);
  std::vector<std::uint8_t> used(static_cast<std::size_t>(c), 0);
  for (const auto& group : spec.groups) {
    if (group.empty()) continue;
    for (std::int32_t id : group) {
      if (id < 0 || id >= c) throw Error("merge: unknown cluster id " + std::to_string(id));
      if (used[static_cast<std::size_t>(id)])
        throw Error("merge: cluster " + std::to_string(id) + " appears in more than one group");
      used[static_cast<std::size_t>(id)] = 1;
    }
    const std::int32_t target = *std::min_element(group.begin(), group.end());
    for (std::int32_t id : group) rep[static_cast<std::size_t>(id)] = target;
  }
  std::vector<std::int32_t> group(p.cluster_id.size());
  for (std::size_t v = 0; v < group.size(); ++v) {
    const std::int32_t id = p.cluster_id[v];
    group[v] = id == kUnassigned ? kUnassigned : rep[static_cast<std::size_t>(id)];
  }
  return make_partition(group);
}

MergeSpec suggest_merges(const Partition& p, const KnnGraph& g, const EdgeMask& keep,
                         double density_min) {
  if (p.cluster_id.size() != g.n()) throw Error("suggest_merges: partition does not match graph");
  if (keep.size() != g.num_edges()) throw Error("suggest_merges: mask is not aligned with graph");
  std::map<std::pair<std::int32_t, std::int32_t>, std::size_t> between;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    if (!keep[e]) continue;
    std::int32_t a = p.cluster_id[g.source(e)];
    std::int32_t b = p.cluster_id[g.target(e)];
    if (a == kUnassigned || b == kUnassigned || a == b) continue;
    if (a > b) std::swap(a, b);
    ++between[{a, b}];
  }

  std::vector<std::int32_t> parent(p.num_clusters());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::int32_t x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      auto& px = parent[static_cast<std::size_t>(x)];
      px = parent[static_cast<std::size_t>(px)];
      x = px;
    }
    return x;
  };
  for (const auto& [pair, count] : between) {
    const auto smaller = std::min(p.sizes[static_cast<std::size_t>(pair.first)],
                                  p.sizes[static_cast<std::size_t>(pair.second)]);
    if (static_cast<double>(count) / static_cast<double>(smaller) > density_min) {
      const auto ra = find(pair.first), rb = find(pair.second);
      if (ra != rb) parent[static_cast<std::size_t>(std::max(ra, rb))] = std::min(ra, rb);
    }
  }
  std::map<std::int32_t, std::vector<std::int32_t>> groups;
  for (std::int32_t c = 0; c < static_cast<std::int32_t>(parent.size()); ++c) groups[find(c)].push_back(c);
  MergeSpec spec;
  for (auto& [root, members] : groups)
    if (members.size() > 1) spec.groups.push_back(std::move(members));
  return spec;
}

Partition reassign_small(const Partition& p, const KnnGraph& g, const ReassignParams& params) {
  if (p.cluster_id.size() != g.n()) throw Error("reassign_small: partition does not match graph");
  std::vector<std::int32_t> current(p.cluster_id.size(), kUnassigned);
  bool any_major = false;
  for (std::size_t v = 0; v < current.size(); ++v) {
    const std::int32_t id = p.cluster_id[v];
    if (id != kUnassigned && p.sizes[static_cast<std::size_t>(id)] >= params.major_min_size) {
      current[v] = id;
      any_major = true;
    }
  }
  if (!any_major) {
    throw Error("reassign_small: no cluster has at least " + std::to_string(params.major_min_size) +
                " points");
  }
  for (std::size_t pass = 0; pass < params.iterations; ++pass) {
    const std::vector<std::int32_t> before = current;
    for (std::size_t v = 0; v < current.size(); ++v) {
      if (before[v] != kUnassigned) continue;
      // Rows are ordered by (distance, id): the first assigned neighbour wins.
      for (NodeId w : g.neighbors(v)) {
        if (before[w] != kUnassigned) {
          current[v] = before[w];
          break;
        }
      }
    }
  }
  return make_partition(current);
}

std::vector<ClassScore> f_measure_table(const Partition& p, const std::vector<int>& truth) {
  if (truth.empty()) throw Error("f_measure: empty truth vector");
  if (truth.size() != p.cluster_id.size())
    throw Error("f_measure: truth covers " + std::to_string(truth.size()) + " nodes, partition " +
                std::to_string(p.cluster_id.size()));
  std::map<int, std::size_t> class_size;
  std::map<std::int32_t, std::size_t> cluster_size;
  std::map<std::pair<int, std::int32_t>, std::size_t> overlap;
  for (std::size_t v = 0; v < truth.size(); ++v) {
    ++class_size[truth[v]];
    ++cluster_size[p.cluster_id[v]];
    ++overlap[{truth[v], p.cluster_id[v]}];
  }
  std::vector<ClassScore> table;
  for (const auto& [label, size] : class_size) {
    if (size == 0) throw Error("f_measure: empty truth class");
    ClassScore score{label, size, 0.0, kUnassigned};
    for (auto it = overlap.lower_bound({label, std::numeric_limits<std::int32_t>::min()});
         it != overlap.end() && it->first.first == label; ++it) {
      const double both = static_cast<double>(it->second);
      const double precision = both / static_cast<double>(cluster_size[it->first.second]);
      const double recall = both / static_cast<double>(size);
      const double f1 = 2.0 * precision * recall / (precision + recall);
      if (f1 > score.f1) {
        score.f1 = f1;
        score.best_cluster = it->first.second;
      }
    }
    table.push_back(score);
  }
  return table;
}

double f_measure(const Partition& p, const std::vector<int>& truth) {
  const auto table = f_measure_table(p, truth);
  double sum = 0.0;
  for (const auto& row : table) sum += row.f1;
  return sum / static_cast<double>(table.size());
}

MergeSpec read_merge_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  MergeSpec spec;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    if (word != "merge") throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 'merge'");
    std::vector<std::int32_t> group;
    std::int32_t id = 0;
    while (ls >> id) group.push_back(id);
    if (!ls.eof()) throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad cluster id");
    spec.groups.push_back(std::move(group));
  }
  return spec;
}

void write_merge_spec(const std::filesystem::path& path, const MergeSpec& spec) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& group : spec.groups) {
    out << "merge";
    for (std::int32_t id : group) out << ' ' << id;
    out << '\n';
  }
}

}  // namespace nsg
