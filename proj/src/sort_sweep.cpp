#include "nsgraph/sort_sweep.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include "nsgraph/error.hpp"

namespace nsg {

std::vector<double> sweep_thresholds(std::size_t steps) {
  if (steps < 2 || steps > 1000) throw Error("sweep steps must be in 2..1000");
  std::vector<double> t(steps);
  for (std::size_t i = 0; i < steps; ++i)
    t[i] = 1.0 - static_cast<double>(i) / static_cast<double>(steps - 1);
  t.back() = 0.0;
  return t;
}

std::vector<double> SweepResult::thresholds() const {
  std::vector<double> t;
  t.reserve(steps.size());
  for (const auto& s : steps) t.push_back(s.threshold);
  return t;
}

std::size_t SweepResult::snap(double x) const {
  if (steps.empty()) throw Error("empty sweep");
  x = std::clamp(x, 0.0, 1.0);
  // thresholds decrease along the sweep; first one <= x is the largest such.
  for (std::size_t i = 0; i < steps.size(); ++i)
    if (steps[i].threshold <= x) return i;
  return steps.size() - 1;
}

std::vector<NodeId> regroup(const std::vector<NodeId>& prev_perm, const ComponentLabeling& prev,
                            const ComponentLabeling& next) {
  const std::size_t n = prev_perm.size();
  if (prev.component_id.size() != n || next.component_id.size() != n)
    throw Error("regroup: labelings do not match permutation size");

  // A block is the run of nodes sharing (previous component, new component),
  // kept in previous display order.
  struct Block {
    std::vector<NodeId> nodes;
    NodeId min_id = std::numeric_limits<NodeId>::max();
  };
  std::map<std::pair<std::int32_t, std::int32_t>, std::size_t> index;
  std::vector<Block> blocks;
  std::vector<std::vector<std::size_t>> by_component(next.num_components());
  for (NodeId v : prev_perm) {
    const auto key = std::make_pair(prev.component_id[v], next.component_id[v]);
    auto [it, fresh] = index.try_emplace(key, blocks.size());
    if (fresh) {
      blocks.emplace_back();
      by_component[key.second].push_back(it->second);
    }
    Block& b = blocks[it->second];
    b.nodes.push_back(v);
    b.min_id = std::min(b.min_id, v);
  }

  std::vector<NodeId> perm;
  perm.reserve(n);
  // Components are already numbered by decreasing size, then min node id.
  for (auto& members : by_component) {
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      if (blocks[a].nodes.size() != blocks[b].nodes.size())
        return blocks[a].nodes.size() > blocks[b].nodes.size();
      return blocks[a].min_id < blocks[b].min_id;
    });
    for (std::size_t b : members)
      perm.insert(perm.end(), blocks[b].nodes.begin(), blocks[b].nodes.end());
  }
  return perm;
}

SweepResult sweep_sort(const KnnGraph& g, const EdgeScores& scores, std::size_t steps) {
  const auto thresholds = sweep_thresholds(steps);
  const std::size_t n = g.n();

  std::vector<NodeId> perm(n);
  std::iota(perm.begin(), perm.end(), NodeId{0});
  ComponentLabeling blocks;
  blocks.component_id.resize(n);
  std::iota(blocks.component_id.begin(), blocks.component_id.end(), 0);
  blocks.sizes.assign(n, 1);

  SweepResult result;
  result.steps.reserve(steps);
  for (double t : thresholds) {
    const EdgeMask keep = filter_edges(g, scores, CombinedThreshold{t});
    ComponentLabeling comps = scc(g, keep);
    perm = regroup(perm, blocks, comps);
    blocks = comps;
    result.steps.push_back({t, perm, std::move(comps)});
  }
  return result;
}

Raster render_adjacency(const std::vector<NodeId>& perm, const KnnGraph& g, const EdgeMask& keep,
                        std::size_t downsample) {
  const std::size_t n = g.n();
  if (perm.size() != n) throw Error("render_adjacency: permutation size does not match graph");
  if (keep.size() != g.num_edges()) throw Error("render_adjacency: mask is not aligned with graph");
  if (downsample < 1) throw Error("render_adjacency: downsample must be >= 1");

  std::vector<std::size_t> pos(n, n);
  for (std::size_t p = 0; p < n; ++p) {
    if (perm[p] >= n || pos[perm[p]] != n) throw Error("render_adjacency: not a permutation");
    pos[perm[p]] = p;
  }
  Raster r;
  r.width = r.height = (n + downsample - 1) / downsample;
  r.pixels.assign(r.width * r.height, kPixelEmpty);
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const std::size_t row = pos[g.source(e)] / downsample;
    const std::size_t col = pos[g.target(e)] / downsample;
    auto& px = r.pixels[row * r.width + col];
    px = std::min(px, keep[e] ? kPixelKept : kPixelRemoved);
  }
  return r;
}

std::vector<Box> component_boxes(const std::vector<NodeId>& perm, const ComponentLabeling& c,
                                 std::size_t min_size) {
  const std::size_t n = perm.size();
  if (c.component_id.size() != n) throw Error("component_boxes: size mismatch");
  std::vector<std::size_t> first(c.num_components(), n);
  for (std::size_t p = 0; p < n; ++p) {
    const auto id = static_cast<std::size_t>(c.component_id[perm[p]]);
    first[id] = std::min(first[id], p);
  }
  std::vector<Box> boxes;
  for (std::size_t id = 0; id < c.num_components(); ++id) {
    const std::size_t size = c.sizes[id];
    for (std::size_t p = first[id]; p < first[id] + size; ++p) {
      if (p >= n || static_cast<std::size_t>(c.component_id[perm[p]]) != id)
        throw Error("component_boxes: component " + std::to_string(id) + " is not contiguous");
    }
    if (size >= min_size) boxes.push_back({static_cast<std::int32_t>(id), first[id], size});
  }
  std::sort(boxes.begin(), boxes.end(), [](const Box& a, const Box& b) { return a.offset < b.offset; });
  return boxes;
}

std::vector<std::uint8_t> encode_pgm(const Raster& r) {
  const std::string header =
      "P5\n" + std::to_string(r.width) + " " + std::to_string(r.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), r.pixels.begin(), r.pixels.end());
  return out;
}

void write_pgm(const std::filesystem::path& path, const Raster& r) {
  const auto bytes = encode_pgm(r);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Raster decode_pgm(const std::vector<std::uint8_t>& bytes) {
  // Header tokens are separated by single whitespace bytes as written by encode_pgm.
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(static_cast<char>(bytes[pos++]));
    return t;
  };
  if (token() != "P5") throw FormatError("not a binary PGM");
  Raster r;
  try {
    r.width = std::stoul(token());
    r.height = std::stoul(token());
    if (std::stoul(token()) != 255) throw FormatError("PGM maxval must be 255");
  } catch (const std::logic_error&) {
    throw FormatError("bad PGM header");
  }
  ++pos;
  if (bytes.size() - pos != r.width * r.height) throw FormatError("PGM payload size mismatch");
  r.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return r;
}

void write_sweep(const std::filesystem::path& path, const SweepResult& s) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(17);
  for (const auto& step : s.steps) {
    out << step.threshold << ' ' << step.labeling.num_components();
    for (NodeId v : step.permutation) out << ' ' << v;
    out << '\n';
  }
}

}  // namespace nsg
