#include "nsgraph/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "nsgraph/edge_similarity.hpp"
#include "nsgraph/knn_graph.hpp"
#include "nsgraph/sort_sweep.hpp"

namespace nsg {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::pair<std::string, std::string> split_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw Error("expected key=value, got '" + text + "'");
  std::string key = trim(text.substr(0, eq));
  if (key.empty()) throw Error("empty key in '" + text + "'");
  return {key, trim(text.substr(eq + 1))};
}

class Reader {
 public:
  Reader(const std::map<std::string, std::string>& kv, fs::path base) : kv_(kv), base_(std::move(base)) {}

  const std::string* find(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    const std::string* v = find(key);
    if (!v) return;
    out = parse<T>(key, *v);
  }

  void path(const std::string& key, fs::path& out) {
    const std::string* v = find(key);
    if (!v || v->empty()) return;
    fs::path p(*v);
    out = p.is_absolute() ? p : base_ / p;
  }

  void check_unknown() const {
    for (const auto& [key, value] : kv_)
      if (!used_.count(key)) throw Error("unknown config key '" + key + "'");
  }

  template <typename T>
  static T parse(const std::string& key, const std::string& v) {
    std::istringstream in(v);
    T out{};
    if constexpr (std::is_same_v<T, bool>) {
      if (v == "true" || v == "1" || v == "yes") return true;
      if (v == "false" || v == "0" || v == "no") return false;
      throw Error("config key '" + key + "': expected boolean, got '" + v + "'");
    } else if constexpr (std::is_same_v<T, std::string>) {
      return v;
    } else {
      if constexpr (std::is_unsigned_v<T>) {
        if (!v.empty() && v.front() == '-')
          throw Error("config key '" + key + "': expected non-negative value, got '" + v + "'");
      }
      if (!(in >> out) || !(in >> std::ws).eof())
        throw Error("config key '" + key + "': cannot parse '" + v + "'");
      return out;
    }
  }

 private:
  const std::map<std::string, std::string>& kv_;
  fs::path base_;
  std::set<std::string> used_;
};

}  // namespace

std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    try {
      auto [key, value] = split_assignment(line);
      kv[key] = value;
    } catch (const Error& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return kv;
}

RunConfig parse_config(const std::map<std::string, std::string>& kv, const fs::path& base_dir) {
  RunConfig cfg;
  cfg.raw = kv;
  Reader r(kv, base_dir);
  r.get("input.format", cfg.input_format);
  r.path("input.path", cfg.input_path);
  r.path("input.labels", cfg.labels_path);
  r.get("input.has_header", cfg.has_header);
  if (const auto* v = r.find("input.label_column"); v && !v->empty())
    cfg.label_column = Reader::parse<std::size_t>("input.label_column", *v);
  r.get("input.subsample", cfg.subsample);
  r.get("spirals.n_per_arm", cfg.spirals.n_per_arm);
  r.get("spirals.turns", cfg.spirals.turns);
  r.get("spirals.noise", cfg.spirals.noise_sigma);
  r.get("spirals.r_min", cfg.spirals.r_min);
  r.get("spirals.r_max", cfg.spirals.r_max);

  r.get("k", cfg.k);
  r.get("metric", cfg.metric);

  const auto* sa = r.find("filter.sA_min");
  const auto* sk = r.find("filter.sK_max");
  const auto* sj = r.find("filter.sJ_min");
  if (sa && (sk || sj)) throw Error("filter: use either filter.sA_min or filter.sK_max/sJ_min, not both");
  if (sa) {
    const double v = Reader::parse<double>("filter.sA_min", *sa);
    if (!(v >= 0.0 && v <= 1.0)) throw Error("filter.sA_min must lie in [0, 1]");
    cfg.filter = CombinedThreshold{v};
  } else if (sk || sj) {
    if (!(sk && sj)) throw Error("filter: filter.sK_max and filter.sJ_min must be given together");
    cfg.filter = PairThreshold{Reader::parse<int>("filter.sK_max", *sk),
                               Reader::parse<int>("filter.sJ_min", *sj)};
  }

  r.get("sweep.steps", cfg.sweep_steps);
  if (const auto* v = r.find("sweep.snapshots"); v && !v->empty()) {
    std::istringstream in(*v);
    std::string item;
    while (std::getline(in, item, ','))
      cfg.sweep_snapshots.push_back(Reader::parse<double>("sweep.snapshots", trim(item)));
  }
  r.get("sweep.downsample", cfg.sweep_downsample);

  r.get("ncut.cut_threshold", cfg.ncut.cut_threshold);
  r.get("ncut.stability_threshold", cfg.ncut.stability_threshold);
  r.get("ncut.min_cluster_size", cfg.ncut.min_cluster_size);
  r.get("ncut.max_depth", cfg.ncut.max_depth);
  r.get("ncut.candidates", cfg.ncut.split_candidates);
  r.get("ncut.bins", cfg.ncut.stability_bins);

  r.path("merge.spec", cfg.merge_spec);
  if (const auto* v = r.find("merge.auto_density"); v && !v->empty())
    cfg.merge_auto_density = Reader::parse<double>("merge.auto_density", *v);
  r.get("reassign.major_min_size", cfg.reassign.major_min_size);
  r.get("reassign.iterations", cfg.reassign.iterations);

  cfg.output_dir = base_dir / cfg.output_dir;
  r.path("output.dir", cfg.output_dir);
  r.get("seed", cfg.seed);
  r.get("threads", cfg.threads);
  r.get("serve.host", cfg.serve_host);
  r.get("serve.port", cfg.serve_port);
  r.check_unknown();

  if (cfg.k < 1) throw Error("k must be >= 1");
  if (cfg.input_format != "csv" && cfg.input_format != "idx" && cfg.input_format != "spirals")
    throw Error("input.format must be csv, idx or spirals");
  if (cfg.input_format != "spirals" && cfg.input_path.empty())
    throw Error("input.path is required for format " + cfg.input_format);
  for (const auto* p : {&cfg.input_path, &cfg.labels_path, &cfg.merge_spec}) {
    if (!p->empty() && !fs::exists(*p)) throw Error("referenced file does not exist: " + p->string());
  }
  return cfg;
}

RunConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  auto kv = read_config_file(path);
  for (const auto& o : overrides) {
    auto [key, value] = split_assignment(o);
    kv[key] = value;
  }
  return parse_config(kv, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

// ---------------------------------------------------------------------------
// Stages

Dataset load_dataset(const RunConfig& cfg) {
  std::optional<Dataset> data;
  if (cfg.input_format == "spirals") {
    SpiralParams sp = cfg.spirals;
    sp.seed = cfg.seed;
    data = gen_two_spirals(sp);
  } else if (cfg.input_format == "csv") {
    data = load_csv(cfg.input_path, CsvOptions{cfg.has_header, cfg.label_column});
  } else {
    Dataset images = load_idx_images(cfg.input_path);
    if (!cfg.labels_path.empty()) {
      auto labels = load_idx_labels(cfg.labels_path);
      if (labels.size() != images.size()) {
        throw Error("label file has " + std::to_string(labels.size()) + " entries but image file has " +
                    std::to_string(images.size()));
      }
      data = images.with_labels(std::move(labels));
    } else {
      data = std::move(images);
    }
  }
  if (cfg.subsample > 0 && cfg.subsample < data->size())
    return data->subset(subsample_ids(data->size(), cfg.subsample, cfg.seed));
  if (cfg.subsample > data->size())
    throw Error("input.subsample exceeds dataset size " + std::to_string(data->size()));
  return *std::move(data);
}

namespace {

fs::path need(const RunConfig& cfg, const char* file, const char* stage) {
  fs::path p = cfg.output_dir / file;
  if (!fs::exists(p)) throw MissingArtifact(stage, p);
  return p;
}

json finish(const RunConfig& cfg, const std::string& command, json summary,
            std::chrono::steady_clock::time_point start) {
  summary["command"] = command;
  summary["status"] = "ok";
  summary["elapsed_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ofstream log(cfg.output_dir / artifact::kLog, std::ios::app);
  log << summary.dump() << '\n';
  return summary;
}

json predicate_json(const FilterPredicate& pred) {
  if (const auto* c = std::get_if<CombinedThreshold>(&pred)) return {{"sA_min", c->sA_min}};
  const auto& p = std::get<PairThreshold>(pred);
  return {{"sK_max", p.sK_max}, {"sJ_min", p.sJ_min}};
}

std::size_t count_kept(const EdgeMask& m) { return static_cast<std::size_t>(std::count(m.begin(), m.end(), 1)); }

std::string threshold_tag(double t) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << t;
  return s.str();
}

}  // namespace

json run_build(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(cfg.output_dir);
  const Dataset data = load_dataset(cfg);
  if (cfg.k >= data.size())
    throw UsageError("k=" + std::to_string(cfg.k) + " must be below N=" + std::to_string(data.size()));
  const auto t0 = std::chrono::steady_clock::now();
  const KnnGraph g = build_knn(data, KnnOptions{cfg.k, cfg.metric, cfg.threads});
  const auto t1 = std::chrono::steady_clock::now();
  const EdgeScores s = score_all_edges(g, cfg.threads);
  const auto t2 = std::chrono::steady_clock::now();
  write_scored_edges(cfg.output_dir / artifact::kGraph, g, s);
  json out{{"n", g.n()},
           {"d", data.dim()},
           {"k", g.k()},
           {"edges", g.num_edges()},
           {"knn_s", std::chrono::duration<double>(t1 - t0).count()},
           {"score_s", std::chrono::duration<double>(t2 - t1).count()}};
  return finish(cfg, "build", std::move(out), start);
}

json run_filter(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const auto sg = read_scored_edges(need(cfg, artifact::kGraph, "build"));
  const EdgeMask keep = filter_edges(sg.graph, sg.scores, cfg.filter);
  write_mask(cfg.output_dir / artifact::kMask, sg.graph, keep);
  json out{{"predicate", predicate_json(cfg.filter)},
           {"edges", sg.graph.num_edges()},
           {"kept", count_kept(keep)}};
  return finish(cfg, "filter", std::move(out), start);
}

json run_scc(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const auto sg = read_scored_edges(need(cfg, artifact::kGraph, "build"));
  const EdgeMask keep = read_mask(need(cfg, artifact::kMask, "filter"), sg.graph);
  const ComponentLabeling c = scc(sg.graph, keep);
  write_components(cfg.output_dir / artifact::kComponents, c);
  write_component_summary(cfg.output_dir / artifact::kComponentSummary, c);
  std::vector<std::size_t> top(c.sizes.begin(), c.sizes.begin() + std::min<std::size_t>(10, c.sizes.size()));
  json out{{"components", c.num_components()}, {"largest", top}};
  const Dataset data = load_dataset(cfg);
  if (data.labels()) {
    const auto purity = component_purity(c, *data.labels());
    out["purity"] = std::vector<double>(purity.begin(), purity.begin() + static_cast<std::ptrdiff_t>(top.size()));
  }
  return finish(cfg, "scc", std::move(out), start);
}

json run_sweep(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const auto sg = read_scored_edges(need(cfg, artifact::kGraph, "build"));
  const SweepResult sweep = sweep_sort(sg.graph, sg.scores, cfg.sweep_steps);
  write_sweep(cfg.output_dir / artifact::kSweep, sweep);
  json images = json::array();
  for (double x : cfg.sweep_snapshots) {
    const std::size_t i = sweep.snap(x);
    const auto& step = sweep.steps[i];
    const EdgeMask keep = filter_edges(sg.graph, sg.scores, CombinedThreshold{step.threshold});
    const fs::path file = cfg.output_dir / ("sweep_" + threshold_tag(step.threshold) + ".pgm");
    write_pgm(file, render_adjacency(step.permutation, sg.graph, keep, cfg.sweep_downsample));
    images.push_back(file.filename().string());
  }
  json counts = json::array();
  for (const auto& step : sweep.steps) counts.push_back(step.labeling.num_components());
  json out{{"steps", sweep.steps.size()}, {"components_per_step", counts}, {"snapshots", images}};
  return finish(cfg, "sweep", std::move(out), start);
}

json run_ncut(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const auto sg = read_scored_edges(need(cfg, artifact::kGraph, "build"));
  const EdgeMask keep = read_mask(need(cfg, artifact::kMask, "filter"), sg.graph);
  const ComponentLabeling c = read_components(need(cfg, artifact::kComponents, "scc"));
  if (c.component_id.size() != sg.graph.n()) throw Error("components file does not match graph");
  std::vector<NodeId> largest;
  for (std::size_t v = 0; v < c.component_id.size(); ++v)
    if (c.component_id[v] == 0) largest.push_back(static_cast<NodeId>(v));
  const UGraph ug = symmetrize(sg.graph, keep, largest);
  const NcutResult res = ncut_recursive(ug, cfg.ncut);
  const Partition p = lift_partition(res.partition, ug, sg.graph.n());
  write_partition(cfg.output_dir / artifact::kNcut, p);
  json out{{"component_size", largest.size()},
           {"clusters", p.num_clusters()},
           {"sizes", p.sizes},
           {"warnings", res.warnings}};
  return finish(cfg, "ncut", std::move(out), start);
}

json run_reassign(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const auto sg = read_scored_edges(need(cfg, artifact::kGraph, "build"));
  const Partition ncut = read_partition(need(cfg, artifact::kNcut, "ncut"));
  if (ncut.cluster_id.size() != sg.graph.n()) throw Error("partition file does not match graph");
  MergeSpec spec;
  std::string source = "none";
  if (!cfg.merge_spec.empty()) {
    spec = read_merge_spec(cfg.merge_spec);
    source = cfg.merge_spec.string();
  } else if (cfg.merge_auto_density) {
    const EdgeMask keep = read_mask(need(cfg, artifact::kMask, "filter"), sg.graph);
    spec = suggest_merges(ncut, sg.graph, keep, *cfg.merge_auto_density);
    source = "suggest_merges";
  }
  write_merge_spec(cfg.output_dir / artifact::kMergeApplied, spec);
  const Partition merged = merge_clusters(ncut, spec);
  write_partition(cfg.output_dir / artifact::kMerged, merged);
  const Partition final_p = reassign_small(merged, sg.graph, cfg.reassign);
  write_partition(cfg.output_dir / artifact::kFinal, final_p);
  json out{{"merge_source", source},
           {"merge_groups", spec.groups.size()},
           {"merged_clusters", merged.num_clusters()},
           {"final_clusters", final_p.num_clusters()},
           {"unassigned", final_p.cluster_id.size() - final_p.num_assigned()}};
  return finish(cfg, "reassign", std::move(out), start);
}

json run_eval(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const Dataset data = load_dataset(cfg);
  if (!data.labels()) throw Error("eval needs ground-truth labels (input.labels or input.label_column)");
  const auto& truth = *data.labels();

  std::vector<std::pair<std::string, Partition>> stages;
  if (fs::exists(cfg.output_dir / artifact::kComponents)) {
    const auto c = read_components(cfg.output_dir / artifact::kComponents);
    stages.emplace_back("components", make_partition(c.component_id));
  }
  for (auto [name, file] : {std::pair{"ncut", artifact::kNcut}, std::pair{"merged", artifact::kMerged},
                            std::pair{"final", artifact::kFinal}}) {
    if (fs::exists(cfg.output_dir / file)) stages.emplace_back(name, read_partition(cfg.output_dir / file));
  }
  if (stages.empty()) throw MissingArtifact("scc", cfg.output_dir / artifact::kComponents);

  std::ofstream report(cfg.output_dir / artifact::kReport);
  json scores = json::object();
  report << std::setprecision(6) << std::fixed;
  for (const auto& [name, p] : stages) {
    if (p.cluster_id.size() != truth.size())
      throw Error("partition '" + name + "' does not cover the dataset");
    const auto table = f_measure_table(p, truth);
    const double f = f_measure(p, truth);
    scores[name] = f;
    report << "f_measure." << name << " = " << f << '\n';
    report << "clusters." << name << " = " << p.num_clusters() << '\n';
    report << "unassigned." << name << " = " << p.cluster_id.size() - p.num_assigned() << '\n';
    report << "# class size best_cluster f1\n";
    for (const auto& row : table)
      report << "class." << name << ' ' << row.label << ' ' << row.size << ' ' << row.best_cluster << ' '
             << row.f1 << '\n';
  }
  return finish(cfg, "eval", json{{"f_measure", scores}}, start);
}

}  // namespace nsg
