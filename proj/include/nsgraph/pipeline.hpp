#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nsgraph/dataset.hpp"
#include "nsgraph/error.hpp"
#include "nsgraph/filter_components.hpp"
#include "nsgraph/ncut.hpp"
#include "nsgraph/postprocess.hpp"

namespace nsg {

// Every tunable of a run in one record. Loaded from a flat "key = value"
// file; relative paths resolve against the config file's directory.
struct RunConfig {
  // input
  std::string input_format = "csv";  // csv | idx | spirals
  std::filesystem::path input_path;
  std::filesystem::path labels_path;  // idx label file
  bool has_header = false;
  std::optional<std::size_t> label_column;
  std::size_t subsample = 0;  // 0 keeps every point
  SpiralParams spirals;

  std::size_t k = 20;
  std::string metric = "euclidean";
  FilterPredicate filter = CombinedThreshold{0.0};
  std::size_t sweep_steps = 50;
  std::vector<double> sweep_snapshots;
  std::size_t sweep_downsample = 1;
  NcutParams ncut;
  std::filesystem::path merge_spec;
  std::optional<double> merge_auto_density;
  ReassignParams reassign;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string serve_host = "127.0.0.1";
  int serve_port = 8080;

  // Raw key/value pairs as read, after overrides.
  std::map<std::string, std::string> raw;
};

RunConfig parse_config(const std::map<std::string, std::string>& kv,
                       const std::filesystem::path& base_dir = ".");
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);
RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<std::string>& overrides = {});

// Upstream artifact missing; the message names the stage to run.
class MissingArtifact : public Error {
 public:
  MissingArtifact(const std::string& stage, const std::filesystem::path& file)
      : Error("missing " + file.string() + ": run stage '" + stage + "' first"), stage_(stage) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// Run parameters inconsistent with the data (e.g. k >= N).
class UsageError : public Error {
 public:
  using Error::Error;
};

namespace artifact {
inline constexpr const char* kGraph = "graph.edges";
inline constexpr const char* kMask = "mask.txt";
inline constexpr const char* kComponents = "components.txt";
inline constexpr const char* kComponentSummary = "components_summary.txt";
inline constexpr const char* kSweep = "sweep.txt";
inline constexpr const char* kNcut = "partition_ncut.txt";
inline constexpr const char* kMergeApplied = "merge_spec_applied.txt";
inline constexpr const char* kMerged = "partition_merged.txt";
inline constexpr const char* kFinal = "partition_final.txt";
inline constexpr const char* kReport = "eval_report.txt";
inline constexpr const char* kLog = "log.jsonl";
}  // namespace artifact

Dataset load_dataset(const RunConfig& cfg);

// Stage drivers. Each reads upstream artifacts from cfg.output_dir, writes its
// own, appends one JSON line to the run log and returns that record.
nlohmann::json run_build(const RunConfig& cfg);
nlohmann::json run_filter(const RunConfig& cfg);
nlohmann::json run_scc(const RunConfig& cfg);
nlohmann::json run_sweep(const RunConfig& cfg);
nlohmann::json run_ncut(const RunConfig& cfg);
nlohmann::json run_reassign(const RunConfig& cfg);
nlohmann::json run_eval(const RunConfig& cfg);

}  // namespace nsg
