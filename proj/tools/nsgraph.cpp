// nsgraph: batch driver for the neighbourhood-similarity graph pipeline.
//
//   nsgraph build|filter|scc|sweep|ncut|reassign|eval|serve --config run.cfg [--override key=value]...

#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <map>
#include <thread>

#include "nsgraph/explore_server.hpp"
#include "nsgraph/pipeline.hpp"

namespace {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kMissingUpstream = 3,
  kBuildFailed = 10,
  kFilterFailed = 11,
  kSccFailed = 12,
  kSweepFailed = 13,
  kNcutFailed = 14,
  kReassignFailed = 15,
  kEvalFailed = 16,
  kServeFailed = 17,
};

nsg::ExploreServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int serve(const nsg::RunConfig& cfg) {
  nsg::ExploreServer server;
  const int port = server.bind(cfg.serve_host, cfg.serve_port);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "nsgraph: listening on http://" << cfg.serve_host << ':' << port << '\n';
  std::jthread loader([&] {
    try {
      server.attach(nsg::Session::load(cfg));
      std::cerr << "nsgraph: session loaded\n";
    } catch (const std::exception& e) {
      std::cerr << "nsgraph serve: " << e.what() << '\n';
      server.stop();
    }
  });
  server.listen();
  g_server = nullptr;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neighbourhood-similarity graph toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  const std::map<std::string, std::pair<int, nlohmann::json (*)(const nsg::RunConfig&)>> stages{
      {"build", {kBuildFailed, &nsg::run_build}},          {"filter", {kFilterFailed, &nsg::run_filter}},
      {"scc", {kSccFailed, &nsg::run_scc}},                {"sweep", {kSweepFailed, &nsg::run_sweep}},
      {"ncut", {kNcutFailed, &nsg::run_ncut}},             {"reassign", {kReassignFailed, &nsg::run_reassign}},
      {"eval", {kEvalFailed, &nsg::run_eval}},
  };
  const std::map<std::string, std::string> help{
      {"build", "kNN graph and edge scores"},
      {"filter", "apply the edge filter predicate"},
      {"scc", "strongly connected components of the filtered graph"},
      {"sweep", "adjacency-matrix sorting sweep and PGM snapshots"},
      {"ncut", "recursive normalised cut of the largest component"},
      {"reassign", "merge clusters and reassign small ones"},
      {"eval", "F-measure of every available partition"},
      {"serve", "HTTP exploration service"},
  };
  for (const auto& [name, text] : help) {
    auto* sub = app.add_subcommand(name, text);
    sub->add_option("--config", config_path, "run configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--override", overrides, "key=value replacing a config entry");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  nsg::RunConfig cfg;
  try {
    cfg = nsg::load_config(config_path, overrides);
  } catch (const std::exception& e) {
    std::cerr << "nsgraph " << command << ": config error: " << e.what() << '\n';
    return kUsage;
  }

  if (command == "serve") {
    try {
      return serve(cfg);
    } catch (const std::exception& e) {
      std::cerr << "nsgraph serve: " << e.what() << '\n';
      return kServeFailed;
    }
  }

  const auto& [code, run] = stages.at(command);
  try {
    std::cout << run(cfg).dump() << '\n';
    return kOk;
  } catch (const nsg::MissingArtifact& e) {
    std::cerr << "nsgraph " << command << ": " << e.what() << '\n';
    return kMissingUpstream;
  } catch (const nsg::UsageError& e) {
    std::cerr << "nsgraph " << command << ": " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "nsgraph " << command << ": " << e.what() << '\n';
    return code;
  }
}
