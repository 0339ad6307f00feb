#pragma once

// Experiment configuration, run manifests and the subcommands behind the CLI.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "igdist/coincidence.hpp"
#include "igdist/model.hpp"

namespace igdist {

inline constexpr const char* kVersion = "0.1.0";

struct RepCounts {
  std::int64_t graph = 1000;    // graph replicates for distance laws
  std::int64_t pool = 2000;     // conditioned W pool size per endpoint
  std::int64_t bp = 10000;      // branching-process replicates
  std::int64_t ghosts = 500;    // labeled-growth replicates for ghost tallies
  std::int64_t mc = 100000;     // Monte Carlo replicates for the coincidence oracle
};

struct ExperimentConfig {
  ModelParams model;
  std::optional<Rank1Params> rank1;  // set when the model came from a rank1 block
  int k1 = 0;                        // 0-based; configs use 1-based types
  int k2 = 0;
  RepCounts reps;
  std::optional<int> horizon;  // W horizon; default max(12, 2 i0)
  int generations = 10;        // BP trajectory length for `bp`
  int depth = 5;               // coupling depth for `ghosts`
  std::uint64_t seed = 0;
  int workers = 1;
  std::string output_dir = "igdist-out";
  double c25 = 1.0;
  int u_lo = -2;
  int u_hi = 3;
  std::optional<SamplingScheme> scheme;
  nlohmann::json source;  // the parsed document, for hashing
};

/// Validates and converts a parsed document. Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& doc);

/// Parses JSON text; syntax errors report the line number.
ExperimentConfig parse_config(std::string_view text);

ExperimentConfig load_config(const std::filesystem::path& path);

struct ManifestFile {
  std::string name;
  std::string fnv1a64;  // 16 hex digits
  std::uint64_t bytes = 0;
};

struct RunManifest {
  std::string subcommand;
  std::string config_hash;
  std::string version = kVersion;
  std::uint64_t seed = 0;
  int workers = 1;
  std::map<std::string, std::uint64_t> stage_seeds;
  std::string started;
  std::string finished;
  std::vector<ManifestFile> files;

  nlohmann::json to_json() const;
};

/// Stage-level stream: derive_seed(master, tag, 0). Modules derive their
/// per-replicate streams from it.
std::uint64_t stage_seed(const ExperimentConfig& cfg, std::string_view tag);

std::string config_hash(const ExperimentConfig& cfg);

struct RunResult {
  RunManifest manifest;
  std::string summary;  // short human-readable report for stdout
};

/// Subcommands: spectral, graph-dist, bp, coincidence, approx, compare,
/// rank1, ghosts. Writes into cfg.output_dir plus manifest.json. Files
/// written by a failing run are removed before the error propagates.
RunResult run_subcommand(const std::string& subcommand, const ExperimentConfig& cfg);

const std::vector<std::string>& subcommands();

/// 0 success, 2 configuration error, 3 runtime or capacity error.
int exit_code_for(const std::exception& e);

}  // namespace igdist
