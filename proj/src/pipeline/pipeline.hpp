#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "core/optimizer.hpp"
#include "json.hpp"
#include "marginal/marginal.hpp"

namespace risknet::pipeline {

enum class Format { csv, json, dot, svg };
Format format_from_string(const std::string& s);
std::string to_string(Format f);

struct RunConfig {
    std::filesystem::path input;  // price CSV (run), cube.json (indices), output dir (export)
    std::filesystem::path out;
    std::uint64_t seed = 0;
    optim::Settings optimizer;
    marginal::Family innovations = marginal::Family::skew_t;
    marginal::ModelOrders orders;
    int dcc_m = 1;
    int dcc_n = 1;
    int bootstrap = 1000;
    int jobs = 1;
    std::set<Format> formats{Format::csv, Format::json, Format::dot, Format::svg};
    std::vector<std::string> trees;  // period labels for DOT export
    std::optional<std::filesystem::path> cache_dir;  // else $RISKNET_CACHE_DIR, else <out>/cache
    bool verbose = false;

    void validate() const;
    /// Hash of every setting that can change an output; jobs, paths and verbosity excluded.
    std::string hash() const;
    nlohmann::json to_json() const;
};

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_data = 2, exit_estimation = 3 };

struct Artifact {
    std::string path;  // relative to the output directory, '/' separated
    std::string hash;  // empty for run-specific files (timings)
};

struct RunManifest {
    std::string command;
    nlohmann::json content;  // deterministic manifest body
    std::vector<Artifact> artifacts;
    std::vector<std::string> failures;
    nlohmann::json stats;  // timings and cache counters, written to run_stats.json

    int exit_code() const { return failures.empty() ? exit_ok : exit_estimation; }
};

/// Price CSV -> marginals -> pair fits -> cube -> trees -> topology -> exports.
RunManifest run_full(const RunConfig& config);

/// Stage two only, from a cube.json written by run_full.
RunManifest run_indices(const RunConfig& config);

/// Re-emits csv/svg/dot artifacts from topology.json and trees.json in config.input.
RunManifest run_export(const RunConfig& config);

/// Maps an exception thrown by the run functions to an exit code.
int exit_code_for(const std::exception& e);

}  // namespace risknet::pipeline
