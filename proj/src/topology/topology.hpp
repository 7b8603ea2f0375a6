#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "network/network.hpp"
#include "topology/power_law.hpp"

namespace risknet::topology {

/// Mean hop count over ordered pairs of distinct nodes, via edge splits:
/// every edge whose removal leaves parts of size s and k - s lies on s (k - s) paths.
double average_path_length(const network::SpanningTree& tree);

/// Same quantity for any graph by all-pairs BFS; unreachable pairs count 0.
double average_path_length(const std::vector<std::vector<std::size_t>>& adjacency);

int max_degree(const network::SpanningTree& tree);
std::vector<int> degrees(const network::SpanningTree& tree);

/// Unordered pairs {u, w} (u, w != v) whose tree path passes through v.
std::vector<std::uint64_t> raw_betweenness(const network::SpanningTree& tree);

/// raw_betweenness / C(k-1, 2); zero when k <= 2.
std::vector<double> betweenness_centrality(const network::SpanningTree& tree);

struct TopologyRecord {
    std::string period;
    double apl = 0.0;
    int max_degree = 0;
    std::vector<double> bc;
    double alpha = 0.0;
    double ks = 0.0;
    double pvalue = 0.0;
    bool alpha_valid = false;
    std::size_t sample_size = 0;
    std::string error;  // nonempty when the period could not be evaluated
};

struct TopologySeries {
    std::vector<std::string> assets;
    std::vector<TopologyRecord> records;
    std::vector<double> bc_mean;
};

struct TopologyConfig {
    int bootstrap = 1000;
    std::uint64_t seed = 0;
    int jobs = 1;
};

/// One record per tree, in input order. Period t bootstraps with seed
/// mix_seed(config.seed, t). bc_mean averages over records without error.
TopologySeries compute_series(const std::vector<network::SpanningTree>& trees, const TopologyConfig& config = {});

void write_series_csv(const TopologySeries& series, const std::filesystem::path& path);
void write_bc_mean_csv(const TopologySeries& series, const std::filesystem::path& path);
nlohmann::json to_json(const TopologySeries& series);
TopologySeries series_from_json(const nlohmann::json& j);

}  // namespace risknet::topology
