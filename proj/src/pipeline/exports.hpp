#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "network/network.hpp"
#include "topology/topology.hpp"

namespace risknet::pipeline {

struct ChartSeries {
    std::string name;
    std::vector<double> values;  // NaN leaves a gap
    bool mean_line = false;      // dotted horizontal line at the series mean
};

/// Static SVG line chart; x positions are the period indices.
std::string line_chart_svg(const std::string& title, const std::vector<std::string>& periods,
                           const std::vector<ChartSeries>& series);

std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values);

/// apl.svg, max_degree.svg, alpha.svg, pvalue.svg and bc_mean.svg in `dir`.
std::vector<std::filesystem::path> export_plots(const topology::TopologySeries& series,
                                                const std::filesystem::path& dir);

/// One DOT file per selected period label; unknown labels throw ConfigError.
std::vector<std::filesystem::path> export_dot(const std::vector<network::SpanningTree>& trees,
                                              const std::vector<std::string>& periods,
                                              const std::filesystem::path& dir);

void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace risknet::pipeline
