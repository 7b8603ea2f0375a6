#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace risknet::copula {

/// Conditional correlation path of asset pair (i, j), i < j.
struct PairPath {
    std::size_t i = 0;
    std::size_t j = 0;
    std::vector<double> rho;
};

/// T x k x k stack of per-period correlation matrices, stored period-major.
struct CorrelationCube {
    std::vector<std::string> assets;
    std::vector<std::string> periods;
    std::vector<double> rho;

    std::size_t asset_count() const { return assets.size(); }
    std::size_t period_count() const { return periods.size(); }
    double at(std::size_t t, std::size_t i, std::size_t j) const {
        const std::size_t k = assets.size();
        return rho[(t * k + i) * k + j];
    }
    double& at(std::size_t t, std::size_t i, std::size_t j) {
        const std::size_t k = assets.size();
        return rho[(t * k + i) * k + j];
    }
    /// Row-major k x k copy of period t.
    std::vector<double> slice(std::size_t t) const;
};

/// Builds the cube from k(k-1)/2 pair paths; order of `paths` is irrelevant.
/// Throws DataError listing every absent pair.
CorrelationCube assemble_cube(std::vector<std::string> assets, std::vector<std::string> periods,
                              const std::vector<PairPath>& paths);

/// {assets, periods, rho: [[upper triangle row by row] per period]}
nlohmann::json to_json(const CorrelationCube& cube);
CorrelationCube cube_from_json(const nlohmann::json& j);

/// One k x k CSV per period (file name: index and period label). Returns written files.
std::vector<std::filesystem::path> write_cube_csv(const CorrelationCube& cube, const std::filesystem::path& dir);

}  // namespace risknet::copula
