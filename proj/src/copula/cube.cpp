#include "copula/cube.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "core/error.hpp"
#include "ingest/price_panel.hpp"

namespace risknet::copula {

std::vector<double> CorrelationCube::slice(std::size_t t) const {
    const std::size_t k = assets.size();
    if (t >= periods.size()) throw DomainError("cube period index out of range");
    const auto first = rho.begin() + static_cast<std::ptrdiff_t>(t * k * k);
    return {first, first + static_cast<std::ptrdiff_t>(k * k)};
}

CorrelationCube assemble_cube(std::vector<std::string> assets, std::vector<std::string> periods,
                              const std::vector<PairPath>& paths) {
    const std::size_t k = assets.size(), T = periods.size();
    if (k < 2) throw DataError("cube needs at least two assets");
    std::vector<const PairPath*> slot(k * k, nullptr);
    for (const auto& p : paths) {
        const std::size_t a = std::min(p.i, p.j), b = std::max(p.i, p.j);
        if (a == b || b >= k) throw DataError("pair path has invalid asset indices");
        if (p.rho.size() != T)
            throw DataError("pair (" + assets[a] + ", " + assets[b] + ") has " + std::to_string(p.rho.size()) +
                            " periods, expected " + std::to_string(T));
        if (slot[a * k + b]) throw DataError("duplicate pair (" + assets[a] + ", " + assets[b] + ")");
        slot[a * k + b] = &p;
    }
    std::string missing;
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a + 1; b < k; ++b)
            if (!slot[a * k + b]) missing += (missing.empty() ? "" : ", ") + ("(" + assets[a] + ", " + assets[b] + ")");
    if (!missing.empty()) throw DataError("cube assembly: missing pairs " + missing);

    CorrelationCube cube;
    cube.assets = std::move(assets);
    cube.periods = std::move(periods);
    cube.rho.assign(T * k * k, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t a = 0; a < k; ++a) {
            cube.at(t, a, a) = 1.0;
            for (std::size_t b = a + 1; b < k; ++b) {
                const double r = slot[a * k + b]->rho[t];
                if (!(std::abs(r) < 1.0))
                    throw DataError("pair (" + cube.assets[a] + ", " + cube.assets[b] + ") correlation outside (-1, 1)");
                cube.at(t, a, b) = r;
                cube.at(t, b, a) = r;
            }
        }
    }
    return cube;
}

nlohmann::json to_json(const CorrelationCube& cube) {
    const std::size_t k = cube.asset_count();
    nlohmann::json rho = nlohmann::json::array();
    for (std::size_t t = 0; t < cube.period_count(); ++t) {
        std::vector<double> upper;
        upper.reserve(k * (k - 1) / 2);
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = a + 1; b < k; ++b) upper.push_back(cube.at(t, a, b));
        rho.push_back(std::move(upper));
    }
    return {{"assets", cube.assets}, {"periods", cube.periods}, {"rho", std::move(rho)}};
}

CorrelationCube cube_from_json(const nlohmann::json& j) {
    CorrelationCube cube;
    try {
        cube.assets = j.at("assets").get<std::vector<std::string>>();
        cube.periods = j.at("periods").get<std::vector<std::string>>();
        const auto& rho = j.at("rho");
        const std::size_t k = cube.assets.size(), T = cube.periods.size();
        if (k < 2) throw DataError("cube needs at least two assets");
        if (rho.size() != T) throw DataError("cube rho has wrong number of periods");
        cube.rho.assign(T * k * k, 0.0);
        for (std::size_t t = 0; t < T; ++t) {
            const auto& row = rho.at(t);
            if (row.size() != k * (k - 1) / 2)
                throw DataError("cube period " + cube.periods[t] + " has wrong number of entries");
            std::size_t n = 0;
            for (std::size_t a = 0; a < k; ++a) {
                cube.at(t, a, a) = 1.0;
                for (std::size_t b = a + 1; b < k; ++b, ++n) {
                    const double r = row.at(n).get<double>();
                    cube.at(t, a, b) = r;
                    cube.at(t, b, a) = r;
                }
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed cube JSON: ") + e.what());
    }
    return cube;
}

std::vector<std::filesystem::path> write_cube_csv(const CorrelationCube& cube, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::size_t k = cube.asset_count();
    std::vector<std::filesystem::path> files;
    for (std::size_t t = 0; t < cube.period_count(); ++t) {
        char index[16];
        std::snprintf(index, sizeof index, "%05zu", t);
        std::string label = cube.periods[t];
        for (char& c : label)
            if (c == ':' || c == ' ') c = '-';
        const auto path = dir / (std::string(index) + "_" + label + ".csv");
        std::ostringstream out;
        out << "asset";
        for (const auto& a : cube.assets) out << ',' << a;
        out << '\n';
        for (std::size_t a = 0; a < k; ++a) {
            out << cube.assets[a];
            for (std::size_t b = 0; b < k; ++b) out << ',' << ingest::format_double(cube.at(t, a, b));
            out << '\n';
        }
        std::ofstream f(path, std::ios::binary);
        if (!f) throw IoError("cannot write " + path.string());
        f << out.str();
        files.push_back(path);
    }
    return files;
}

}  // namespace risknet::copula
