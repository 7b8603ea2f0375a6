#include "topology/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

#include "core/error.hpp"
#include "core/hash.hpp"
#include "core/parallel.hpp"
#include "ingest/price_panel.hpp"

namespace risknet::topology {

namespace {

struct Rooted {
    std::vector<std::size_t> parent;
    std::vector<std::size_t> subtree;  // node count of the subtree rooted at each node
};

// Roots the tree at node 0; requires a valid spanning tree.
Rooted root_tree(const network::SpanningTree& tree) {
    network::validate_tree(tree);
    const std::size_t k = tree.size();
    const auto adj = network::adjacency(tree);
    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    Rooted r{std::vector<std::size_t>(k, none), std::vector<std::size_t>(k, 1)};
    std::vector<std::size_t> order;
    order.reserve(k);
    std::vector<std::size_t> stack{0};
    std::vector<bool> seen(k, false);
    seen[0] = true;
    while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        order.push_back(v);
        for (std::size_t w : adj[v])
            if (!seen[w]) {
                seen[w] = true;
                r.parent[w] = v;
                stack.push_back(w);
            }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if (r.parent[*it] != none) r.subtree[r.parent[*it]] += r.subtree[*it];
    return r;
}

std::uint64_t choose2(std::uint64_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

double average_path_length(const network::SpanningTree& tree) {
    const std::size_t k = tree.size();
    const Rooted r = root_tree(tree);
    if (k < 2) return 0.0;
    double total = 0.0;
    for (std::size_t v = 1; v < k; ++v) {
        const double s = static_cast<double>(r.subtree[v]);
        total += 2.0 * s * (static_cast<double>(k) - s);
    }
    return total / (static_cast<double>(k) * static_cast<double>(k - 1));
}

double average_path_length(const std::vector<std::vector<std::size_t>>& adjacency) {
    const std::size_t n = adjacency.size();
    if (n < 2) return 0.0;
    std::uint64_t total = 0;
    std::vector<std::size_t> dist(n);
    constexpr std::size_t unreached = std::numeric_limits<std::size_t>::max();
    for (std::size_t s = 0; s < n; ++s) {
        std::fill(dist.begin(), dist.end(), unreached);
        dist[s] = 0;
        std::queue<std::size_t> q;
        q.push(s);
        while (!q.empty()) {
            const std::size_t v = q.front();
            q.pop();
            for (std::size_t w : adjacency[v])
                if (dist[w] == unreached) {
                    dist[w] = dist[v] + 1;
                    total += dist[w];
                    q.push(w);
                }
        }
    }
    return static_cast<double>(total) / (static_cast<double>(n) * static_cast<double>(n - 1));
}

std::vector<int> degrees(const network::SpanningTree& tree) {
    std::vector<int> deg(tree.size(), 0);
    for (const auto& e : tree.edges) {
        if (e.a >= tree.size() || e.b >= tree.size()) throw DataError("tree edge refers to unknown node");
        ++deg[e.a];
        ++deg[e.b];
    }
    return deg;
}

int max_degree(const network::SpanningTree& tree) {
    const auto deg = degrees(tree);
    return deg.empty() ? 0 : *std::max_element(deg.begin(), deg.end());
}

std::vector<std::uint64_t> raw_betweenness(const network::SpanningTree& tree) {
    const std::size_t k = tree.size();
    const Rooted r = root_tree(tree);
    std::vector<std::uint64_t> raw(k, 0);
    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    // Removing v leaves one component per child plus the part above v.
    std::vector<std::uint64_t> within(k, 0);
    for (std::size_t w = 0; w < k; ++w)
        if (r.parent[w] != none) within[r.parent[w]] += choose2(r.subtree[w]);
    for (std::size_t v = 0; v < k; ++v) {
        const std::uint64_t above = k - r.subtree[v];
        raw[v] = choose2(k - 1) - within[v] - choose2(above);
    }
    return raw;
}

std::vector<double> betweenness_centrality(const network::SpanningTree& tree) {
    const std::size_t k = tree.size();
    const auto raw = raw_betweenness(tree);
    std::vector<double> bc(k, 0.0);
    if (k <= 2) return bc;
    const double norm = static_cast<double>(choose2(k - 1));
    for (std::size_t v = 0; v < k; ++v) bc[v] = static_cast<double>(raw[v]) / norm;
    return bc;
}

TopologySeries compute_series(const std::vector<network::SpanningTree>& trees, const TopologyConfig& config) {
    if (trees.empty()) throw DataError("topology series needs at least one tree");
    TopologySeries series;
    series.assets = trees.front().assets;
    series.records.resize(trees.size());
    parallel_for(trees.size(), config.jobs, [&](std::size_t t) {
        const auto& tree = trees[t];
        TopologyRecord& rec = series.records[t];
        rec.period = tree.period;
        try {
            if (tree.assets != series.assets) throw DataError("tree assets differ from the first period");
            rec.apl = average_path_length(tree);
            rec.bc = betweenness_centrality(tree);
            const auto deg = degrees(tree);
            rec.max_degree = *std::max_element(deg.begin(), deg.end());
            rec.sample_size = deg.size();
            const auto pl = fit_power_law(deg, {config.bootstrap, mix_seed(config.seed, t)});
            rec.alpha = pl.alpha;
            rec.ks = pl.ks;
            rec.pvalue = pl.pvalue;
            rec.alpha_valid = pl.alpha_valid;
        } catch (const std::exception& e) {
            rec = TopologyRecord{};
            rec.period = tree.period;
            rec.apl = nan();
            rec.alpha = rec.ks = rec.pvalue = nan();
            rec.error = e.what();
        }
    });
    const std::size_t k = series.assets.size();
    series.bc_mean.assign(k, 0.0);
    std::size_t used = 0;
    for (const auto& rec : series.records) {
        if (!rec.error.empty()) continue;
        for (std::size_t v = 0; v < k; ++v) series.bc_mean[v] += rec.bc[v];
        ++used;
    }
    for (auto& x : series.bc_mean) x = used ? x / static_cast<double>(used) : nan();
    return series;
}

namespace {

std::string num(double x) { return std::isfinite(x) ? ingest::format_double(x) : std::string(); }

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << text;
    if (!f) throw IoError("write failed for " + path.string());
}

nlohmann::json number_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }
double number_or_nan(const nlohmann::json& j) { return j.is_null() ? nan() : j.get<double>(); }

}  // namespace

void write_series_csv(const TopologySeries& series, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "period,apl,max_degree,alpha,pvalue,alpha_valid";
    for (const auto& a : series.assets) out << ",bc_" << a;
    out << '\n';
    for (const auto& r : series.records) {
        out << r.period << ',' << num(r.apl) << ',' << r.max_degree << ',' << num(r.alpha) << ',' << num(r.pvalue)
            << ',' << (r.alpha_valid ? 1 : 0);
        for (std::size_t v = 0; v < series.assets.size(); ++v) out << ',' << (v < r.bc.size() ? num(r.bc[v]) : "");
        out << '\n';
    }
    write_text(path, out.str());
}

void write_bc_mean_csv(const TopologySeries& series, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "asset,mean_bc\n";
    for (std::size_t v = 0; v < series.assets.size(); ++v) out << series.assets[v] << ',' << num(series.bc_mean[v]) << '\n';
    write_text(path, out.str());
}

nlohmann::json to_json(const TopologySeries& series) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : series.records) {
        nlohmann::json bc = nlohmann::json::array();
        for (double x : r.bc) bc.push_back(number_or_null(x));
        records.push_back({{"period", r.period},
                           {"apl", number_or_null(r.apl)},
                           {"max_degree", r.max_degree},
                           {"bc", std::move(bc)},
                           {"alpha", number_or_null(r.alpha)},
                           {"ks", number_or_null(r.ks)},
                           {"pvalue", number_or_null(r.pvalue)},
                           {"alpha_valid", r.alpha_valid},
                           {"sample_size", r.sample_size},
                           {"error", r.error}});
    }
    nlohmann::json bc_mean = nlohmann::json::array();
    for (double x : series.bc_mean) bc_mean.push_back(number_or_null(x));
    return {{"assets", series.assets}, {"records", std::move(records)}, {"bc_mean", std::move(bc_mean)}};
}

TopologySeries series_from_json(const nlohmann::json& j) {
    TopologySeries s;
    try {
        s.assets = j.at("assets").get<std::vector<std::string>>();
        for (const auto& x : j.at("bc_mean")) s.bc_mean.push_back(number_or_nan(x));
        for (const auto& r : j.at("records")) {
            TopologyRecord rec;
            rec.period = r.at("period").get<std::string>();
            rec.apl = number_or_nan(r.at("apl"));
            rec.max_degree = r.at("max_degree").get<int>();
            for (const auto& x : r.at("bc")) rec.bc.push_back(number_or_nan(x));
            rec.alpha = number_or_nan(r.at("alpha"));
            rec.ks = number_or_nan(r.at("ks"));
            rec.pvalue = number_or_nan(r.at("pvalue"));
            rec.alpha_valid = r.at("alpha_valid").get<bool>();
            rec.sample_size = r.at("sample_size").get<std::size_t>();
            rec.error = r.at("error").get<std::string>();
            s.records.push_back(std::move(rec));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed topology JSON: ") + e.what());
    }
    if (s.bc_mean.size() != s.assets.size()) throw DataError("topology JSON bc_mean length differs from assets");
    return s;
}

}  // namespace risknet::topology
