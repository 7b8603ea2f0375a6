#include "network/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "core/error.hpp"

namespace risknet::network {

double SpanningTree::total_weight() const {
    double s = 0.0;
    for (const auto& e : edges) s += e.w;
    return s;
}

DistanceMatrix to_distance(std::span<const double> rho, std::vector<std::string> assets) {
    const std::size_t k = assets.size();
    if (rho.size() != k * k) throw DataError("correlation slice is not k x k");
    auto name = [&](std::size_t i, std::size_t j) { return "(" + assets[i] + ", " + assets[j] + ")"; };
    DistanceMatrix out;
    out.d.assign(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        if (rho[i * k + i] != 1.0) throw DataError("correlation diagonal entry " + name(i, i) + " is not 1");
        for (std::size_t j = i + 1; j < k; ++j) {
            const double r = rho[i * k + j];
            if (!(r >= -1.0 && r <= 1.0)) throw DataError("correlation entry " + name(i, j) + " outside [-1, 1]");
            if (rho[j * k + i] != r) throw DataError("correlation entry " + name(i, j) + " is not symmetric");
            const double d = mantegna_distance(r);
            out.d[i * k + j] = d;
            out.d[j * k + i] = d;
        }
    }
    out.assets = std::move(assets);
    return out;
}

UnionFind::UnionFind(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }

std::size_t UnionFind::find(std::size_t x) {
    std::size_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) {
        const std::size_t next = parent_[x];
        parent_[x] = root;
        x = next;
    }
    return root;
}

bool UnionFind::unite(std::size_t x, std::size_t y) {
    x = find(x);
    y = find(y);
    if (x == y) return false;
    if (rank_[x] < rank_[y]) std::swap(x, y);
    parent_[y] = x;
    if (rank_[x] == rank_[y]) ++rank_[x];
    return true;
}

SpanningTree kruskal_mst(const DistanceMatrix& dist, std::string period) {
    const std::size_t k = dist.size();
    if (k < 2) throw DataError("spanning tree needs at least two assets");
    std::vector<Edge> edges;
    edges.reserve(k * (k - 1) / 2);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            const double w = dist.at(i, j);
            if (!std::isfinite(w)) throw DataError("distance entry (" + dist.assets[i] + ", " + dist.assets[j] + ") is not finite");
            edges.push_back({i, j, w});
        }
    std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
        if (x.w != y.w) return x.w < y.w;
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    });
    SpanningTree tree;
    tree.assets = dist.assets;
    tree.period = std::move(period);
    UnionFind uf(k);
    for (const auto& e : edges) {
        if (uf.unite(e.a, e.b)) {
            tree.edges.push_back(e);
            if (tree.edges.size() == k - 1) break;
        }
    }
    return tree;
}

std::vector<std::vector<std::size_t>> adjacency(const SpanningTree& tree) {
    std::vector<std::vector<std::size_t>> adj(tree.size());
    for (const auto& e : tree.edges) {
        if (e.a >= tree.size() || e.b >= tree.size()) throw DataError("tree edge refers to unknown node");
        adj[e.a].push_back(e.b);
        adj[e.b].push_back(e.a);
    }
    return adj;
}

void validate_tree(const SpanningTree& tree) {
    const std::size_t k = tree.size();
    if (k < 1) throw DataError("tree has no nodes");
    if (tree.edges.size() != k - 1)
        throw DataError("tree on " + std::to_string(k) + " nodes has " + std::to_string(tree.edges.size()) + " edges");
    UnionFind uf(k);
    for (const auto& e : tree.edges) {
        if (e.a >= k || e.b >= k || e.a == e.b) throw DataError("tree edge refers to invalid nodes");
        if (!uf.unite(e.a, e.b)) throw DataError("tree edges contain a cycle");
    }
}

std::string to_dot(const SpanningTree& tree, std::span<const std::string> labels) {
    std::ostringstream out;
    out << "graph mst {\n";
    if (!tree.period.empty()) out << "  label=\"" << tree.period << "\";\n";
    for (std::size_t i = 0; i < tree.size(); ++i) {
        const std::string& label = i < labels.size() ? labels[i] : tree.assets[i];
        out << "  n" << i << " [label=\"" << label << "\"];\n";
    }
    for (const auto& e : tree.edges) {
        char w[32];
        std::snprintf(w, sizeof w, "%.4f", e.w);
        out << "  n" << e.a << " -- n" << e.b << " [label=\"" << w << "\"];\n";
    }
    out << "}\n";
    return out.str();
}

nlohmann::json to_json(const SpanningTree& tree) {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : tree.edges) edges.push_back({{"a", e.a}, {"b", e.b}, {"w", e.w}});
    return {{"period", tree.period}, {"nodes", tree.assets}, {"edges", std::move(edges)}};
}

SpanningTree tree_from_json(const nlohmann::json& j) {
    SpanningTree tree;
    try {
        tree.period = j.at("period").get<std::string>();
        tree.assets = j.at("nodes").get<std::vector<std::string>>();
        for (const auto& e : j.at("edges")) {
            Edge edge{e.at("a").get<std::size_t>(), e.at("b").get<std::size_t>(), e.at("w").get<double>()};
            if (edge.a > edge.b) std::swap(edge.a, edge.b);
            tree.edges.push_back(edge);
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed tree JSON: ") + e.what());
    }
    validate_tree(tree);
    return tree;
}

}  // namespace risknet::network
