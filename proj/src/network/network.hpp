#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace risknet::network {

struct DistanceMatrix {
    std::vector<std::string> assets;
    std::vector<double> d;  // k x k row-major, symmetric, zero diagonal

    std::size_t size() const { return assets.size(); }
    double at(std::size_t i, std::size_t j) const { return d[i * assets.size() + j]; }
};

struct Edge {
    std::size_t a = 0;  // a < b
    std::size_t b = 0;
    double w = 0.0;

    bool operator==(const Edge&) const = default;
};

struct SpanningTree {
    std::vector<std::string> assets;
    std::vector<Edge> edges;  // in Kruskal acceptance order
    std::string period;

    std::size_t size() const { return assets.size(); }
    double total_weight() const;
};

/// Mantegna metric d = sqrt(2 (1 - rho)) on a k x k row-major correlation slice.
/// Throws DataError naming the entry when the slice is not symmetric with unit
/// diagonal and entries in [-1, 1].
DistanceMatrix to_distance(std::span<const double> rho, std::vector<std::string> assets);

inline double mantegna_distance(double rho) { return std::sqrt(2.0 * (1.0 - rho)); }

/// Kruskal with edges ordered by (weight, min(i,j), max(i,j)).
SpanningTree kruskal_mst(const DistanceMatrix& dist, std::string period = {});

/// Disjoint sets with path compression and union by rank.
class UnionFind {
public:
    explicit UnionFind(std::size_t n);
    std::size_t find(std::size_t x);
    bool unite(std::size_t x, std::size_t y);

private:
    std::vector<std::size_t> parent_;
    std::vector<unsigned char> rank_;
};

/// Adjacency lists of a tree on tree.size() nodes.
std::vector<std::vector<std::size_t>> adjacency(const SpanningTree& tree);

/// Throws DataError unless the edge list is a spanning tree (k-1 edges, connected, acyclic).
void validate_tree(const SpanningTree& tree);

std::string to_dot(const SpanningTree& tree, std::span<const std::string> labels = {});
nlohmann::json to_json(const SpanningTree& tree);
SpanningTree tree_from_json(const nlohmann::json& j);

}  // namespace risknet::network
