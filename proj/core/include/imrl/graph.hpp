#pragma once

#include <cstdint>
#include <vector>

namespace imrl::causal {

/// Undirected adjacency over component nodes: symmetric, zero diagonal.
class AdjacencyMatrix {
public:
    AdjacencyMatrix() = default;
    explicit AdjacencyMatrix(int n_nodes) : n_(n_nodes), edges_(static_cast<std::size_t>(n_nodes) * n_nodes, 0) {}

    int size() const { return n_; }

    bool has_edge(int i, int j) const { return edges_[idx(i, j)] != 0; }

    void add_edge(int i, int j) {
        if (i == j) return; // diagonal stays zero
        edges_[idx(i, j)] = 1;
        edges_[idx(j, i)] = 1;
    }

    bool operator==(const AdjacencyMatrix& other) const {
        return n_ == other.n_ && edges_ == other.edges_;
    }

private:
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * n_ + j; }

    int n_ = 0;
    std::vector<std::uint8_t> edges_;
};

/// Maximal connected groups, ordered by smallest member; members sorted.
std::vector<std::vector<int>> connected_components(const AdjacencyMatrix& m);

/// The component containing `node`, sorted.
std::vector<int> component_of(const AdjacencyMatrix& m, int node);

} // namespace imrl::causal
