#pragma once

#include <utility>
#include <vector>

namespace spinuniq {

/// Simple undirected graph with a designated root and a boundary set on
/// which states are pinned. Vertices are 0-based indices.
struct FiniteGraph {
    int n_vertices = 0;
    std::vector<std::pair<int, int>> edges;
    int root = 0;
    std::vector<int> boundary;
    /// Optional row label per vertex (row 1 is the root); empty if unlabeled.
    std::vector<int> rows;

    /// Throws ParameterError on loops, multi-edges, bad endpoints, or root in boundary.
    void validate() const;
    std::vector<int> degrees() const;
    std::vector<std::vector<int>> adjacency() const;
    bool is_boundary(int v) const;
};

/// Total assignment vertex -> state (1-based states).
using Configuration = std::vector<int>;

/// Pins each listed boundary vertex to a state.
using BoundaryCondition = std::vector<std::pair<int, int>>;

BoundaryCondition constant_boundary(const FiniteGraph& graph, int state);

}  // namespace spinuniq
