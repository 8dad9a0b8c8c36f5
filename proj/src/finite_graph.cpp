#include "spinuniq/finite_graph.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "spinuniq/errors.hpp"

namespace spinuniq {

void FiniteGraph::validate() const {
    if (n_vertices <= 0) {
        throw ParameterError("graph has no vertices");
    }
    if (root < 0 || root >= n_vertices) {
        throw ParameterError("root index out of range");
    }
    std::set<std::pair<int, int>> seen;
    for (auto [u, v] : edges) {
        if (u < 0 || v < 0 || u >= n_vertices || v >= n_vertices) {
            throw ParameterError("edge endpoint out of range");
        }
        if (u == v) {
            throw ParameterError("self-loop at vertex " + std::to_string(u));
        }
        if (!seen.insert(std::minmax(u, v)).second) {
            throw ParameterError("duplicate edge " + std::to_string(u) + "-" + std::to_string(v));
        }
    }
    std::set<int> b(boundary.begin(), boundary.end());
    if (b.size() != boundary.size()) {
        throw ParameterError("duplicate boundary vertex");
    }
    for (int v : boundary) {
        if (v < 0 || v >= n_vertices) {
            throw ParameterError("boundary vertex out of range");
        }
    }
    if (b.count(root) != 0) {
        throw ParameterError("root lies in the boundary");
    }
    if (!rows.empty() && static_cast<int>(rows.size()) != n_vertices) {
        throw ParameterError("row labels do not cover every vertex");
    }
}

std::vector<int> FiniteGraph::degrees() const {
    std::vector<int> deg(n_vertices, 0);
    for (auto [u, v] : edges) {
        ++deg[u];
        ++deg[v];
    }
    return deg;
}

std::vector<std::vector<int>> FiniteGraph::adjacency() const {
    std::vector<std::vector<int>> adj(n_vertices);
    for (auto [u, v] : edges) {
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    return adj;
}

bool FiniteGraph::is_boundary(int v) const {
    return std::find(boundary.begin(), boundary.end(), v) != boundary.end();
}

BoundaryCondition constant_boundary(const FiniteGraph& graph, int state) {
    BoundaryCondition bc;
    bc.reserve(graph.boundary.size());
    for (int v : graph.boundary) {
        bc.emplace_back(v, state);
    }
    return bc;
}

}  // namespace spinuniq
