#pragma once

#include <span>
#include <vector>

#include "spinuniq/finite_graph.hpp"
#include "spinuniq/log_simplex.hpp"
#include "spinuniq/model.hpp"

namespace spinuniq {

/// q-ary tree of the given depth; boundary = the leaves at distance `depth`.
FiniteGraph truncate_tree(int q, int depth);

struct EnumerationOptions {
    /// Cap on (#configurations) * max(1, #edges).
    double budget = 1e8;
    int workers = 1;
};

struct GibbsMarginal {
    LogSimplex root;
    /// ln Z of the system conditioned on the boundary.
    double log_z;
};

/// Root marginal by summing the Gibbs weight over every configuration of the
/// free vertices. Shares no code with the recursions it is used to check.
GibbsMarginal enumerate_gibbs(const FiniteGraph& graph, const BoundaryCondition& boundary,
                              const ModelParams& params, const EnumerationOptions& options = {});

/// Joint conditional law of the free vertices `targets`, as log-probabilities
/// indexed in mixed radix (q+1) with targets[0] least significant.
std::vector<double> enumerate_joint(const FiniteGraph& graph, const BoundaryCondition& boundary,
                                    const ModelParams& params, std::span<const int> targets,
                                    const EnumerationOptions& options = {});

double tv_distance(const LogSimplex& a, const LogSimplex& b);

}  // namespace spinuniq
