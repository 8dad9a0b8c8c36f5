#include "spinuniq/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <thread>

#include "spinuniq/errors.hpp"
#include "spinuniq/log_math.hpp"

namespace spinuniq {

FiniteGraph truncate_tree(int q, int depth) {
    if (q < 2 || depth < 1) {
        throw ParameterError("truncate_tree needs q >= 2 and depth >= 1");
    }
    FiniteGraph g;
    g.root = 0;
    g.n_vertices = 1;
    g.rows.push_back(1);
    std::vector<int> frontier{0};
    for (int d = 1; d <= depth; ++d) {
        std::vector<int> next;
        for (int parent : frontier) {
            for (int c = 0; c < q; ++c) {
                int v = g.n_vertices++;
                g.rows.push_back(d + 1);
                g.edges.emplace_back(parent, v);
                next.push_back(v);
            }
        }
        frontier = std::move(next);
    }
    g.boundary = frontier;
    return g;
}

namespace {

struct Constraint {
    int other;        // earlier free position, or -1 if pinned
    int pinned_state;  // valid when other == -1
};

struct EnumerationPlan {
    int num_states = 0;
    std::vector<int> order;                          // free vertices, targets first
    std::vector<std::vector<Constraint>> constraints;  // per position, edges to earlier/pinned
    std::vector<int> eta_table;                      // (q+1)^2, 0-based states
    int num_targets = 0;
};

EnumerationPlan make_plan(const FiniteGraph& graph, const BoundaryCondition& boundary,
                          const ModelParams& params, std::span<const int> targets,
                          const EnumerationOptions& options) {
    graph.validate();
    params.validate();
    const int n = params.num_states();

    std::vector<int> pinned(graph.n_vertices, 0);
    for (auto [v, s] : boundary) {
        if (v < 0 || v >= graph.n_vertices || !graph.is_boundary(v)) {
            throw ParameterError("boundary condition names a non-boundary vertex");
        }
        if (s < 1 || s > n) {
            throw ParameterError("boundary state out of range");
        }
        if (pinned[v] != 0) {
            throw ParameterError("boundary vertex pinned twice");
        }
        pinned[v] = s;
    }
    for (int v : graph.boundary) {
        if (pinned[v] == 0) {
            throw ParameterError("boundary condition is not total on the boundary");
        }
    }

    EnumerationPlan plan;
    plan.num_states = n;
    plan.num_targets = static_cast<int>(targets.size());
    std::vector<int> position(graph.n_vertices, -1);
    for (int t : targets) {
        if (t < 0 || t >= graph.n_vertices || pinned[t] != 0 || position[t] != -1) {
            throw ParameterError("enumeration target must be a distinct free vertex");
        }
        position[t] = static_cast<int>(plan.order.size());
        plan.order.push_back(t);
    }
    // Remaining free vertices in BFS order from the root keeps rows contiguous,
    // so hard-constraint pruning triggers early.
    auto adj = graph.adjacency();
    std::vector<char> seen(graph.n_vertices, 0);
    std::deque<int> queue{graph.root};
    seen[graph.root] = 1;
    std::vector<int> bfs;
    while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        bfs.push_back(u);
        for (int w : adj[u]) {
            if (!seen[w]) {
                seen[w] = 1;
                queue.push_back(w);
            }
        }
    }
    for (int v = 0; v < graph.n_vertices; ++v) {
        if (!seen[v]) {
            bfs.push_back(v);
        }
    }
    for (int v : bfs) {
        if (pinned[v] == 0 && position[v] == -1) {
            position[v] = static_cast<int>(plan.order.size());
            plan.order.push_back(v);
        }
    }

    const double log_cost = static_cast<double>(plan.order.size()) * std::log(n) +
                            std::log(std::max<std::size_t>(1, graph.edges.size()));
    const double log_budget = std::log(options.budget);
    if (log_cost > log_budget) {
        std::ostringstream msg;
        msg << "enumeration budget exceeded: " << n << "^" << plan.order.size()
            << " configurations x " << graph.edges.size() << " edges = e^" << log_cost
            << " > budget " << options.budget;
        throw BudgetError(msg.str(), log_cost, log_budget);
    }

    plan.constraints.assign(plan.order.size(), {});
    for (auto [u, v] : graph.edges) {
        int pu = position[u];
        int pv = position[v];
        if (pu == -1 && pv == -1) {
            continue;  // boundary-boundary edges only add a constant
        }
        if (pu == -1) {
            plan.constraints[pv].push_back({-1, pinned[u]});
        } else if (pv == -1) {
            plan.constraints[pu].push_back({-1, pinned[v]});
        } else if (pu < pv) {
            plan.constraints[pv].push_back({pu, 0});
        } else {
            plan.constraints[pu].push_back({pv, 0});
        }
    }
    plan.eta_table.assign(n * n, 0);
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) {
            plan.eta_table[(i - 1) * n + (j - 1)] = eta(params, i, j);
        }
    }
    return plan;
}

// Sums weights over all completions of the free positions >= num_targets,
// with positions < num_targets fixed by `assignment`.
double sum_completions(const EnumerationPlan& plan, const ModelParams& params,
                       std::vector<int> assignment, int fixed_conflicts, int fixed_occupied) {
    const int n = plan.num_states;
    const int total = static_cast<int>(plan.order.size());
    const bool hard = params.beta.is_hard();
    LogSumAccumulator acc;

    auto conflicts_at = [&](int pos, int state) {
        int c = 0;
        for (const Constraint& k : plan.constraints[pos]) {
            int other = k.other == -1 ? k.pinned_state - 1 : assignment[k.other];
            c += plan.eta_table[state * n + other];
        }
        return c;
    };

    auto recurse = [&](auto& self, int pos, int conflicts, int occupied) -> void {
        if (pos == total) {
            double lw = params.beta.log_weight(conflicts);
            if (lw != kNegInf) {
                acc.add(params.lambda * occupied + lw);
            }
            return;
        }
        for (int s = 0; s < n; ++s) {
            int c = conflicts_at(pos, s);
            if (hard && c > 0) {
                continue;
            }
            assignment[pos] = s;
            self(self, pos + 1, conflicts + c, occupied + (s == n - 1));
        }
    };
    recurse(recurse, plan.num_targets, fixed_conflicts, fixed_occupied);
    return acc.value();
}

std::vector<double> unnormalized_target_weights(const EnumerationPlan& plan,
                                                const ModelParams& params, int workers) {
    const int n = plan.num_states;
    std::size_t tuples = 1;
    for (int t = 0; t < plan.num_targets; ++t) {
        tuples *= static_cast<std::size_t>(n);
    }
    std::vector<double> out(tuples, kNegInf);

    auto evaluate = [&](std::size_t index) {
        std::vector<int> assignment(plan.order.size(), 0);
        std::size_t rem = index;
        for (int t = 0; t < plan.num_targets; ++t) {
            assignment[t] = static_cast<int>(rem % n);
            rem /= n;
        }
        int conflicts = 0;
        int occupied = 0;
        for (int t = 0; t < plan.num_targets; ++t) {
            for (const Constraint& k : plan.constraints[t]) {
                int other = k.other == -1 ? k.pinned_state - 1 : assignment[k.other];
                conflicts += plan.eta_table[assignment[t] * n + other];
            }
            occupied += (assignment[t] == n - 1);
        }
        if (params.beta.is_hard() && conflicts > 0) {
            out[index] = kNegInf;
            return;
        }
        out[index] = sum_completions(plan, params, std::move(assignment), conflicts, occupied);
    };

    // Each tuple is an independent slot, so results do not depend on the split.
    const int w = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(1, tuples)));
    if (w == 1) {
        for (std::size_t i = 0; i < tuples; ++i) {
            evaluate(i);
        }
        return out;
    }
    std::vector<std::thread> pool;
    for (int t = 0; t < w; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < tuples; i += w) {
                evaluate(i);
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    return out;
}

}  // namespace

std::vector<double> enumerate_joint(const FiniteGraph& graph, const BoundaryCondition& boundary,
                                    const ModelParams& params, std::span<const int> targets,
                                    const EnumerationOptions& options) {
    EnumerationPlan plan = make_plan(graph, boundary, params, targets, options);
    std::vector<double> w = unnormalized_target_weights(plan, params, options.workers);
    double z = log_sum_exp(w);
    if (z == kNegInf) {
        throw UnsatisfiableError("unsatisfiable boundary: no configuration has positive weight");
    }
    for (double& x : w) {
        x -= z;
    }
    return w;
}

GibbsMarginal enumerate_gibbs(const FiniteGraph& graph, const BoundaryCondition& boundary,
                              const ModelParams& params, const EnumerationOptions& options) {
    const int root[] = {graph.root};
    EnumerationPlan plan = make_plan(graph, boundary, params, root, options);
    std::vector<double> w = unnormalized_target_weights(plan, params, options.workers);
    double z = log_sum_exp(w);
    if (z == kNegInf) {
        throw UnsatisfiableError("unsatisfiable boundary: no configuration has positive weight");
    }
    // Boundary-boundary edges are constant in the free spins but belong to Z.
    int pinned_conflicts = 0;
    int pinned_occupied = 0;
    {
        std::vector<int> pinned(graph.n_vertices, 0);
        for (auto [v, s] : boundary) {
            pinned[v] = s;
            pinned_occupied += (s == params.special_state());
        }
        for (auto [u, v] : graph.edges) {
            if (pinned[u] != 0 && pinned[v] != 0) {
                pinned_conflicts += eta(params, pinned[u], pinned[v]);
            }
        }
    }
    double pinned_weight = params.beta.log_weight(pinned_conflicts);
    if (pinned_weight == kNegInf) {
        throw UnsatisfiableError("unsatisfiable boundary: pinned vertices conflict");
    }
    double log_z = z + params.lambda * pinned_occupied + pinned_weight;
    return GibbsMarginal{LogSimplex::from_log_weights(std::move(w)), log_z};
}

double tv_distance(const LogSimplex& a, const LogSimplex& b) { return 0.5 * l1_distance(a, b); }

}  // namespace spinuniq
