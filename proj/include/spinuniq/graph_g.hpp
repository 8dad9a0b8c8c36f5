#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spinuniq/finite_graph.hpp"
#include "spinuniq/log_simplex.hpp"
#include "spinuniq/model.hpp"

namespace spinuniq {

// The graph G: each odd-row vertex u spawns a (q-1)-clique that forms a
// q-clique with u; each even-row clique u_1..u_{q-1} spawns w_1..w_{q-1}
// with u_l adjacent to w_l and w_{l+1} (indices cyclic, w_q = w_1). Every
// vertex except the root and the last row has degree q+1.

struct GraphLevels {
    int q = 0;
    int levels = 0;
    /// Rows 1 .. 2*levels+1; boundary = row 2*levels+1 (distance 2*levels from the root).
    FiniteGraph graph;
};

GraphLevels build_graph_g(int q, int levels);

/// ln phi(i, j, k): root state i, clique states j_1..j_{q-1}, child states
/// k_1..k_{q-1}, with j_l adjacent to k_l and k_{l+1} (k_q read as k_1).
double log_phi(int i, std::span<const int> j, std::span<const int> k, const ModelParams& params);

/// Exact root marginal one two-row level up, every w carrying message m.
/// The k-sum factorizes per w since w_l only touches u_{l-1} and u_l. q <= 8.
LogSimplex graph_step(const LogSimplex& m, const ModelParams& params);

/// Literal double sum over (j, k) of phi(i, j, k) prod_l m(k_l). q <= 4.
LogSimplex graph_step_bruteforce(const LogSimplex& m, const ModelParams& params);

/// ln(1 - p^{q-1} - (q-1) p^{q-2} (1-p)) for p = 1 - delta, computed as
/// ln P[Binomial(q-1, delta) >= 2] so no term cancels.
double log_two_or_more(double log_delta, int q);

/// Lower bound A / (A + B + C(p)) on the next root probability of state 1, with
///   A = (q-1)! p^{q-1}, B = e^{q lambda - beta} q (q+1)^{q-1},
///   C(p) = e^{q lambda} q (q+1)^{q-1} (1 - p^{q-1} - (q-1) p^{q-2} (1-p)).
NearOneProb f_beta(NearOneProb p, const ModelParams& params);

/// beta -> inf limit of f_beta: A / (A + C(p)).
NearOneProb f_limit(NearOneProb p, int q, double lambda);

/// ln K where 1 - f_limit(1 - delta) ~ K delta^2 as delta -> 0.
double f_limit_log_curvature(int q, double lambda);

/// ln delta*, the largest delta with f_limit(1 - d) > 1 - d for all d in (0, delta).
double epsilon_window(int q, double lambda);

struct BetaSearchOptions {
    double beta_ceiling = 1e9;
};

/// Finite beta with f_beta(p*) > target for every p* in [target, 1], checked
/// on 1000 points uniform in ln delta over [ln delta_t - 10, ln delta_t] plus p* = 1.
double find_beta(int q, double lambda, NearOneProb target, const BetaSearchOptions& options = {});

/// max over the find_beta grid of ln(1 - f_beta(p*)) - ln(1 - target); negative iff certified.
double basin_margin(const ModelParams& params, NearOneProb target);

struct GraphCertifyOptions {
    double beta_ceiling = 1e9;
    std::int64_t max_iterations = 1000000;
};

struct NonuniquenessCertificate {
    ModelParams params;
    double log_delta_star = 0.0;
    NearOneProb target = NearOneProb::one();
    NearOneProb start = NearOneProb::one();
    /// "exact-one-level" (graph_step from the all-1 boundary) or "target".
    std::string start_source;
    std::vector<NearOneProb> trace;
    NearOneProb fixed_point = NearOneProb::one();
    int symmetric_state = 2;
    bool converged = false;
    std::int64_t iterations = 0;
    double basin_margin = 0.0;
    /// Sign changes of f_beta(p) - p on [target, 1].
    int basin_sign_changes = 0;
    bool nonunique = false;
};

NonuniquenessCertificate certify_graph_nonuniqueness(int q, double lambda,
                                                     const GraphCertifyOptions& options = {});

struct ExactFixedPoint {
    LogSimplex message;
    std::int64_t iterations = 0;
    bool converged = false;
};

/// Iterates graph_step from the point mass on state 1 (the all-1 boundary)
/// until successive messages differ by less than tol in L1.
ExactFixedPoint graph_fixed_point(const ModelParams& params, std::int64_t max_iterations = 100000,
                                  double tol = 1e-14);

}  // namespace spinuniq
