#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spinuniq/log_simplex.hpp"
#include "spinuniq/model.hpp"

namespace spinuniq {

// One level of the q-ary tree recursion: a root with q children u_1..u_q,
// child l carrying the detached-subtree marginal ("message") m_l.

/// ln sum_c e^{-beta eta(j, c)} m(c): one child's factor for root state j,
/// without the e^lambda prefactor of j = q+1. Evaluated as
/// ln(mass outside the conflict set + e^{-beta} * mass inside it), which has
/// no 1 - x cancellation.
double child_factor(int j, const LogSimplex& m, const ModelParams& params);

/// Per root state j, sum_l child_factor(j, m_l); the activity lambda is not
/// included. Index 0 is state 1.
std::vector<double> tree_log_weights(std::span<const LogSimplex> messages,
                                     const ModelParams& params);

/// Root marginal from q child messages in O(q^2).
LogSimplex tree_step(std::span<const LogSimplex> messages, const ModelParams& params);

/// Root marginal of truncate_tree(q, depth) by composing tree_step from
/// point-mass leaf messages; leaf_states follows the tree's BFS leaf order.
LogSimplex tree_root_marginal(int q, int depth, std::span<const int> leaf_states,
                              const ModelParams& params);

/// Same marginal by summing psi(j, j') over all (q+1)^q child states. q <= 6.
LogSimplex tree_step_bruteforce(std::span<const LogSimplex> messages, const ModelParams& params);

/// 1 / (1 + sum_{j in {3..q}, j != k} prod_l (1 - m_l(j))), k in [q].
double lemma1_bound(std::span<const LogSimplex> messages, int k);

struct Lemma2Result {
    double lhs;
    double bound;
    bool holds;
};

/// Checks sum_{j in {3..q}, j != k} prod_l (1 - m_l(j)) >= (q/6 - 3) p (1-p).
/// Requires 1/2 <= p < 1 and m_l(j) <= p for every j <= q.
Lemma2Result lemma2_check(std::span<const LogSimplex> messages, int k, double p);

/// Exhaustive minimum of the lemma2 left-hand side over message families with
/// m_l(a_l) = p, m_l(b_l) = 1-p, a_l != b_l in [q]. q <= 7.
double lemma2_extremal_min(int q, int k, double p);

/// 1 / (1 + (q/6 - 3) p (1 - p)).
double f_tree(double p, int q);

struct WorstCaseTrace {
    /// 1 / (1 + e^{lambda - beta q}): no first-q state beats this at depth 1.
    NearOneProb p1 = NearOneProb::one();
    /// p_1, p_2, ... with p_n = f_tree(max(p_{n-1}, 1/2)).
    std::vector<NearOneProb> trace;
    /// First level with p_n <= 1/4, plus one.
    std::optional<std::int64_t> burnin_N;
    /// First level with p_n < 1/2.
    std::optional<std::int64_t> escape_level;
    /// Levels advanced in the ln(1-p) representation.
    std::int64_t near_one_levels = 0;
    /// (beta q - lambda) / ln(q/6 - 3).
    double closed_form_levels = 0.0;
    /// Limit of the unclamped orbit p <- f_tree(p), run 500 levels past burn-in.
    double orbit_limit = 0.0;
};

/// Requires the lemma3 premises and finite beta.
WorstCaseTrace worst_case_trace(const ModelParams& params, std::int64_t max_levels);

struct ContractionConstant {
    double log_c;
    double c;
    /// e^{-lambda} q^3 4^{q+1}
    double log_loose;
    double loose;
};

/// 2 q^2 e^{-lambda} (2^q + 4^q (1 + q e^{-lambda})), evaluated in logs.
/// Requires the theorem1 premises.
ContractionConstant contraction_constant(const ModelParams& params);

/// ||tree_step(P) - tree_step(Q)||_1 / max_l ||P^l - Q^l||_1 (0 when the pairs coincide).
/// Every message must put mass >= 1/2 on q+1.
double measure_contraction(std::span<const LogSimplex> messages_p,
                           std::span<const LogSimplex> messages_q, const ModelParams& params);

struct TreeCertificate {
    ModelParams params;
    PremiseCheck premises;
    double eps = 0.0;
    NearOneProb p1_bound = NearOneProb::one();
    std::int64_t burnin_N = 0;
    std::int64_t escape_level = 0;
    double closed_form_levels = 0.0;
    /// ln of the lower bound on the q+1 mass of every message past burn-in.
    double log_special_mass_bound = 0.0;
    ContractionConstant contraction{};
    std::int64_t depth_n = 0;
    double tv_bound = 0.0;
    double log_tv_bound = 0.0;
    double orbit_limit = 0.0;
    std::vector<NearOneProb> trace;
};

/// Depth at which any two boundary conditions give root marginals within
/// tv_bound = 2 C^{depth_n - burnin_N} < eps.
TreeCertificate certify_tree_uniqueness(const ModelParams& params, double eps,
                                        std::int64_t max_levels);

}  // namespace spinuniq
