#pragma once

#include <limits>
#include <optional>
#include <utility>

#include "spinuniq/finite_graph.hpp"

namespace spinuniq {

/// Inverse coupling. Either a finite value >= 0 or the hard-constraint
/// sentinel (beta = +inf), in which any conflicting edge has weight exactly 0.
class Beta {
public:
    static Beta finite(double value);
    static Beta hard() { return Beta(0.0, true); }

    bool is_hard() const { return hard_; }
    /// Throws PreconditionError in hard mode.
    double value() const;
    /// ln e^{-beta * conflicts}; -inf for conflicts > 0 in hard mode.
    double log_weight(int conflicts) const;
    /// ln e^{-beta}; -inf in hard mode.
    double log_damping() const { return hard_ ? -std::numeric_limits<double>::infinity() : -value_; }

private:
    Beta(double value, bool hard) : value_(value), hard_(hard) {}
    double value_;
    bool hard_;
};

/// (q, lambda, beta) for the (q+1)-state system: antiferromagnetic Potts on
/// {1..q} plus state q+1 with activity lambda that conflicts with 1 and 2.
/// lambda and beta are only ever used as exponents.
struct ModelParams {
    int q = 3;
    double lambda = 0.0;
    Beta beta = Beta::finite(1.0);
    /// Toggles eta(i, j) and eta(j, i). Honored only by the generic eta()
    /// lookup, so closed-form routes can be checked against a faulty oracle.
    std::optional<std::pair<int, int>> eta_flip;

    int num_states() const { return q + 1; }
    int special_state() const { return q + 1; }
    void validate() const;
};

ModelParams make_params(int q, double lambda, Beta beta);

int eta(int q, int i, int j);
int eta(const ModelParams& params, int i, int j);

/// lambda * #{v : sigma_v = q+1} - beta * sum over edges of eta.
double log_gibbs_weight(const FiniteGraph& graph, const Configuration& config,
                        const ModelParams& params);

double lemma3_threshold(int q);    // ln q + q ln 2
double theorem1_threshold(int q);  // 3 ln q + (q+1) ln 4

struct PremiseCheck {
    bool lemma3_ok = false;
    bool theorem1_ok = false;
    double lemma3_lambda_threshold = 0.0;
    double theorem1_lambda_threshold = 0.0;
};

PremiseCheck check_premises(const ModelParams& params);

}  // namespace spinuniq
