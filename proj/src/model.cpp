#include "spinuniq/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "spinuniq/errors.hpp"
#include "spinuniq/log_math.hpp"

namespace spinuniq {

Beta Beta::finite(double value) {
    if (!std::isfinite(value) || value < 0.0) {
        throw ParameterError("beta must be finite and >= 0 (use Beta::hard() for beta = inf)");
    }
    return Beta(value, false);
}

double Beta::value() const {
    if (hard_) {
        throw PreconditionError("beta is the hard-constraint sentinel");
    }
    return value_;
}

double Beta::log_weight(int conflicts) const {
    if (conflicts == 0) {
        return 0.0;
    }
    return hard_ ? kNegInf : -value_ * conflicts;
}

void ModelParams::validate() const {
    if (q < 3) {
        throw ParameterError("q must be >= 3, got " + std::to_string(q));
    }
    if (!std::isfinite(lambda)) {
        throw ParameterError("lambda must be finite");
    }
    if (eta_flip) {
        auto [i, j] = *eta_flip;
        if (i < 1 || j < 1 || i > q + 1 || j > q + 1) {
            throw ParameterError("eta_flip state out of range");
        }
    }
}

ModelParams make_params(int q, double lambda, Beta beta) {
    ModelParams p{q, lambda, beta, std::nullopt};
    p.validate();
    return p;
}

int eta(int q, int i, int j) {
    if (i < 1 || j < 1 || i > q + 1 || j > q + 1) {
        throw ParameterError("eta: state out of range for q=" + std::to_string(q));
    }
    if (i == j) {
        return i <= q ? 1 : 0;
    }
    int hi = std::max(i, j);
    int lo = std::min(i, j);
    return (hi == q + 1 && lo <= 2) ? 1 : 0;
}

int eta(const ModelParams& params, int i, int j) {
    int e = eta(params.q, i, j);
    if (params.eta_flip) {
        auto [a, b] = *params.eta_flip;
        if ((i == a && j == b) || (i == b && j == a)) {
            e = 1 - e;
        }
    }
    return e;
}

double log_gibbs_weight(const FiniteGraph& graph, const Configuration& config,
                        const ModelParams& params) {
    if (static_cast<int>(config.size()) != graph.n_vertices) {
        throw ParameterError("configuration does not cover the graph");
    }
    int occupied = 0;
    for (int s : config) {
        if (s < 1 || s > params.num_states()) {
            throw ParameterError("configuration state out of range");
        }
        occupied += (s == params.special_state());
    }
    int conflicts = 0;
    for (auto [u, v] : graph.edges) {
        conflicts += eta(params, config[u], config[v]);
    }
    double lw = params.beta.log_weight(conflicts);
    if (lw == kNegInf) {
        return kNegInf;
    }
    return params.lambda * occupied + lw;
}

double lemma3_threshold(int q) { return std::log(q) + q * std::numbers::ln2; }

double theorem1_threshold(int q) { return 3.0 * std::log(q) + (q + 1) * 2.0 * std::numbers::ln2; }

PremiseCheck check_premises(const ModelParams& params) {
    PremiseCheck c;
    c.lemma3_lambda_threshold = lemma3_threshold(params.q);
    c.theorem1_lambda_threshold = theorem1_threshold(params.q);
    c.lemma3_ok = params.q >= 90 && params.lambda > c.lemma3_lambda_threshold;
    c.theorem1_ok = params.q >= 90 && params.lambda > c.theorem1_lambda_threshold;
    return c;
}

}  // namespace spinuniq
