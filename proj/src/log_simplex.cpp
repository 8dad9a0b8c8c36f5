#include "spinuniq/log_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spinuniq/errors.hpp"
#include "spinuniq/log_math.hpp"

namespace spinuniq {

LogSimplex LogSimplex::from_log_weights(std::vector<double> log_weights) {
    if (log_weights.size() < 2) {
        throw ParameterError("LogSimplex needs at least two states");
    }
    for (double w : log_weights) {
        if (std::isnan(w) || w == std::numeric_limits<double>::infinity()) {
            throw ParameterError("LogSimplex weight is NaN or +inf");
        }
    }
    double z = log_sum_exp(log_weights);
    if (z == kNegInf) {
        throw ParameterError("LogSimplex weights are all zero");
    }
    for (double& w : log_weights) {
        w -= z;
    }
    return LogSimplex(std::move(log_weights));
}

LogSimplex LogSimplex::from_probabilities(std::span<const double> probs) {
    std::vector<double> w(probs.size());
    for (std::size_t s = 0; s < probs.size(); ++s) {
        if (probs[s] < 0.0) {
            throw ParameterError("negative probability");
        }
        w[s] = probs[s] == 0.0 ? kNegInf : std::log(probs[s]);
    }
    return from_log_weights(std::move(w));
}

LogSimplex LogSimplex::point_mass(int q, int state) {
    if (q < 1 || state < 1 || state > q + 1) {
        throw ParameterError("point_mass: state " + std::to_string(state) + " outside [1, " +
                             std::to_string(q + 1) + "]");
    }
    std::vector<double> w(q + 1, kNegInf);
    w[state - 1] = 0.0;
    return LogSimplex(std::move(w));
}

LogSimplex LogSimplex::uniform(int q) {
    if (q < 1) {
        throw ParameterError("uniform: q must be positive");
    }
    return LogSimplex(std::vector<double>(q + 1, -std::log(static_cast<double>(q + 1))));
}

double LogSimplex::log_prob(int state) const {
    if (state < 1 || state > num_states()) {
        throw ParameterError("state " + std::to_string(state) + " outside [1, " +
                             std::to_string(num_states()) + "]");
    }
    return logp_[state - 1];
}

double LogSimplex::prob(int state) const { return std::exp(log_prob(state)); }

std::vector<double> LogSimplex::probabilities() const {
    std::vector<double> p(logp_.size());
    std::transform(logp_.begin(), logp_.end(), p.begin(), [](double x) { return std::exp(x); });
    return p;
}

double LogSimplex::log_mass_excluding(std::initializer_list<int> states) const {
    LogSumAccumulator acc;
    for (int s = 1; s <= num_states(); ++s) {
        if (std::find(states.begin(), states.end(), s) == states.end()) {
            acc.add(logp_[s - 1]);
        }
    }
    return acc.value();
}

double LogSimplex::log_mass_of(std::initializer_list<int> states) const {
    LogSumAccumulator acc;
    for (int s : states) {
        acc.add(log_prob(s));
    }
    return acc.value();
}

bool LogSimplex::is_valid(double tol) const {
    for (double x : logp_) {
        if (std::isnan(x) || x > 1e-12) {
            return false;
        }
    }
    return std::abs(log_sum_exp(logp_)) <= tol;
}

double l1_distance(const LogSimplex& a, const LogSimplex& b) {
    if (a.num_states() != b.num_states()) {
        throw ParameterError("l1_distance: dimension mismatch");
    }
    auto lp_a = a.log_probs();
    auto lp_b = b.log_probs();
    std::size_t dominant = 0;
    for (std::size_t s = 1; s < lp_a.size(); ++s) {
        if (lp_a[s] > lp_a[dominant]) {
            dominant = s;
        }
    }
    double total = 0.0;
    double rest = 0.0;
    for (std::size_t s = 0; s < lp_a.size(); ++s) {
        if (s == dominant) {
            continue;
        }
        double d = std::exp(lp_a[s]) - std::exp(lp_b[s]);
        total += std::abs(d);
        rest += d;
    }
    return total + std::abs(rest);
}

NearOneProb NearOneProb::from_log_delta(double log_delta) {
    if (std::isnan(log_delta) || log_delta > 0.0) {
        throw ParameterError("NearOneProb: ln(1-p) must be <= 0");
    }
    return NearOneProb(log_delta);
}

NearOneProb NearOneProb::from_p(double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ParameterError("NearOneProb: p outside [0, 1]");
    }
    return NearOneProb(p == 1.0 ? kNegInf : std::log1p(-p));
}

NearOneProb NearOneProb::one() { return NearOneProb(kNegInf); }

double NearOneProb::log_p() const { return log1m_exp(log_delta_); }

double NearOneProb::p() const {
    if (!direct_ok()) {
        throw PreconditionError("NearOneProb: 1-p below 1e-12, direct value not representable");
    }
    return -std::expm1(log_delta_);
}

}  // namespace spinuniq
