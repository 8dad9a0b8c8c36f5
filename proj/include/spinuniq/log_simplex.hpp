#pragma once

#include <initializer_list>
#include <span>
#include <vector>

namespace spinuniq {

/// Probability distribution over the states {1, ..., q+1}, stored as
/// log-probabilities. Entries may be -inf. Public accessors use 1-based
/// state labels.
class LogSimplex {
public:
    /// Normalizes arbitrary log-weights. Throws ParameterError if every weight is -inf.
    static LogSimplex from_log_weights(std::vector<double> log_weights);
    static LogSimplex from_probabilities(std::span<const double> probs);
    static LogSimplex point_mass(int q, int state);
    static LogSimplex uniform(int q);

    int q() const { return static_cast<int>(logp_.size()) - 1; }
    int num_states() const { return static_cast<int>(logp_.size()); }

    double log_prob(int state) const;
    double prob(int state) const;
    std::span<const double> log_probs() const { return logp_; }
    std::vector<double> probabilities() const;

    /// ln of the total mass outside `states`, summed from the remaining
    /// entries so that 1 - m(s) never suffers cancellation.
    double log_mass_excluding(std::initializer_list<int> states) const;
    double log_mass_of(std::initializer_list<int> states) const;

    /// |log-sum-exp - 0| <= tol and no entry exceeds 1e-12.
    bool is_valid(double tol = 1e-9) const;

private:
    explicit LogSimplex(std::vector<double> logp) : logp_(std::move(logp)) {}
    std::vector<double> logp_;
};

/// L1 distance between the two probability vectors. The largest entry's
/// difference is recovered from the others so near-point-mass inputs keep
/// full relative precision.
double l1_distance(const LogSimplex& a, const LogSimplex& b);

/// Probability p held as ln(1 - p). Covers p within e^-12000 of 1, where a
/// plain double would round to exactly 1.
class NearOneProb {
public:
    /// Below this ln(1-p) the direct value p is not exposed.
    static constexpr double kDirectLogDeltaFloor = -27.631021115928547;  // ln(1e-12)

    static NearOneProb from_log_delta(double log_delta);
    static NearOneProb from_p(double p);
    static NearOneProb one();

    double log_delta() const { return log_delta_; }
    double log_p() const;
    bool direct_ok() const { return log_delta_ > kDirectLogDeltaFloor; }
    /// Throws PreconditionError when !direct_ok().
    double p() const;

    friend bool operator==(const NearOneProb&, const NearOneProb&) = default;

private:
    explicit NearOneProb(double log_delta) : log_delta_(log_delta) {}
    double log_delta_;
};

}  // namespace spinuniq
