#pragma once

#include <stdexcept>
#include <string>

namespace spinuniq {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed argument: out-of-range state, wrong message count, bad q.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Inputs are well formed but outside the region where a bound is asserted.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Model parameters fail the hypotheses a certificate needs (q >= 90, e^lambda large enough).
class PremiseError : public Error {
public:
    using Error::Error;
};

/// Exact computation refused because its cost grows like (q+1)^q.
class RefusalError : public Error {
public:
    using Error::Error;
};

class BudgetError : public Error {
public:
    BudgetError(const std::string& what, double log_cost, double log_budget)
        : Error(what), log_cost_(log_cost), log_budget_(log_budget) {}
    double log_cost() const { return log_cost_; }
    double log_budget() const { return log_budget_; }

private:
    double log_cost_;
    double log_budget_;
};

/// Hard-constraint enumeration found no admissible configuration.
class UnsatisfiableError : public Error {
public:
    using Error::Error;
};

/// A search (beta, root bracket, burn-in depth) did not succeed within its limits.
class NotFoundError : public Error {
public:
    using Error::Error;
};

}  // namespace spinuniq
