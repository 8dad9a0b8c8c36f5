#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace spinuniq {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// ln(e^a + e^b), exact for -inf operands.
double log_add_exp(double a, double b);

double log_sum_exp(std::span<const double> xs);

/// ln(1 - e^x) for x <= 0; returns -inf at x = 0.
double log1m_exp(double x);

/// ln(1 + e^x).
double softplus(double x);

double log_factorial(int n);
double log_binomial(int n, int k);

/// Streaming log-sum-exp. Summation order is the insertion order, so results
/// are reproducible for a fixed traversal.
class LogSumAccumulator {
public:
    void add(double x) {
        if (x == kNegInf) {
            return;
        }
        if (x <= max_) {
            sum_ += std::exp(x - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - x) + 1.0;
            max_ = x;
        }
    }

    void merge(const LogSumAccumulator& other) {
        if (other.max_ == kNegInf) {
            return;
        }
        if (max_ == kNegInf) {
            *this = other;
            return;
        }
        if (other.max_ <= max_) {
            sum_ += other.sum_ * std::exp(other.max_ - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - other.max_) + other.sum_;
            max_ = other.max_;
        }
    }

    double value() const { return max_ == kNegInf ? kNegInf : max_ + std::log(sum_); }

private:
    double max_ = kNegInf;
    double sum_ = 0.0;
};

}  // namespace spinuniq
