#include "spinuniq/log_math.hpp"

#include <algorithm>
#include <numbers>

namespace spinuniq {

double log_add_exp(double a, double b) {
    if (a < b) {
        std::swap(a, b);
    }
    if (b == kNegInf) {
        return a;
    }
    return a + std::log1p(std::exp(b - a));
}

double log_sum_exp(std::span<const double> xs) {
    double hi = kNegInf;
    for (double x : xs) {
        hi = std::max(hi, x);
    }
    if (hi == kNegInf) {
        return kNegInf;
    }
    double s = 0.0;
    for (double x : xs) {
        s += std::exp(x - hi);
    }
    return hi + std::log(s);
}

double log1m_exp(double x) {
    if (x == kNegInf) {
        return 0.0;
    }
    // Maechler's switch point: expm1 near 0, log1p further out.
    if (x > -std::numbers::ln2) {
        return std::log(-std::expm1(x));
    }
    return std::log1p(-std::exp(x));
}

double softplus(double x) {
    if (x > 0) {
        return x + std::log1p(std::exp(-x));
    }
    return std::log1p(std::exp(x));
}

double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

double log_binomial(int n, int k) {
    if (k < 0 || k > n) {
        return kNegInf;
    }
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

}  // namespace spinuniq
