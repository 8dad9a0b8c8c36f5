#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "spinuniq/log_simplex.hpp"
#include "spinuniq/model.hpp"

namespace testsupport {

using spinuniq::LogSimplex;

inline std::mt19937_64 rng_for(std::uint64_t seed) { return std::mt19937_64(0x9E3779B97F4A7C15ULL ^ seed); }

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Dirichlet(1)-like vector with some exact zeros.
inline std::vector<double> random_probs(int q, std::mt19937_64& rng, double zero_rate = 0.15) {
    std::vector<double> w(q + 1);
    double total = 0.0;
    for (double& x : w) {
        x = uniform(rng, 0.0, 1.0) < zero_rate ? 0.0 : -std::log(uniform(rng, 1e-300, 1.0));
        total += x;
    }
    if (total == 0.0) {
        w[uniform_int(rng, 0, q)] = 1.0;
        total = 1.0;
    }
    for (double& x : w) {
        x /= total;
    }
    return w;
}

inline LogSimplex random_message(int q, std::mt19937_64& rng, double zero_rate = 0.15) {
    return LogSimplex::from_probabilities(random_probs(q, rng, zero_rate));
}

inline std::vector<LogSimplex> random_family(int q, std::mt19937_64& rng, double zero_rate = 0.15) {
    std::vector<LogSimplex> out;
    for (int l = 0; l < q; ++l) {
        out.push_back(random_message(q, rng, zero_rate));
    }
    return out;
}

/// Mixes a random vector toward state q+1 so that the q+1 mass is at least `floor`.
inline LogSimplex random_special_heavy(int q, std::mt19937_64& rng, double floor = 0.5) {
    std::vector<double> w = random_probs(q, rng, 0.0);
    double t = uniform(rng, 0.0, 1.0 - floor);
    for (double& x : w) {
        x *= t;
    }
    w[q] += 1.0 - t;
    return LogSimplex::from_probabilities(w);
}

/// Random message with every Potts entry (states 1..q) at most p.
inline LogSimplex random_capped(int q, double p, std::mt19937_64& rng) {
    std::vector<double> w = random_probs(q, rng);
    double top = *std::max_element(w.begin(), w.end() - 1);
    if (top > p) {
        double t = p / top;
        for (double& x : w) {
            x *= t;
        }
        w[q] += 1.0 - t;
    }
    return LogSimplex::from_probabilities(w);
}

inline double max_log_dev(const LogSimplex& a, const LogSimplex& b) {
    const double floor = std::log(1e-12);
    double worst = 0.0;
    for (int s = 1; s <= a.num_states(); ++s) {
        double x = a.log_prob(s);
        double y = b.log_prob(s);
        if (x > floor || y > floor) {
            worst = std::max(worst, std::abs(x - y));
        }
    }
    return worst;
}

inline double max_abs_prob_dev(const LogSimplex& a, const LogSimplex& b) {
    double worst = 0.0;
    for (int s = 1; s <= a.num_states(); ++s) {
        worst = std::max(worst, std::abs(a.prob(s) - b.prob(s)));
    }
    return worst;
}

/// perm[s] is the image of state s (1-based; perm[0] unused).
inline LogSimplex permute(const LogSimplex& m, const std::vector<int>& perm) {
    std::vector<double> out(m.num_states());
    for (int s = 1; s <= m.num_states(); ++s) {
        out[perm[s] - 1] = m.log_prob(s);
    }
    return LogSimplex::from_log_weights(out);
}

/// Random permutation preserving {1,2}, {3..q} and {q+1} setwise.
inline std::vector<int> random_symmetry(int q, std::mt19937_64& rng) {
    std::vector<int> perm(q + 2);
    for (int s = 0; s <= q + 1; ++s) {
        perm[s] = s;
    }
    if (uniform(rng, 0.0, 1.0) < 0.5) {
        std::swap(perm[1], perm[2]);
    }
    std::shuffle(perm.begin() + 3, perm.begin() + q + 1, rng);
    return perm;
}

}  // namespace testsupport
