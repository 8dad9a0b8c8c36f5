#include "spinuniq/graph_g.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "spinuniq/errors.hpp"
#include "spinuniq/log_math.hpp"

namespace spinuniq {

GraphLevels build_graph_g(int q, int levels) {
    if (q < 3 || levels < 1) {
        throw ParameterError("build_graph_g needs q >= 3 and levels >= 1");
    }
    const int r = q - 1;
    GraphLevels out;
    out.q = q;
    out.levels = levels;
    FiniteGraph& g = out.graph;
    g.root = 0;
    g.n_vertices = 1;
    g.rows.push_back(1);

    auto add_vertex = [&g](int row) {
        g.rows.push_back(row);
        return g.n_vertices++;
    };

    std::vector<int> odd_row{0};
    for (int level = 0; level < levels; ++level) {
        const int row = 2 * level + 1;
        std::vector<int> next_odd;
        for (int u : odd_row) {
            std::vector<int> clique(r);
            for (int l = 0; l < r; ++l) {
                clique[l] = add_vertex(row + 1);
                g.edges.emplace_back(u, clique[l]);
                for (int m = 0; m < l; ++m) {
                    g.edges.emplace_back(clique[m], clique[l]);
                }
            }
            std::vector<int> w(r);
            for (int l = 0; l < r; ++l) {
                w[l] = add_vertex(row + 2);
            }
            for (int l = 0; l < r; ++l) {
                g.edges.emplace_back(clique[l], w[l]);
                g.edges.emplace_back(clique[l], w[(l + 1) % r]);
            }
            next_odd.insert(next_odd.end(), w.begin(), w.end());
        }
        odd_row = std::move(next_odd);
    }
    g.boundary = odd_row;
    g.validate();
    return out;
}

double log_phi(int i, std::span<const int> j, std::span<const int> k, const ModelParams& params) {
    params.validate();
    const int r = params.q - 1;
    if (static_cast<int>(j.size()) != r || static_cast<int>(k.size()) != r) {
        throw ParameterError("log_phi: j and k must have length q-1");
    }
    const int special = params.special_state();
    int occupied = (i == special);
    int conflicts = 0;
    for (int l = 0; l < r; ++l) {
        occupied += (j[l] == special);
        for (int m = 0; m < l; ++m) {
            conflicts += eta(params, j[m], j[l]);
        }
        conflicts += eta(params, i, j[l]);
        conflicts += eta(params, j[l], k[l]);
        conflicts += eta(params, j[l], k[(l + 1) % r]);
    }
    double lw = params.beta.log_weight(conflicts);
    if (lw == kNegInf) {
        return kNegInf;
    }
    return params.lambda * occupied + lw;
}

namespace {

std::vector<int> eta_table(const ModelParams& params) {
    const int n = params.num_states();
    std::vector<int> t(n * n);
    for (int a = 1; a <= n; ++a) {
        for (int b = 1; b <= n; ++b) {
            t[(a - 1) * n + (b - 1)] = eta(params, a, b);
        }
    }
    return t;
}

bool advance(std::vector<int>& digits, int base) {
    std::size_t pos = 0;
    while (pos < digits.size() && ++digits[pos] == base) {
        digits[pos++] = 0;
    }
    return pos < digits.size();
}

LogSimplex normalize_or_throw(const std::vector<LogSumAccumulator>& acc, const char* who) {
    std::vector<double> w(acc.size());
    for (std::size_t s = 0; s < acc.size(); ++s) {
        w[s] = acc[s].value();
    }
    if (log_sum_exp(w) == kNegInf) {
        throw UnsatisfiableError(std::string(who) + ": every root state has zero weight");
    }
    return LogSimplex::from_log_weights(std::move(w));
}

}  // namespace

LogSimplex graph_step(const LogSimplex& m, const ModelParams& params) {
    params.validate();
    const int q = params.q;
    if (q > 8) {
        throw RefusalError("graph_step refuses q = " + std::to_string(q) +
                           ": exact cost (q+1)^(q-1); use f_beta for the bound route");
    }
    if (m.q() != q) {
        throw ParameterError("graph_step: message size does not match q");
    }
    const int n = q + 1;
    const int r = q - 1;
    const std::vector<int> et = eta_table(params);
    auto lm = m.log_probs();

    // pair[a][b] = ln sum_c e^{-beta (eta(a,c) + eta(b,c))} m(c): one w between clique members a, b.
    std::vector<double> pair(n * n);
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            LogSumAccumulator acc;
            for (int c = 0; c < n; ++c) {
                double lw = params.beta.log_weight(et[a * n + c] + et[b * n + c]);
                if (lw != kNegInf) {
                    acc.add(lm[c] + lw);
                }
            }
            pair[a * n + b] = acc.value();
        }
    }

    std::vector<LogSumAccumulator> acc(n);
    std::vector<int> j(r, 0);
    do {
        double log_children = 0.0;
        for (int l = 0; l < r && log_children != kNegInf; ++l) {
            log_children += pair[j[(l + r - 1) % r] * n + j[l]];
        }
        if (log_children == kNegInf) {
            continue;
        }
        int clique = 0;
        int occupied = 0;
        for (int l = 0; l < r; ++l) {
            occupied += (j[l] == n - 1);
            for (int s = 0; s < l; ++s) {
                clique += et[j[s] * n + j[l]];
            }
        }
        for (int i = 0; i < n; ++i) {
            int conflicts = clique;
            for (int l = 0; l < r; ++l) {
                conflicts += et[i * n + j[l]];
            }
            double lw = params.beta.log_weight(conflicts);
            if (lw == kNegInf) {
                continue;
            }
            acc[i].add(params.lambda * (occupied + (i == n - 1)) + lw + log_children);
        }
    } while (advance(j, n));
    return normalize_or_throw(acc, "graph_step");
}

LogSimplex graph_step_bruteforce(const LogSimplex& m, const ModelParams& params) {
    params.validate();
    const int q = params.q;
    if (q > 4) {
        throw RefusalError("graph_step_bruteforce refuses q = " + std::to_string(q) +
                           ": cost (q+1)^(2(q-1))");
    }
    if (m.q() != q) {
        throw ParameterError("graph_step_bruteforce: message size does not match q");
    }
    const int n = q + 1;
    const int r = q - 1;
    std::vector<LogSumAccumulator> acc(n);
    std::vector<int> j(r, 1);
    std::vector<int> k(r, 1);
    std::vector<int> digits(2 * r, 0);
    do {
        for (int l = 0; l < r; ++l) {
            j[l] = digits[l] + 1;
            k[l] = digits[r + l] + 1;
        }
        double log_msgs = 0.0;
        for (int l = 0; l < r; ++l) {
            log_msgs += m.log_prob(k[l]);
        }
        if (log_msgs == kNegInf) {
            continue;
        }
        for (int i = 1; i <= n; ++i) {
            double lp = log_phi(i, j, k, params);
            if (lp != kNegInf) {
                acc[i - 1].add(lp + log_msgs);
            }
        }
    } while (advance(digits, n));
    return normalize_or_throw(acc, "graph_step_bruteforce");
}

double log_two_or_more(double log_delta, int q) {
    if (log_delta > 0.0 || std::isnan(log_delta)) {
        throw ParameterError("log_two_or_more: ln delta must be <= 0");
    }
    if (log_delta == kNegInf) {
        return kNegInf;
    }
    const int n = q - 1;
    const double log_p = log1m_exp(log_delta);
    LogSumAccumulator acc;
    for (int r = 2; r <= n; ++r) {
        double term = log_binomial(n, r) + r * log_delta;
        if (n - r > 0) {
            term += (n - r) * log_p;
        }
        acc.add(term);
    }
    return acc.value();
}

namespace {

struct BoundTerms {
    double log_a;
    double log_pre;  // ln(e^{q lambda} q (q+1)^{q-1})
    double log_c;
};

BoundTerms bound_terms(NearOneProb p, int q, double lambda) {
    if (q < 3) {
        throw ParameterError("graph bound needs q >= 3");
    }
    BoundTerms t;
    const double log_p = p.log_p();
    t.log_a = log_p == kNegInf ? kNegInf : log_factorial(q - 1) + (q - 1) * log_p;
    t.log_pre = q * lambda + std::log(q) + (q - 1) * std::log(q + 1.0);
    t.log_c = t.log_pre + log_two_or_more(p.log_delta(), q);
    return t;
}

NearOneProb complement_ratio(double log_a, double log_rest) {
    // 1 - A / (A + rest) = rest / (A + rest)
    if (log_rest == kNegInf) {
        return NearOneProb::one();
    }
    double ld = log_rest - log_add_exp(log_a, log_rest);
    return NearOneProb::from_log_delta(std::min(ld, 0.0));
}

}  // namespace

NearOneProb f_beta(NearOneProb p, const ModelParams& params) {
    params.validate();
    BoundTerms t = bound_terms(p, params.q, params.lambda);
    double log_b = t.log_pre + params.beta.log_damping();
    return complement_ratio(t.log_a, log_add_exp(log_b, t.log_c));
}

NearOneProb f_limit(NearOneProb p, int q, double lambda) {
    BoundTerms t = bound_terms(p, q, lambda);
    return complement_ratio(t.log_a, t.log_c);
}

double f_limit_log_curvature(int q, double lambda) {
    return q * lambda + std::log(q) + (q - 1) * std::log(q + 1.0) + log_binomial(q - 1, 2) -
           log_factorial(q - 1);
}

double epsilon_window(int q, double lambda) {
    if (q < 3) {
        throw ParameterError("epsilon_window needs q >= 3");
    }
    // g(t) < 0 iff f(1 - e^{-t}) > 1 - e^{-t}.
    auto g = [&](double t) { return f_limit(NearOneProb::from_log_delta(-t), q, lambda).log_delta() + t; };
    const double estimate = f_limit_log_curvature(q, lambda);
    double t_hi = std::max(estimate, 1.0) + 40.0;
    for (int i = 0; g(t_hi) >= 0.0; ++i) {
        if (i == 60) {
            std::ostringstream msg;
            msg << "epsilon_window: f(p) <= p persists near p = 1 (q = " << q
                << ", lambda = " << lambda << ", last t = " << t_hi << ")";
            throw NotFoundError(msg.str());
        }
        t_hi *= 2.0;
    }
    // Walk toward smaller t (larger delta) until f(p) > p first fails; the
    // crossing nearest p = 1 bounds the window.
    const double step = 0.125;
    double t = t_hi;
    double lo = 0.0;
    bool bracketed = false;
    while (t > step) {
        double next = t - step;
        if (g(next) >= 0.0) {
            lo = next;
            bracketed = true;
            break;
        }
        t = next;
    }
    if (!bracketed) {
        std::ostringstream msg;
        msg << "epsilon_window: no sign change of ln(1 - f) - ln delta on t in (0, " << t_hi
            << "], analytic estimate ln delta* ~ " << -estimate;
        throw NotFoundError(msg.str());
    }
    double hi = t;  // g(hi) < 0 <= g(lo)
    for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
        double mid = 0.5 * (lo + hi);
        if (g(mid) >= 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return -lo;
}

double basin_margin(const ModelParams& params, NearOneProb target) {
    const double ld_t = target.log_delta();
    double worst = f_beta(NearOneProb::one(), params).log_delta() - ld_t;
    constexpr int kGrid = 1000;
    for (int i = 0; i < kGrid; ++i) {
        double ld = ld_t - 10.0 * i / (kGrid - 1);
        worst = std::max(worst, f_beta(NearOneProb::from_log_delta(ld), params).log_delta() - ld_t);
    }
    return worst;
}

double find_beta(int q, double lambda, NearOneProb target, const BetaSearchOptions& options) {
    const double ld_star = epsilon_window(q, lambda);
    const double ld_t = target.log_delta();
    if (!(ld_t < ld_star) || ld_t == kNegInf) {
        std::ostringstream msg;
        msg << "find_beta: target ln(1-p) = " << ld_t << " must lie strictly inside the window (ln delta* = "
            << ld_star << ") and below p = 1";
        throw PreconditionError(msg.str());
    }
    auto certified = [&](double beta) {
        return basin_margin(make_params(q, lambda, Beta::finite(beta)), target) < 0.0;
    };
    double hi = std::max(q * lambda, 1.0);
    double lo = 0.0;
    while (!certified(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > options.beta_ceiling) {
            std::ostringstream msg;
            msg << "not-found: no beta <= " << options.beta_ceiling << " keeps f_beta above the target";
            throw NotFoundError(msg.str());
        }
    }
    if (hi > options.beta_ceiling) {
        throw NotFoundError("not-found: beta ceiling below the initial search value");
    }
    while (hi - lo > 1.0) {
        double mid = 0.5 * (lo + hi);
        if (certified(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

NonuniquenessCertificate certify_graph_nonuniqueness(int q, double lambda,
                                                     const GraphCertifyOptions& options) {
    if (q < 3) {
        throw ParameterError("certify_graph_nonuniqueness needs q >= 3");
    }
    NonuniquenessCertificate cert;
    cert.log_delta_star = epsilon_window(q, lambda);
    cert.target = NearOneProb::from_log_delta(cert.log_delta_star - std::numbers::ln2);
    const double beta = find_beta(q, lambda, cert.target, {options.beta_ceiling});
    cert.params = make_params(q, lambda, Beta::finite(beta));
    cert.basin_margin = basin_margin(cert.params, cert.target);
    const double ld_t = cert.target.log_delta();

    if (q <= 8) {
        LogSimplex m1 = graph_step(LogSimplex::point_mass(q, 1), cert.params);
        cert.start = NearOneProb::from_log_delta(std::min(0.0, m1.log_mass_excluding({1})));
        cert.start_source = "exact-one-level";
    } else {
        cert.start = cert.target;
        cert.start_source = "target";
    }
    if (cert.start.log_delta() > ld_t) {
        throw NotFoundError("start of the bound iteration lies outside the basin");
    }

    // Convergence is judged relative to |ln delta| because at q ~ 90 the
    // iterates sit near ln delta ~ -1e4, where one ulp is ~2e-12.
    NearOneProb cur = cert.start;
    cert.trace.push_back(cur);
    for (cert.iterations = 0; cert.iterations < options.max_iterations;) {
        NearOneProb nxt = f_beta(cur, cert.params);
        ++cert.iterations;
        cert.trace.push_back(nxt);
        if (nxt.log_delta() > ld_t) {
            throw NotFoundError("bound iteration left the basin");
        }
        double scale = std::max(1.0, std::abs(nxt.log_delta()));
        bool done = std::abs(nxt.log_delta() - cur.log_delta()) < 1e-12 * scale;
        cur = nxt;
        if (done) {
            cert.converged = true;
            break;
        }
    }
    cert.fixed_point = cur;

    // Sign of f_beta(p) - p, i.e. of ln delta - ln(1 - f_beta), on [target, 1].
    const double ld_lo = std::min(cert.fixed_point.log_delta(), ld_t) - 20.0;
    int prev = 0;
    constexpr int kGrid = 2000;
    for (int i = 0; i <= kGrid; ++i) {
        // i == kGrid is p = 1, where f_beta(1) < 1 for finite beta.
        double ld = i == kGrid ? kNegInf : ld_t + (ld_lo - ld_t) * i / (kGrid - 1);
        double diff = ld == kNegInf
                          ? -1.0
                          : ld - f_beta(NearOneProb::from_log_delta(ld), cert.params).log_delta();
        int sign = diff > 0 ? 1 : (diff < 0 ? -1 : 0);
        if (sign != 0) {
            if (prev != 0 && sign != prev) {
                ++cert.basin_sign_changes;
            }
            prev = sign;
        }
    }
    cert.nonunique = cert.fixed_point.log_delta() < std::log(0.5) &&
                     cert.fixed_point.log_delta() < cert.log_delta_star;
    return cert;
}

ExactFixedPoint graph_fixed_point(const ModelParams& params, std::int64_t max_iterations, double tol) {
    ExactFixedPoint out{LogSimplex::point_mass(params.q, 1), 0, false};
    for (; out.iterations < max_iterations; ++out.iterations) {
        LogSimplex next = graph_step(out.message, params);
        double d = l1_distance(next, out.message);
        out.message = std::move(next);
        if (d < tol) {
            out.converged = true;
            ++out.iterations;
            break;
        }
    }
    return out;
}

}  // namespace spinuniq
