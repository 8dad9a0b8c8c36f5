#include "spinuniq/tree_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "spinuniq/errors.hpp"
#include "spinuniq/log_math.hpp"

namespace spinuniq {

namespace {

void check_messages(std::span<const LogSimplex> messages, int q) {
    if (static_cast<int>(messages.size()) != q) {
        throw ParameterError("expected " + std::to_string(q) + " child messages, got " +
                             std::to_string(messages.size()));
    }
    for (const LogSimplex& m : messages) {
        if (m.q() != q) {
            throw ParameterError("message has " + std::to_string(m.num_states()) +
                                 " states, expected " + std::to_string(q + 1));
        }
    }
}

int messages_q(std::span<const LogSimplex> messages) {
    if (messages.empty()) {
        throw ParameterError("no child messages");
    }
    int q = static_cast<int>(messages.size());
    check_messages(messages, q);
    return q;
}

double mix_conflict(double log_outside, double log_inside, const Beta& beta) {
    if (beta.is_hard()) {
        return log_outside;
    }
    return log_add_exp(log_outside, log_inside - beta.value());
}

std::string premise_failure(const ModelParams& params, const PremiseCheck& c, bool theorem1) {
    std::ostringstream msg;
    msg << "premise failed: ";
    if (params.q < 90) {
        msg << "q >= 90 (q = " << params.q << ")";
    } else {
        double t = theorem1 ? c.theorem1_lambda_threshold : c.lemma3_lambda_threshold;
        msg << "lambda > " << (theorem1 ? "3 ln q + (q+1) ln 4" : "ln q + q ln 2") << " = " << t
            << " (lambda = " << params.lambda << ")";
    }
    return msg.str();
}

}  // namespace

double child_factor(int j, const LogSimplex& m, const ModelParams& params) {
    const int q = params.q;
    if (m.q() != q) {
        throw ParameterError("child_factor: message size does not match q");
    }
    if (j < 1 || j > q + 1) {
        throw ParameterError("child_factor: state out of range");
    }
    if (j == 1 || j == 2) {
        return mix_conflict(m.log_mass_excluding({j, q + 1}), m.log_mass_of({j, q + 1}),
                            params.beta);
    }
    if (j == q + 1) {
        return mix_conflict(m.log_mass_excluding({1, 2}), m.log_mass_of({1, 2}), params.beta);
    }
    return mix_conflict(m.log_mass_excluding({j}), m.log_prob(j), params.beta);
}

std::vector<double> tree_log_weights(std::span<const LogSimplex> messages,
                                     const ModelParams& params) {
    params.validate();
    const int q = params.q;
    check_messages(messages, q);
    const int n = q + 1;
    std::vector<double> acc(n, 0.0);
    std::vector<double> suffix(n + 1);
    for (const LogSimplex& m : messages) {
        auto x = m.log_probs();
        suffix[n] = kNegInf;
        for (int s = n - 1; s >= 0; --s) {
            suffix[s] = log_add_exp(suffix[s + 1], x[s]);
        }
        // Potts states 3..q conflict only with themselves: outside mass is
        // prefix(s) + suffix(s+1).
        double prefix = log_add_exp(x[0], x[1]);
        for (int s = 2; s < q; ++s) {
            acc[s] += mix_conflict(log_add_exp(prefix, suffix[s + 1]), x[s], params.beta);
            prefix = log_add_exp(prefix, x[s]);
        }
        acc[0] += child_factor(1, m, params);
        acc[1] += child_factor(2, m, params);
        acc[q] += child_factor(q + 1, m, params);
    }
    return acc;
}

LogSimplex tree_step(std::span<const LogSimplex> messages, const ModelParams& params) {
    std::vector<double> w = tree_log_weights(messages, params);
    w[params.q] += params.lambda;
    if (log_sum_exp(w) == kNegInf) {
        throw UnsatisfiableError("tree_step: every root state has zero weight");
    }
    return LogSimplex::from_log_weights(std::move(w));
}

LogSimplex tree_root_marginal(int q, int depth, std::span<const int> leaf_states,
                              const ModelParams& params) {
    params.validate();
    if (params.q != q || depth < 1) {
        throw ParameterError("tree_root_marginal: q must match params and depth >= 1");
    }
    std::size_t leaves = 1;
    for (int d = 0; d < depth; ++d) {
        leaves *= static_cast<std::size_t>(q);
    }
    if (leaf_states.size() != leaves) {
        throw ParameterError("tree_root_marginal: expected q^depth leaf states");
    }
    std::vector<LogSimplex> level;
    level.reserve(leaves);
    for (int s : leaf_states) {
        level.push_back(LogSimplex::point_mass(q, s));
    }
    // BFS order groups siblings contiguously, q at a time.
    while (level.size() > 1) {
        std::vector<LogSimplex> up;
        up.reserve(level.size() / q);
        for (std::size_t i = 0; i < level.size(); i += q) {
            up.push_back(tree_step(std::span<const LogSimplex>(level).subspan(i, q), params));
        }
        level = std::move(up);
    }
    return level.front();
}

LogSimplex tree_step_bruteforce(std::span<const LogSimplex> messages, const ModelParams& params) {
    params.validate();
    const int q = params.q;
    if (q > 6) {
        std::ostringstream msg;
        msg << "tree_step_bruteforce refuses q = " << q << ": cost (q+1)^q = "
            << std::pow(q + 1.0, q) << " child configurations; use tree_step";
        throw RefusalError(msg.str());
    }
    check_messages(messages, q);
    const int n = q + 1;
    std::vector<int> eta_table(n * n);
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) {
            eta_table[(i - 1) * n + (j - 1)] = eta(params, i, j);
        }
    }
    std::vector<LogSumAccumulator> acc(n);
    std::vector<int> child(q, 0);
    while (true) {
        double log_msg = 0.0;
        for (int l = 0; l < q && log_msg != kNegInf; ++l) {
            log_msg += messages[l].log_probs()[child[l]];
        }
        if (log_msg != kNegInf) {
            for (int j = 0; j < n; ++j) {
                int conflicts = 0;
                for (int l = 0; l < q; ++l) {
                    conflicts += eta_table[j * n + child[l]];
                }
                double log_psi = params.beta.log_weight(conflicts);
                if (log_psi == kNegInf) {
                    continue;
                }
                if (j == q) {
                    log_psi += params.lambda;
                }
                acc[j].add(log_psi + log_msg);
            }
        }
        int pos = 0;
        while (pos < q && ++child[pos] == n) {
            child[pos++] = 0;
        }
        if (pos == q) {
            break;
        }
    }
    std::vector<double> w(n);
    for (int j = 0; j < n; ++j) {
        w[j] = acc[j].value();
    }
    if (log_sum_exp(w) == kNegInf) {
        throw UnsatisfiableError("tree_step_bruteforce: every root state has zero weight");
    }
    return LogSimplex::from_log_weights(std::move(w));
}

namespace {

// ln sum_{j in {3..q}, j != k} prod_l (1 - m_l(j))
double log_lemma_sum(std::span<const LogSimplex> messages, int q, int k) {
    LogSumAccumulator acc;
    for (int j = 3; j <= q; ++j) {
        if (j == k) {
            continue;
        }
        double log_prod = 0.0;
        for (const LogSimplex& m : messages) {
            log_prod += m.log_mass_excluding({j});
        }
        acc.add(log_prod);
    }
    return acc.value();
}

}  // namespace

double lemma1_bound(std::span<const LogSimplex> messages, int k) {
    const int q = messages_q(messages);
    if (k < 1 || k > q) {
        throw ParameterError("lemma1_bound: k must lie in [1, q]");
    }
    return std::exp(-softplus(log_lemma_sum(messages, q, k)));
}

Lemma2Result lemma2_check(std::span<const LogSimplex> messages, int k, double p) {
    const int q = messages_q(messages);
    if (k < 1 || k > q) {
        throw ParameterError("lemma2_check: k must lie in [1, q]");
    }
    if (!(p >= 0.5 && p < 1.0)) {
        throw PreconditionError("lemma2_check: p must satisfy 1/2 <= p < 1");
    }
    for (const LogSimplex& m : messages) {
        for (int j = 1; j <= q; ++j) {
            if (m.prob(j) > p + 1e-12) {
                throw PreconditionError("lemma2_check: message exceeds p on state " +
                                        std::to_string(j));
            }
        }
    }
    Lemma2Result r;
    r.lhs = std::exp(log_lemma_sum(messages, q, k));
    r.bound = (q / 6.0 - 3.0) * p * (1.0 - p);
    r.holds = r.lhs >= r.bound - 1e-12;
    return r;
}

double lemma2_extremal_min(int q, int k, double p) {
    if (q < 3) {
        throw ParameterError("lemma2_extremal_min: q must be >= 3");
    }
    if (q > 7) {
        throw RefusalError("lemma2_extremal_min refuses q = " + std::to_string(q) +
                           ": the extremal families number about q^(2q)");
    }
    if (k < 1 || k > q) {
        throw ParameterError("lemma2_extremal_min: k must lie in [1, q]");
    }
    if (!(p >= 0.5 && p < 1.0)) {
        throw PreconditionError("lemma2_extremal_min: p must satisfy 1/2 <= p < 1");
    }
    // Only the states J = {3..q} \ {k} enter the objective. The others are
    // interchangeable, so they collapse to one "inert" label 0 (there are
    // always at least two of them: 1 and 2). The sum is symmetric in l, so
    // families are multisets of per-message types (a, b).
    const int active = static_cast<int>(q - 2 - (k >= 3 ? 1 : 0));
    if (active == 0) {
        return 0.0;
    }
    std::vector<std::pair<int, int>> types;
    for (int a = 0; a <= active; ++a) {
        for (int b = 0; b <= active; ++b) {
            if (a != b || a == 0) {
                types.emplace_back(a, b);
            }
        }
    }
    std::vector<double> pow_low(q + 1), pow_high(q + 1);
    for (int c = 0; c <= q; ++c) {
        pow_low[c] = std::pow(1.0 - p, c);
        pow_high[c] = std::pow(p, c);
    }
    std::vector<int> n_high(active + 1, 0);  // messages with m(j) = p
    std::vector<int> n_low(active + 1, 0);   // messages with m(j) = 1 - p
    double best = std::numeric_limits<double>::infinity();
    const int num_types = static_cast<int>(types.size());

    auto recurse = [&](auto& self, int l, int first_type) -> void {
        if (l == q) {
            double v = 0.0;
            for (int j = 1; j <= active; ++j) {
                v += pow_low[n_high[j]] * pow_high[n_low[j]];
            }
            best = std::min(best, v);
            return;
        }
        for (int t = first_type; t < num_types; ++t) {
            auto [a, b] = types[t];
            ++n_high[a];
            ++n_low[b];
            self(self, l + 1, t);
            --n_high[a];
            --n_low[b];
        }
    };
    recurse(recurse, 0, 0);
    return best;
}

double f_tree(double p, int q) {
    if (q < 19) {
        throw PreconditionError("f_tree needs q >= 19 so that q/6 - 3 > 0");
    }
    return 1.0 / (1.0 + (q / 6.0 - 3.0) * p * (1.0 - p));
}

WorstCaseTrace worst_case_trace(const ModelParams& params, std::int64_t max_levels) {
    params.validate();
    if (params.beta.is_hard()) {
        throw ParameterError("worst_case_trace needs finite beta");
    }
    PremiseCheck premises = check_premises(params);
    if (!premises.lemma3_ok) {
        throw PremiseError(premise_failure(params, premises, false));
    }
    const int q = params.q;
    const double c = q / 6.0 - 3.0;
    const double log_c = std::log(c);
    const double beta = params.beta.value();

    WorstCaseTrace out;
    out.closed_form_levels = (beta * q - params.lambda) / log_c;
    // Root weight for k <= q is at most 1 per child configuration; for q+1 it
    // is at least e^{lambda - beta q}. Hence P(k) <= 1 / (1 + e^{lambda - beta q}).
    const double x = params.lambda - beta * q;
    out.p1 = NearOneProb::from_log_delta(x - softplus(x));
    out.trace.push_back(out.p1);

    auto below = [](const NearOneProb& v, double level) { return v.direct_ok() && v.p() < level; };
    std::int64_t first_quarter = 0;
    for (std::int64_t n = 1;; ++n) {
        const NearOneProb& cur = out.trace.back();
        if (!out.escape_level && below(cur, 0.5)) {
            out.escape_level = n;
        }
        if (cur.direct_ok() && cur.p() <= 0.25) {
            first_quarter = n;
            break;
        }
        if (n >= max_levels) {
            return out;
        }
        if (!cur.direct_ok()) {
            // p = 1 - delta with delta < 1e-12:
            // 1 - f = c p delta / (1 + c p delta).
            const double ld = cur.log_delta();
            const double delta = std::exp(ld);
            const double u = c * (1.0 - delta) * delta;
            out.trace.push_back(
                NearOneProb::from_log_delta(log_c + std::log1p(-delta) + ld - std::log1p(u)));
            ++out.near_one_levels;
        } else {
            out.trace.push_back(NearOneProb::from_p(f_tree(std::max(cur.p(), 0.5), q)));
        }
    }
    // One more level so every child of the burn-in node already sits at <= 1/4.
    const NearOneProb& last = out.trace.back();
    out.trace.push_back(NearOneProb::from_p(f_tree(std::max(last.p(), 0.5), q)));
    out.burnin_N = first_quarter + 1;
    if (!out.escape_level) {
        out.escape_level = first_quarter;
    }

    // Past burn-in, follow f itself without the clamp at 1/2.
    double p = out.trace.back().p();
    for (int i = 0; i < 500; ++i) {
        p = f_tree(p, q);
    }
    out.orbit_limit = p;
    return out;
}

ContractionConstant contraction_constant(const ModelParams& params) {
    params.validate();
    PremiseCheck premises = check_premises(params);
    if (!premises.theorem1_ok) {
        throw PremiseError(premise_failure(params, premises, true));
    }
    const double q = params.q;
    const double lam = params.lambda;
    const double ln2 = std::numbers::ln2;
    ContractionConstant cc;
    cc.log_c = ln2 + 2.0 * std::log(q) - lam +
               log_add_exp(q * ln2, q * 2.0 * ln2 + std::log1p(q * std::exp(-lam)));
    cc.log_loose = -lam + 3.0 * std::log(q) + (q + 1.0) * 2.0 * ln2;
    cc.c = std::exp(cc.log_c);
    cc.loose = std::exp(cc.log_loose);
    if (!(cc.log_c < cc.log_loose && cc.log_loose < 0.0)) {
        throw Error("contraction constant ordering C < e^-lambda q^3 4^(q+1) < 1 violated");
    }
    return cc;
}

double measure_contraction(std::span<const LogSimplex> messages_p,
                           std::span<const LogSimplex> messages_q, const ModelParams& params) {
    params.validate();
    check_messages(messages_p, params.q);
    check_messages(messages_q, params.q);
    const double floor = std::log(0.5) - 1e-12;
    double gap = 0.0;
    for (std::size_t l = 0; l < messages_p.size(); ++l) {
        if (messages_p[l].log_prob(params.q + 1) < floor ||
            messages_q[l].log_prob(params.q + 1) < floor) {
            throw PreconditionError("measure_contraction: message mass on q+1 below 1/2");
        }
        gap = std::max(gap, l1_distance(messages_p[l], messages_q[l]));
    }
    if (gap == 0.0) {
        return 0.0;
    }
    return l1_distance(tree_step(messages_p, params), tree_step(messages_q, params)) / gap;
}

TreeCertificate certify_tree_uniqueness(const ModelParams& params, double eps,
                                        std::int64_t max_levels) {
    params.validate();
    if (!(eps > 0.0) || !std::isfinite(eps)) {
        throw ParameterError("eps must be a positive finite number");
    }
    if (params.beta.is_hard()) {
        throw ParameterError("certify_tree_uniqueness needs finite beta");
    }
    TreeCertificate cert;
    cert.params = params;
    cert.eps = eps;
    cert.premises = check_premises(params);
    if (!cert.premises.theorem1_ok) {
        throw PremiseError(premise_failure(params, cert.premises, true));
    }
    WorstCaseTrace wct = worst_case_trace(params, max_levels);
    if (!wct.burnin_N) {
        throw NotFoundError("burn-in not reached within " + std::to_string(max_levels) + " levels");
    }
    cert.p1_bound = wct.p1;
    cert.burnin_N = *wct.burnin_N;
    cert.escape_level = *wct.escape_level;
    cert.closed_form_levels = wct.closed_form_levels;
    cert.orbit_limit = wct.orbit_limit;
    cert.trace = std::move(wct.trace);

    // q+1 mass of a node whose children all have m(1) + m(2) <= 1/2:
    // >= 2^-q e^lambda / (q + 2^-q e^lambda).
    const double x = params.lambda - params.q * std::numbers::ln2;
    cert.log_special_mass_bound = x - log_add_exp(std::log(params.q), x);
    if (cert.log_special_mass_bound < -std::numbers::ln2) {
        throw Error("q+1 mass bound fell below 1/2 despite the premise");
    }

    cert.contraction = contraction_constant(params);
    // Smallest m >= 0 with ln 2 + m ln C < ln eps.
    const double r = (std::log(eps) - std::numbers::ln2) / cert.contraction.log_c;
    std::int64_t m = r < 0.0 ? 0 : static_cast<std::int64_t>(std::floor(r)) + 1;
    while (std::numbers::ln2 + m * cert.contraction.log_c >= std::log(eps)) {
        ++m;
    }
    cert.depth_n = cert.burnin_N + m;
    if (cert.depth_n > max_levels) {
        throw NotFoundError("certified depth " + std::to_string(cert.depth_n) +
                            " exceeds max_levels");
    }
    cert.log_tv_bound = std::numbers::ln2 + m * cert.contraction.log_c;
    cert.tv_bound = std::exp(cert.log_tv_bound);
    return cert;
}

}  // namespace spinuniq
