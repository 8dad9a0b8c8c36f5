#include "spinuniq/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "spinuniq/errors.hpp"
#include "spinuniq/graph_g.hpp"
#include "spinuniq/log_math.hpp"
#include "spinuniq/model.hpp"
#include "spinuniq/oracle.hpp"
#include "spinuniq/tree_engine.hpp"

namespace spinuniq {

using nlohmann::json;

namespace {

std::string fmt(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    std::ostringstream s;
    s << std::setprecision(17) << x;
    return s.str();
}

json number(double x) {
    if (std::isfinite(x)) {
        return x;
    }
    return fmt(x);
}

json near_one(const NearOneProb& p) {
    json j{{"log_one_minus_p", number(p.log_delta())}};
    if (p.direct_ok()) {
        j["p"] = p.p();
    }
    return j;
}

json thinned_trace(const std::vector<NearOneProb>& trace, std::size_t keep, std::int64_t first_level) {
    json entries = json::array();
    auto emit = [&](std::size_t i) {
        json e = near_one(trace[i]);
        e["level"] = first_level + static_cast<std::int64_t>(i);
        entries.push_back(std::move(e));
    };
    if (trace.size() <= 2 * keep) {
        for (std::size_t i = 0; i < trace.size(); ++i) {
            emit(i);
        }
    } else {
        for (std::size_t i = 0; i < keep; ++i) {
            emit(i);
        }
        for (std::size_t i = trace.size() - keep; i < trace.size(); ++i) {
            emit(i);
        }
    }
    return json{{"length", trace.size()},
                {"omitted", trace.size() > 2 * keep ? trace.size() - 2 * keep : 0},
                {"entries", std::move(entries)}};
}

json params_json(const ModelParams& p) {
    json j{{"q", p.q}, {"lambda", p.lambda}};
    if (p.beta.is_hard()) {
        j["beta"] = "inf";
    } else {
        j["beta"] = p.beta.value();
    }
    return j;
}

json premises_json(const PremiseCheck& c) {
    return json{{"lemma3_ok", c.lemma3_ok},
                {"theorem1_ok", c.theorem1_ok},
                {"lemma3_lambda_threshold", c.lemma3_lambda_threshold},
                {"theorem1_lambda_threshold", c.theorem1_lambda_threshold},
                {"rule_lemma3", "q >= 90 and lambda > ln q + q ln 2"},
                {"rule_theorem1", "q >= 90 and lambda > 3 ln q + (q+1) ln 4"}};
}

Beta resolve_beta(const ExperimentConfig& config) {
    if (config.hard_constraints) {
        return Beta::hard();
    }
    if (!config.beta) {
        throw ParameterError("beta is required (--beta or --hard-constraints)");
    }
    return Beta::finite(*config.beta);
}

RunResult guarded(const std::function<RunResult()>& body) {
    try {
        return body();
    } catch (const ParameterError& e) {
        return {kExitInvalid, "", std::string("invalid parameter: ") + e.what()};
    } catch (const NotFoundError& e) {
        return {kExitNegative, "", std::string("not-found: ") + e.what()};
    } catch (const Error& e) {
        return {kExitNegative, "", e.what()};
    }
}

std::string status_of(const std::exception_ptr& ep) {
    try {
        std::rethrow_exception(ep);
    } catch (const PremiseError&) {
        return "premise-failed";
    } catch (const BudgetError&) {
        return "budget-exceeded";
    } catch (...) {
        return "not-found";
    }
}

// Runs body(i) for i in [0, n) over `workers` threads; each slot is written by
// exactly one call, so the output is independent of the schedule.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body) {
    const std::size_t w = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, workers)), 1,
                                                  std::max<std::size_t>(1, n));
    if (w == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < w; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                body(i);
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
}

LogSimplex random_message(int q, std::mt19937_64& rng) {
    std::exponential_distribution<double> expo(1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> w(q + 1);
    for (double& x : w) {
        x = unit(rng) < 0.15 ? 0.0 : expo(rng);
    }
    if (std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; })) {
        w[std::uniform_int_distribution<int>(0, q)(rng)] = 1.0;
    }
    return LogSimplex::from_probabilities(w);
}

struct CaseResult {
    std::string id;
    double deviation = 0.0;
    double tolerance = 0.0;
    std::string status;
};

struct OracleSuite {
    const ExperimentConfig& config;
    std::string budget_report;

    // eta_flip lands on the oracle side only.
    ModelParams oracle_side(ModelParams p) const {
        if (config.inject_fault) {
            p.eta_flip = std::make_pair(1, 3);
        }
        return p;
    }

    EnumerationOptions enum_options() const { return {config.budget, config.workers}; }

    ModelParams draw_params(int q, std::mt19937_64& rng) const {
        std::uniform_real_distribution<double> beta(0.05, 5.0);
        std::uniform_real_distribution<double> lambda(-1.0, 3.0);
        double b = beta(rng);
        return make_params(q, lambda(rng), Beta::finite(b));
    }

    double tree_step_case(int q, std::uint64_t salt) const {
        std::mt19937_64 rng(config.seed * 1000003ULL + salt);
        double worst = 0.0;
        for (int s = 0; s < 100; ++s) {
            ModelParams p = draw_params(q, rng);
            std::vector<LogSimplex> msgs;
            for (int l = 0; l < q; ++l) {
                msgs.push_back(random_message(q, rng));
            }
            worst = std::max(worst, max_log_deviation(tree_step(msgs, p),
                                                      tree_step_bruteforce(msgs, oracle_side(p))));
        }
        return worst;
    }

    double graph_step_case(int q, std::uint64_t salt) const {
        std::mt19937_64 rng(config.seed * 1000003ULL + salt);
        double worst = 0.0;
        for (int s = 0; s < 100; ++s) {
            ModelParams p = draw_params(q, rng);
            LogSimplex m = random_message(q, rng);
            worst = std::max(worst, max_log_deviation(graph_step(m, p),
                                                      graph_step_bruteforce(m, oracle_side(p))));
        }
        return worst;
    }

    double tree_enum_case(int q, int depth, std::uint64_t salt) const {
        std::mt19937_64 rng(config.seed * 1000003ULL + salt);
        FiniteGraph tree = truncate_tree(q, depth);
        std::vector<std::vector<int>> boundaries;
        for (int s = 1; s <= q + 1; ++s) {
            boundaries.emplace_back(tree.boundary.size(), s);
        }
        std::uniform_int_distribution<int> state(1, q + 1);
        for (int b = 0; b < config.seeds; ++b) {
            std::vector<int> states(tree.boundary.size());
            for (int& s : states) {
                s = state(rng);
            }
            boundaries.push_back(std::move(states));
        }
        ModelParams p = make_params(q, 1.0, Beta::finite(1.0));
        double worst = 0.0;
        for (const auto& states : boundaries) {
            BoundaryCondition bc;
            for (std::size_t i = 0; i < states.size(); ++i) {
                bc.emplace_back(tree.boundary[i], states[i]);
            }
            LogSimplex exact = enumerate_gibbs(tree, bc, oracle_side(p), enum_options()).root;
            worst = std::max(worst, max_log_deviation(tree_root_marginal(q, depth, states, p), exact));
        }
        return worst;
    }

    double graph_enum_case(int q, int levels, std::uint64_t salt) const {
        std::mt19937_64 rng(config.seed * 1000003ULL + salt);
        GraphLevels g = build_graph_g(q, levels);
        BoundaryCondition bc = constant_boundary(g.graph, 1);
        double worst = 0.0;
        for (int s = 0; s < 3; ++s) {
            ModelParams p = draw_params(q, rng);
            LogSimplex m = LogSimplex::point_mass(q, 1);
            for (int l = 0; l < levels; ++l) {
                m = graph_step(m, p);
            }
            LogSimplex exact = enumerate_gibbs(g.graph, bc, oracle_side(p), enum_options()).root;
            worst = std::max(worst, max_log_deviation(m, exact));
        }
        return worst;
    }

    CaseResult run(const std::string& id, double tol, const std::function<double()>& f) {
        CaseResult r{id, 0.0, tol, "pass"};
        try {
            r.deviation = f();
            if (!(r.deviation < tol)) {
                r.status = "fail";
            }
        } catch (const BudgetError& e) {
            r.deviation = std::numeric_limits<double>::quiet_NaN();
            r.status = "budget-exceeded";
            budget_report += id + ": " + e.what() + "\n";
        }
        return r;
    }
};

RunResult certify_tree_body(const ExperimentConfig& config) {
    if (!(config.eps > 0.0) || !std::isfinite(config.eps)) {
        throw ParameterError("eps must be positive and finite");
    }
    ModelParams params = make_params(config.q, resolve_lambda(config, config.q), resolve_beta(config));
    TreeCertificate c = certify_tree_uniqueness(params, config.eps, config.max_levels);
    json doc{{"schema", kTreeCertificateSchema},
             {"verdict", "unique"},
             {"claim", "for all boundary conditions at distance depth_n, root marginals differ by at most "
                       "tv_bound in total variation"},
             {"params", params_json(c.params)},
             {"premises", premises_json(c.premises)},
             {"tolerances",
              {{"eps", c.eps},
               {"simplex_normalization", 1e-9},
               {"inequality_slack", 1e-12},
               {"near_one_switch_log_delta", NearOneProb::kDirectLogDeltaFloor}}},
             {"p1_bound", near_one(c.p1_bound)},
             {"burnin_N", c.burnin_N},
             {"escape_level", c.escape_level},
             {"closed_form_levels", c.closed_form_levels},
             {"log_special_mass_bound", c.log_special_mass_bound},
             {"contraction",
              {{"log_C", c.contraction.log_c},
               {"C", c.contraction.c},
               {"log_loose_bound", c.contraction.log_loose},
               {"loose_bound", c.contraction.loose}}},
             {"depth_n", c.depth_n},
             {"tv_bound", c.tv_bound},
             {"log_tv_bound", c.log_tv_bound},
             {"orbit_limit", c.orbit_limit},
             {"trace", thinned_trace(c.trace, config.trace_keep, 1)}};
    std::ostringstream msg;
    msg << "unique: depth_n = " << c.depth_n << ", tv_bound = " << c.tv_bound << ", C = " << c.contraction.c;
    return {kExitOk, doc.dump(2) + "\n", msg.str()};
}

RunResult certify_graph_body(const ExperimentConfig& config) {
    const double lambda = resolve_lambda(config, config.q);
    GraphCertifyOptions opts{config.beta_ceiling, config.max_iterations};
    NonuniquenessCertificate c = certify_graph_nonuniqueness(config.q, lambda, opts);
    json doc{{"schema", kGraphCertificateSchema},
             {"verdict", c.nonunique ? "nonunique" : "inconclusive"},
             {"claim",
              "inf_n P(root = 1 | all-1 boundary) >= p_fixed, and by the 1<->2 symmetry "
              "inf_n P(root = 2 | all-2 boundary) >= p_fixed; p_fixed > 1/2 gives two distinct limits"},
             {"params", params_json(c.params)},
             {"log_delta_star", c.log_delta_star},
             {"target", near_one(c.target)},
             {"start", near_one(c.start)},
             {"start_source", c.start_source},
             {"fixed_point", near_one(c.fixed_point)},
             {"symmetric_state", c.symmetric_state},
             {"converged", c.converged},
             {"iterations", c.iterations},
             {"basin_margin", c.basin_margin},
             {"basin_sign_changes", c.basin_sign_changes},
             {"tolerances",
              {{"convergence_relative_log_delta", 1e-12},
               {"max_iterations", config.max_iterations},
               {"beta_ceiling", config.beta_ceiling},
               {"beta_grid_points", 1000},
               {"beta_grid_log_delta_span", 10.0},
               {"target_rule", "ln(1 - p_target) = ln delta* - ln 2"}}},
             {"trace", thinned_trace(c.trace, config.trace_keep, 0)}};
    std::ostringstream msg;
    msg << (c.nonunique ? "nonunique" : "inconclusive") << ": beta = " << c.params.beta.value()
        << ", ln(1 - p_fixed) = " << c.fixed_point.log_delta() << ", ln delta* = " << c.log_delta_star;
    return {c.nonunique ? kExitOk : kExitNegative, doc.dump(2) + "\n", msg.str()};
}

RunResult oracle_body(const ExperimentConfig& config) {
    OracleSuite suite{config, {}};
    std::vector<CaseResult> rows;
    rows.push_back(suite.run("tree-step-q3", 1e-10, [&] { return suite.tree_step_case(3, 1); }));
    rows.push_back(suite.run("tree-step-q4", 1e-10, [&] { return suite.tree_step_case(4, 2); }));
    rows.push_back(suite.run("tree-enum-q3-depth2", 1e-10, [&] { return suite.tree_enum_case(3, 2, 3); }));
    rows.push_back(suite.run("tree-enum-q4-depth2", 1e-10, [&] { return suite.tree_enum_case(4, 2, 4); }));
    rows.push_back(suite.run("graph-step-q3", 1e-10, [&] { return suite.graph_step_case(3, 5); }));
    rows.push_back(suite.run("graph-step-q4", 1e-10, [&] { return suite.graph_step_case(4, 6); }));
    rows.push_back(suite.run("graph-enum-q3-levels2", 1e-9, [&] { return suite.graph_enum_case(3, 2, 7); }));
    rows.push_back(suite.run("graph-enum-q4-levels1", 1e-10, [&] { return suite.graph_enum_case(4, 1, 8); }));

    std::ostringstream csv;
    csv << "case_id,max_deviation,tolerance,status\n";
    bool all_pass = true;
    for (const CaseResult& r : rows) {
        csv << r.id << ',' << fmt(r.deviation) << ',' << fmt(r.tolerance) << ',' << r.status << '\n';
        all_pass = all_pass && r.status == "pass";
    }
    std::string msg = all_pass ? "all oracle cases pass" : "oracle mismatch or refusal";
    if (!suite.budget_report.empty()) {
        msg += "\n" + suite.budget_report;
    }
    return {all_pass ? kExitOk : kExitNegative, csv.str(), msg};
}

RunResult scan_body(const ExperimentConfig& config) {
    std::ostringstream csv;
    std::vector<std::string> rows;
    if (config.scan_mode == "graph-beta") {
        csv << "q,lambda,beta,p_fixed,log_one_minus_p_fixed,iterations,converged,status\n";
        if (config.q > 8) {
            throw ParameterError("graph-beta scan uses the exact recursion, which needs q <= 8");
        }
        const double lambda = resolve_lambda(config, config.q);
        std::vector<double> betas = parse_range(config.beta_range);
        rows.resize(betas.size());
        parallel_for(betas.size(), config.workers, [&](std::size_t i) {
            std::ostringstream r;
            r << config.q << ',' << fmt(lambda) << ',' << fmt(betas[i]) << ',';
            try {
                ModelParams p = make_params(config.q, lambda, Beta::finite(betas[i]));
                ExactFixedPoint fp = graph_fixed_point(p, config.max_iterations);
                r << fmt(fp.message.prob(1)) << ',' << fmt(fp.message.log_mass_excluding({1})) << ','
                  << fp.iterations << ',' << (fp.converged ? "true" : "false") << ','
                  << (fp.converged ? "ok" : "not-found");
            } catch (...) {
                r << ",,,," << status_of(std::current_exception());
            }
            rows[i] = r.str();
        });
    } else if (config.scan_mode == "tree-lambda") {
        csv << "q,lambda_margin,lambda,beta,burnin_N,log_C,C,depth_n,tv_bound,status\n";
        std::vector<double> margins = parse_range(config.lambda_margins);
        Beta beta = resolve_beta(config);
        rows.resize(margins.size());
        parallel_for(margins.size(), config.workers, [&](std::size_t i) {
            std::ostringstream r;
            const double lambda = theorem1_threshold(config.q) + margins[i];
            r << config.q << ',' << fmt(margins[i]) << ',' << fmt(lambda) << ','
              << (beta.is_hard() ? "inf" : fmt(beta.value())) << ',';
            try {
                TreeCertificate c =
                    certify_tree_uniqueness(make_params(config.q, lambda, beta), config.eps, config.max_levels);
                r << c.burnin_N << ',' << fmt(c.contraction.log_c) << ',' << fmt(c.contraction.c) << ','
                  << c.depth_n << ',' << fmt(c.tv_bound) << ",ok";
            } catch (...) {
                r << ",,,,," << status_of(std::current_exception());
            }
            rows[i] = r.str();
        });
    } else if (config.scan_mode == "graph-q") {
        csv << "q,lambda,beta,log_delta_star,log_one_minus_p_fixed,iterations,status\n";
        std::vector<double> qs = parse_range(config.q_values);
        for (double q : qs) {
            if (q != std::floor(q) || q < 3) {
                throw ParameterError("q values must be integers >= 3");
            }
        }
        rows.resize(qs.size());
        parallel_for(qs.size(), config.workers, [&](std::size_t i) {
            const int q = static_cast<int>(qs[i]);
            std::ostringstream r;
            const double lambda = resolve_lambda(config, q);
            r << q << ',' << fmt(lambda) << ',';
            try {
                NonuniquenessCertificate c = certify_graph_nonuniqueness(
                    q, lambda, {config.beta_ceiling, config.max_iterations});
                r << fmt(c.params.beta.value()) << ',' << fmt(c.log_delta_star) << ','
                  << fmt(c.fixed_point.log_delta()) << ',' << c.iterations << ','
                  << (c.nonunique ? "ok" : "not-found");
            } catch (...) {
                r << ",,,," << status_of(std::current_exception());
            }
            rows[i] = r.str();
        });
    } else {
        throw ParameterError("unknown scan mode '" + config.scan_mode +
                             "' (expected graph-beta, tree-lambda or graph-q)");
    }
    for (const std::string& r : rows) {
        csv << r << '\n';
    }
    return {kExitOk, csv.str(), std::to_string(rows.size()) + " rows"};
}

}  // namespace

double resolve_lambda(const ExperimentConfig& config, int q) {
    if (config.lambda) {
        const std::string& s = *config.lambda;
        const std::string key = "threshold";
        if (s.rfind(key, 0) == 0) {
            std::string rest = s.substr(key.size());
            double margin = 0.0;
            if (!rest.empty()) {
                std::size_t used = 0;
                try {
                    margin = std::stod(rest, &used);
                } catch (const std::exception&) {
                    used = 0;
                }
                if (used != rest.size() || (rest[0] != '+' && rest[0] != '-')) {
                    throw ParameterError("lambda '" + s + "': expected threshold+x or threshold-x");
                }
            }
            return theorem1_threshold(q) + margin;
        }
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size() || !std::isfinite(v)) {
            throw ParameterError("lambda '" + s + "' is not a finite number or threshold+x");
        }
        return v;
    }
    if (config.lambda_margin) {
        return theorem1_threshold(q) + *config.lambda_margin;
    }
    throw ParameterError("lambda is required (--lambda or --lambda-margin)");
}

std::vector<double> parse_range(const std::string& text) {
    std::vector<double> out;
    if (text.find_first_not_of(" \t") == std::string::npos) {
        return out;
    }
    auto to_num = [&](const std::string& tok) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || tok.find_first_not_of(" \t", used) != std::string::npos || !std::isfinite(v)) {
            throw ParameterError("range '" + text + "': bad number '" + tok + "'");
        }
        return v;
    };
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string tok; std::getline(ss, tok, ':');) {
            parts.push_back(tok);
        }
        if (parts.size() != 3) {
            throw ParameterError("range '" + text + "': expected start:stop:count");
        }
        double a = to_num(parts[0]);
        double b = to_num(parts[1]);
        double n = to_num(parts[2]);
        if (n < 0 || n != std::floor(n)) {
            throw ParameterError("range '" + text + "': count must be a non-negative integer");
        }
        const auto count = static_cast<std::size_t>(n);
        for (std::size_t i = 0; i < count; ++i) {
            out.push_back(count == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
        }
        return out;
    }
    std::stringstream ss(text);
    for (std::string tok; std::getline(ss, tok, ',');) {
        out.push_back(to_num(tok));
    }
    return out;
}

double max_log_deviation(const LogSimplex& a, const LogSimplex& b) {
    if (a.q() != b.q()) {
        throw ParameterError("max_log_deviation: dimension mismatch");
    }
    const double floor = std::log(1e-12);
    double worst = 0.0;
    for (int s = 1; s <= a.num_states(); ++s) {
        double x = a.log_prob(s);
        double y = b.log_prob(s);
        if (x <= floor && y <= floor) {
            continue;
        }
        worst = std::max(worst, std::abs(x - y));
    }
    return worst;
}

RunResult run_certify_tree(const ExperimentConfig& config) {
    return guarded([&] { return certify_tree_body(config); });
}

RunResult run_certify_graph(const ExperimentConfig& config) {
    return guarded([&] { return certify_graph_body(config); });
}

RunResult run_oracle_check(const ExperimentConfig& config) {
    return guarded([&] { return oracle_body(config); });
}

RunResult run_scan(const ExperimentConfig& config) {
    return guarded([&] { return scan_body(config); });
}

}  // namespace spinuniq
