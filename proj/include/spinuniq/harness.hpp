#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spinuniq/log_simplex.hpp"

namespace spinuniq {

inline constexpr const char* kTreeCertificateSchema = "spinuniq.tree-certificate/1";
inline constexpr const char* kGraphCertificateSchema = "spinuniq.graph-certificate/1";

enum ExitCode : int { kExitOk = 0, kExitNegative = 1, kExitInvalid = 2 };

struct ExperimentConfig {
    int q = 90;
    /// A number, "threshold", or "threshold+x" / "threshold-x" with
    /// threshold = 3 ln q + (q+1) ln 4. Takes precedence over lambda_margin.
    std::optional<std::string> lambda;
    std::optional<double> lambda_margin;
    std::optional<double> beta;
    bool hard_constraints = false;
    std::string beta_range;
    std::string lambda_margins;
    std::string q_values;
    /// graph-beta, tree-lambda or graph-q.
    std::string scan_mode = "graph-beta";
    int depth = 2;
    int levels = 2;
    double eps = 1e-6;
    std::uint64_t seed = 1;
    int seeds = 20;
    double budget = 1e8;
    int workers = 1;
    std::int64_t max_levels = 100000000;
    std::int64_t max_iterations = 1000000;
    double beta_ceiling = 1e9;
    bool inject_fault = false;
    /// Certificates keep at most this many trace entries from each end.
    std::size_t trace_keep = 1000;
};

struct RunResult {
    int exit_code = kExitOk;
    /// JSON certificate or CSV table; empty when nothing was produced.
    std::string document;
    /// Human-readable diagnostics for stderr.
    std::string message;
};

/// Resolves the lambda fields of the config for a given q; throws ParameterError.
double resolve_lambda(const ExperimentConfig& config, int q);

/// "a,b,c" or "start:stop:count" (inclusive, linear). Empty string -> empty list.
std::vector<double> parse_range(const std::string& text);

/// max over states with mass > 1e-12 in either input of |ln a - ln b|.
double max_log_deviation(const LogSimplex& a, const LogSimplex& b);

RunResult run_certify_tree(const ExperimentConfig& config);
RunResult run_certify_graph(const ExperimentConfig& config);
RunResult run_oracle_check(const ExperimentConfig& config);
RunResult run_scan(const ExperimentConfig& config);

}  // namespace spinuniq
