#pragma once

// Property checks with measured values, run by the `checks` subcommand.

#include "dynrecon/embedding.hpp"
#include "dynrecon/experiment/config.hpp"
#include "dynrecon/experiment/io.hpp"

#include <string>
#include <vector>

namespace dynrecon::experiment {

struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

/// max over 1 <= m, n <= span of |G(m+n, w) - G(n, f^m w) G(m, w)| / |G(m+n, w)|
/// for the Jacobian cocycle along the orbit of `initial`.
CheckResult check_cocycle_law(const SystemSpec& spec, const Vec& initial, int span, double tolerance);

/// Two reservoir drives of the same measured series from different initial
/// states; max distance after the washout.
CheckResult check_echo_state(const Mat& measured, int nodes, double contraction, std::uint64_t seed, double tolerance);

/// unitarity_deviation of the series over lags 1..lags.
CheckResult check_unitarity(const Mat& series, Index lags, double tolerance);

/// max_n |Phi(w_{n+1}) - g(phi(w_n), Phi(w_n))| after the washout.
CheckResult check_semiconjugacy(const Embedder& embedder, const Mat& measured, double tolerance);

/// Variational Jacobian against central differences of the one-step map.
CheckResult check_jacobian(const SystemSpec& spec, const Vec& state, double tolerance);

std::vector<CheckResult> run_checks(const ExperimentConfig& config);

nlohmann::json to_json(const std::vector<CheckResult>& results);
/// checks.csv (name,passed,value,threshold) and summary.json.
void write_checks(const std::vector<CheckResult>& results, Manifest& manifest);

}  // namespace dynrecon::experiment
