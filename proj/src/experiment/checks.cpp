#include "dynrecon/experiment/checks.hpp"

#include "dynrecon/experiment/runners.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace dynrecon::experiment {

namespace {

CheckResult verdict(std::string name, double value, double threshold, std::string detail = {})
{
    return {std::move(name), value <= threshold, value, threshold, std::move(detail)};
}

}  // namespace

CheckResult check_cocycle_law(const SystemSpec& spec, const Vec& initial, int span, double tolerance)
{
    const Mat orbit =
        generate_trajectory(spec, initial, 2 * span + 1, MeasurementMap::full_state(spec.state_dim()), {0, false}).states;
    const CocycleGenerator g = jacobian_generator(spec, orbit);
    // G(k, w_j) for all needed (j, k), built incrementally
    std::vector<std::vector<Mat>> prod(static_cast<std::size_t>(span + 1));
    for (int j = 0; j <= span; ++j) {
        auto& row = prod[static_cast<std::size_t>(j)];
        row.push_back(Mat::Identity(spec.state_dim(), spec.state_dim()));
        const int reach = j == 0 ? 2 * span : span;
        for (int k = 1; k <= reach; ++k) row.push_back(g.at(j + k - 1) * row.back());
    }
    double worst = 0.0;
    for (int m = 1; m <= span; ++m)
        for (int n = 1; n <= span; ++n) {
            const Mat& whole = prod[0][static_cast<std::size_t>(m + n)];
            const Mat split = prod[static_cast<std::size_t>(m)][static_cast<std::size_t>(n)] * prod[0][static_cast<std::size_t>(m)];
            worst = std::max(worst, (whole - split).norm() / whole.norm());
        }
    return verdict("cocycle_law_" + to_string(spec.kind), worst, tolerance);
}

CheckResult check_echo_state(const Mat& measured, int nodes, double contraction, std::uint64_t seed, double tolerance)
{
    const auto res = ReservoirEmbedder::random(nodes, static_cast<int>(measured.rows()), contraction, seed);
    std::mt19937_64 rng(seed + 1);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Vec other(nodes);
    for (Index i = 0; i < other.size(); ++i) other(i) = unif(rng);
    const EmbeddedSeries a = res.drive(measured, Vec::Zero(nodes));
    const EmbeddedSeries b = res.drive(measured, other);
    const Index w = res.washout();
    if (w >= measured.cols()) throw InvalidArgument("series shorter than the reservoir washout");
    const double worst = (a.points.rightCols(a.size() - w) - b.points.rightCols(b.size() - w)).colwise().norm().maxCoeff();
    return verdict("echo_state", worst, tolerance, "washout " + std::to_string(w));
}

CheckResult check_unitarity(const Mat& series, Index lags, double tolerance)
{
    return verdict("unitarity", unitarity_deviation(series, lags), tolerance,
                   "orbit length " + std::to_string(series.cols()));
}

CheckResult check_semiconjugacy(const Embedder& embedder, const Mat& measured, double tolerance)
{
    const EmbeddedSeries s = lift(embedder, measured);
    double worst = 0.0;
    for (Index n = s.washout; n + 1 < s.size(); ++n)
        worst = std::max(worst, (s.points.col(n + 1) - apply_g(embedder, measured.col(n), s.points.col(n))).norm());
    return verdict("lift_semiconjugacy", worst, tolerance);
}

CheckResult check_jacobian(const SystemSpec& spec, const Vec& state, double tolerance)
{
    const Mat exact = jacobian(spec, state);
    const int m = spec.state_dim();
    Mat fd(m, m);
    for (int j = 0; j < m; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(state(j)));
        Vec plus = state, minus = state;
        plus(j) += h;
        minus(j) -= h;
        fd.col(j) = (step(spec, plus) - step(spec, minus)) / (2 * h);
    }
    return verdict("variational_jacobian_" + to_string(spec.kind), (exact - fd).norm() / exact.norm(), tolerance);
}

std::vector<CheckResult> run_checks(const ExperimentConfig& config)
{
    validate(config);
    const SystemSpec& spec = config.system;
    const auto& ck = config.checks;
    std::vector<CheckResult> out;

    const Vec x0 =
        generate_trajectory(spec, initial_state(config, 5), 1, MeasurementMap::full_state(spec.state_dim())).states.col(0);
    out.push_back(check_cocycle_law(spec, x0, ck.cocycle_span, ck.cocycle_tolerance));
    out.push_back(check_jacobian(spec, x0, 1e-6));

    const ForecastSetup setup = prepare_forecast(config);
    out.push_back(check_semiconjugacy(setup.embedder, setup.trajectory.measured, 1e-12));

    const auto& meas = setup.trajectory.measurement;
    const Mat long_series = generate_trajectory(spec, x0, ck.unitarity_length, meas).measured;
    out.push_back(check_unitarity(long_series, ck.unitarity_lags, ck.unitarity_tolerance));
    out.push_back(check_echo_state(setup.trajectory.measured.leftCols(std::min<Index>(setup.trajectory.size(), 5000)),
                                   config.embedding.nodes, config.embedding.contraction, config.seed, ck.echo_tolerance));

    ExperimentConfig small = config;
    small.markov.length = std::min<Index>(config.markov.length, 100000);
    small.markov.simulate = std::min<Index>(config.markov.simulate, 100000);
    const MarkovReport mk = run_markov(small);
    out.push_back(verdict("column_stochastic", mk.column_error, 1e-12));
    out.push_back(verdict("indicator_identity", mk.identity_error, 1e-12));
    out.push_back(verdict("stationarity", mk.stationary.residual, mk.stationary.converged ? 1e-12 : 1e-11,
                          mk.stationary.cesaro ? "Cesaro fallback" : "power iteration"));
    return out;
}

nlohmann::json to_json(const std::vector<CheckResult>& results)
{
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : results)
        j.push_back({{"name", r.name}, {"passed", r.passed}, {"value", r.value}, {"threshold", r.threshold}, {"detail", r.detail}});
    return j;
}

void write_checks(const std::vector<CheckResult>& results, Manifest& manifest)
{
    std::ostringstream csv;
    csv << "name,passed,value,threshold\n";
    for (const auto& r : results)
        csv << r.name << ',' << (r.passed ? 1 : 0) << ',' << format_number(r.value) << ',' << format_number(r.threshold) << '\n';
    manifest.write("checks.csv", csv.str());
    manifest.write("summary.json", to_json(results).dump(2) + "\n");
}

}  // namespace dynrecon::experiment
