// End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit
// if any criterion fails.

#include "dynrecon/experiment/checks.hpp"
#include "dynrecon/experiment/runners.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

using namespace dynrecon;
using namespace dynrecon::experiment;

namespace {

struct Outcome {
    bool passed = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        passed = passed && ok;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [failed]");
    }
};

std::string num(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentConfig config_for(SystemKind kind)
{
    Overrides ov;
    ov.system = kind;
    return make_config(nlohmann::json::object(), ov);
}

// shared between criteria
double lambda_l63 = NAN;
std::optional<ForecastReport> torus_forecast;

Outcome criterion_1()
{
    Outcome o;
    for (SystemKind kind : {SystemKind::lorenz63, SystemKind::l63rot}) {
        ExperimentConfig c = config_for(kind);
        c.lyapunov.steps = 200000;
        c.lyapunov.stability_gap = false;
        const auto t0 = std::chrono::steady_clock::now();
        const LyapunovReport r = run_lyapunov(c);
        const double wall = seconds_since(t0);
        const double l1 = r.estimate.per_time(0);
        if (kind == SystemKind::lorenz63) lambda_l63 = l1;
        o.require(std::abs(l1 - 0.9056) <= 0.05, to_string(kind) + " lambda1 " + num(l1));
        o.require(wall < 120.0, to_string(kind) + " " + num(wall) + " s");
    }
    return o;
}

const ForecastReport& torus_report()
{
    if (!torus_forecast) torus_forecast = run_forecast(config_for(SystemKind::torus));
    return *torus_forecast;
}

Outcome criterion_2()
{
    Outcome o;
    const ForecastReport& r = torus_report();
    const Index n = r.direct.values.size() - 1;
    o.require(n >= 500, "n_max " + std::to_string(n));
    o.require(r.direct.values.tail(n).maxCoeff() <= 1e-5, "max direct error " + num(r.direct.values.tail(n).maxCoeff()));
    return o;
}

Outcome criterion_3()
{
    Outcome o;
    const ForecastReport& r = torus_report();
    // the rotation has no saturation, so the fit covers every horizon up to 500
    const double slope = fit_log_slope(r.iterative.values, 1, 500);
    o.require(slope <= 0.02, "log slope " + num(slope) + " per step over [1, 500]");
    o.require(r.iterative.diverged == 0, "diverged " + std::to_string(r.iterative.diverged));
    return o;
}

std::optional<ForecastReport> l63_forecast;

Outcome criterion_4()
{
    Outcome o;
    l63_forecast = run_forecast(config_for(SystemKind::lorenz63));
    const ForecastReport& r = *l63_forecast;
    const Index n = r.direct.values.size() - 1;
    o.require(n >= 500 && r.direct.ensemble >= 200,
              "n_max " + std::to_string(n) + ", ensemble " + std::to_string(r.direct.ensemble));
    const double end = r.direct.values(n);
    o.require(std::abs(end - 1.0) <= 0.1, "direct error at n_max " + num(end));
    o.require(std::abs(r.plateau_iterative - std::sqrt(2.0)) <= 0.15, "iterative plateau " + num(r.plateau_iterative));
    return o;
}

Outcome criterion_5()
{
    Outcome o;
    if (!l63_forecast || std::isnan(lambda_l63)) {
        o.require(false, "needs criteria 1 and 4");
        return o;
    }
    const ForecastReport& r = *l63_forecast;
    const double limit = (lambda_l63 + 0.2) * r.dt;
    const double offset = dominating_offset(r.iterative.values, 1, r.window_last, limit);
    o.require(r.slope_per_step <= limit, "slope " + num(r.slope_per_step) + " per step, limit " + num(limit) +
                                             " over [1, " + std::to_string(r.window_last) + "]");
    o.require(std::isfinite(offset), "offset " + num(offset));
    return o;
}

Outcome criterion_6()
{
    Outcome o;
    const ForecastReport& t = torus_report();
    o.require(t.bound_check.violations.empty(), "torus violations " + std::to_string(t.bound_check.violations.size()) +
                                                    ", max excess " + num(t.bound_check.max_excess));
    if (l63_forecast) {
        // informational: the hypothesis of the bound does not hold on L63
        o.detail += "; l63 flagged horizons " + std::to_string(l63_forecast->bound_check.violations.size());
    }
    return o;
}

Vec attractor_point(const ExperimentConfig& c)
{
    const int m = c.system.state_dim();
    return generate_trajectory(c.system, initial_state(c, 5), 1, MeasurementMap::full_state(m)).states.col(0);
}

Outcome criterion_7()
{
    Outcome o;
    for (SystemKind kind : {SystemKind::torus, SystemKind::lorenz63, SystemKind::l63rot}) {
        const ExperimentConfig c = config_for(kind);
        const CheckResult r = check_cocycle_law(c.system, attractor_point(c), 20, 1e-10);
        o.require(r.passed, to_string(kind) + " " + num(r.value));
    }
    return o;
}

Outcome criterion_8()
{
    Outcome o;
    for (SystemKind kind : {SystemKind::torus, SystemKind::lorenz63, SystemKind::l63rot}) {
        ExperimentConfig c = config_for(kind);
        c.forecast.train_length = 2000;
        c.forecast.n_max = 100;
        c.forecast.test_ensemble = 1;
        const ForecastSetup s = prepare_forecast(c);
        const CheckResult r = check_echo_state(s.trajectory.measured, 200, 0.9, c.seed, 1e-8);
        o.require(r.passed, to_string(kind) + " " + num(r.value));
    }
    return o;
}

Outcome criterion_9()
{
    Outcome o;
    for (SystemKind kind : {SystemKind::torus, SystemKind::lorenz63, SystemKind::l63rot}) {
        ExperimentConfig c = config_for(kind);
        c.forecast.train_length = 1000;
        c.forecast.n_max = 100;
        c.forecast.test_ensemble = 1;
        const ForecastSetup s = prepare_forecast(c);
        const Mat series = generate_trajectory(c.system, attractor_point(c), 1000000, s.trajectory.measurement).measured;
        const CheckResult r = check_unitarity(series, 100, 0.02);
        o.require(r.passed, to_string(kind) + " " + num(r.value));
    }
    return o;
}

Outcome criterion_10()
{
    Outcome o;
    ExperimentConfig l63 = config_for(SystemKind::lorenz63);
    l63.markov.coordinates = {2};
    l63.markov.resolution = 20;
    l63.markov.length = 1000000;
    const MarkovReport a = run_markov(l63);
    o.require(a.tv_independent <= 0.05, "l63 z TV " + num(a.tv_independent));
    o.require(a.column_error <= 1e-12, "l63 column error " + num(a.column_error));

    ExperimentConfig torus = config_for(SystemKind::torus);
    torus.markov.resolution = 20;
    const MarkovReport b = run_markov(torus);
    o.require(b.tv_uniform && *b.tv_uniform <= 0.05, "torus uniform TV " + num(b.tv_uniform.value_or(NAN)));
    o.require(b.column_error <= 1e-12, "torus column error " + num(b.column_error));
    return o;
}

Outcome criterion_11()
{
    Outcome o;
    ExperimentConfig c = config_for(SystemKind::torus);
    c.forecast.hypothesis = "gaussian";
    c.forecast.centers = 200;
    c.forecast.ridge.reset();  // default kernel ridge
    const FluctuationReport r = run_fluctuation(c, 100);
    o.require(!r.series.divergence, "delta " + num(r.delta));
    o.require(r.min_ratio >= 0.75 && r.max_ratio <= 1.33,
              "ratio range [" + num(r.min_ratio) + ", " + num(r.max_ratio) + "] over 1..100");
    return o;
}

Outcome criterion_12()
{
    Outcome o;
    ExperimentConfig c = config_for(SystemKind::torus);
    c.lyapunov.stability_gap = true;
    const LyapunovReport r = run_lyapunov(c);
    if (!r.gap) {
        o.require(false, "no stability gap computed");
        return o;
    }
    o.require(r.gap->containment <= 0.05, "containment " + num(r.gap->containment));
    o.require(r.gap->gap >= -0.05, "gap " + num(r.gap->gap));
    return o;
}

}  // namespace

int main()
{
    const std::vector<std::function<Outcome()>> criteria = {
        criterion_1, criterion_2, criterion_3, criterion_4,  criterion_5,  criterion_6,
        criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12,
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i]();
        } catch (const std::exception& e) {
            o.passed = false;
            o.detail = std::string("exception: ") + e.what();
        }
        if (!o.passed) ++failures;
        std::printf("criterion %2zu: %s  (%s) [%.1f s]\n", i + 1, o.passed ? "PASS" : "FAIL", o.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
