#pragma once

// Forecast, Lyapunov, Markov and fluctuation experiments. Each runner returns
// its results in memory; write_* turns them into files under a manifest.

#include "dynrecon/cocycle.hpp"
#include "dynrecon/experiment/config.hpp"
#include "dynrecon/experiment/io.hpp"
#include "dynrecon/markov.hpp"

#include <memory>

namespace dynrecon::experiment {

/// Orbit, lift and index sets shared by the forecasting experiments.
///
/// Layout along the orbit: lift washout, training inputs, n_max steps of
/// targets, a gap of n_max, then the test starts every test_spacing steps,
/// each followed by n_max steps of truth.
struct ForecastSetup {
    ExperimentConfig config;
    Trajectory trajectory;
    Embedder embedder = DelayEmbedder(1, 1);
    Mat lifted;
    Index washout = 0;
    std::vector<Index> train;
    std::vector<Index> test;
    std::shared_ptr<const HypothesisSpace> space;
    double ridge = 0.0;
    double phi_norm = 1.0;  // RMS of |phi| over the orbit

    ForecastData data() const { return {trajectory.measured, lifted}; }
};

ForecastSetup prepare_forecast(const ExperimentConfig& config);
/// Horizon-one feedback model over the setup's hypothesis space.
FeedbackModel fit_one_step(const ForecastSetup& setup);

struct ForecastReport {
    ErrorCurve direct;
    ErrorCurve iterative;
    AutocorrelationCurve autocorrelation;
    Vec bound;
    Vec direct_delta;  // per horizon, entry 0 unused
    BoundCheck bound_check;
    double delta = 0.0;  // horizon-one training residual
    double ridge = 0.0;
    int features = 0;
    double bandwidth = 0.0;
    double phi_norm = 1.0;
    double dt = 1.0;
    double plateau_direct = 0.0;  // mean over the last 20% of horizons
    double plateau_iterative = 0.0;
    Index window_last = 1;  // growth window is [1, window_last]
    double slope_per_step = 0.0;
    double reference_exponent = 0.0;
    double reference_offset = 0.0;  // smallest offset of the reference line over the window
};

ForecastReport run_forecast(const ExperimentConfig& config);
ForecastReport run_forecast(const ForecastSetup& setup);
nlohmann::json summary(const ForecastReport& report);
/// errors.csv (horizon,error_direct,error_iter,autocorr,bound) and summary.json.
void write_forecast(const ForecastReport& report, Manifest& manifest);

struct LyapunovReport {
    LyapunovEstimate estimate;
    std::optional<StabilityGap> gap;
};

LyapunovReport run_lyapunov(const ExperimentConfig& config);
nlohmann::json summary(const LyapunovReport& report);
/// lyapunov.csv (step,lambda1_running,...) and summary.json.
void write_lyapunov(const LyapunovReport& report, Manifest& manifest);

struct MarkovReport {
    BoxPartition partition;
    TransitionMatrix matrix;
    StationaryDistribution stationary;
    Vec occupation;   // build orbit
    Vec independent;  // second orbit from another initial condition
    Vec simulated;    // Markov chain frequencies
    double outside_mass = 0.0;  // independent points outside the box
    double tv_independent = 0.0;
    double tv_occupation = 0.0;
    double tv_simulated = 0.0;
    std::optional<double> tv_uniform;  // torus only
    double column_error = 0.0;
    double identity_error = 0.0;  // indicator-matrix route vs direct counts
    bool absorbed = false;
    LawTable law;
};

MarkovReport run_markov(const ExperimentConfig& config);
nlohmann::json summary(const MarkovReport& report);
/// transition.coo, stationary.csv, law.csv and summary.json.
void write_markov(const MarkovReport& report, Manifest& manifest);

struct FluctuationReport {
    FluctuationSeries series;
    Index start = 0;
    double delta = 0.0;
    double min_ratio = 0.0;  // over 1 <= n <= n_max
    double max_ratio = 0.0;
};

/// Iterative fluctuations against the perturbed cocycle from one test start.
FluctuationReport run_fluctuation(const ExperimentConfig& config, Index n_max = 100);

/// Closed-form Jacobian of the true torus feedback on a delay-one lift of the
/// normalized trigonometric measurement.
FeedbackJacobian torus_feedback_jacobian(const ForecastSetup& setup);

}  // namespace dynrecon::experiment
