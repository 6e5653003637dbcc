#include "dynrecon/experiment/runners.hpp"

#include <cmath>
#include <sstream>

namespace dynrecon::experiment {

using nlohmann::json;

namespace {

MeasurementMap make_measurement(const ExperimentConfig& c)
{
    const auto& f = c.forecast;
    if (f.measurement == "trigonometric") return MeasurementMap::trigonometric(f.coordinates);
    if (f.measurement == "coordinate-projection") return MeasurementMap::projection(f.coordinates);
    return MeasurementMap::full_state(c.system.state_dim());
}

Embedder make_embedder(const ExperimentConfig& c, int input_dim)
{
    if (c.embedding.kind == EmbeddingKind::delay) return DelayEmbedder(c.embedding.delays, input_dim);
    return ReservoirEmbedder::random(c.embedding.nodes, input_dim, c.embedding.contraction, c.seed);
}

Index embedding_washout(const Embedder& e)
{
    if (const auto* d = std::get_if<DelayEmbedder>(&e)) return d->delays();
    return std::get<ReservoirEmbedder>(e).washout();
}

std::vector<bool> periodic_flags(const ExperimentConfig& c, const std::vector<int>& coords)
{
    std::vector<bool> flags;
    for (int k : coords)
        flags.push_back(c.system.kind == SystemKind::torus || (c.system.kind == SystemKind::l63rot && k == 0));
    return flags;
}

Mat select_rows(const Mat& states, const std::vector<int>& rows)
{
    Mat out(static_cast<Index>(rows.size()), states.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = states.row(rows[i]);
    return out;
}

json vec_json(const Vec& v)
{
    return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

ForecastSetup prepare_forecast(const ExperimentConfig& config)
{
    validate(config);
    const auto& f = config.forecast;
    ForecastSetup s;
    s.config = config;
    const MeasurementMap measurement = make_measurement(config);
    s.embedder = make_embedder(config, measurement.dim());
    const Index washout = embedding_washout(s.embedder);

    for (Index i = 0; i < f.train_length; ++i) s.train.push_back(washout + i);
    const Index test0 = washout + f.train_length + 2 * f.n_max;
    for (Index j = 0; j < f.test_ensemble; ++j) s.test.push_back(test0 + j * f.test_spacing);
    const Index length = s.test.back() + f.n_max + 1;

    s.trajectory = generate_trajectory(config.system, initial_state(config), length, measurement, {-1, true});
    EmbeddedSeries lifted = lift(s.embedder, s.trajectory.measured);
    s.washout = lifted.washout;
    if (s.washout > washout) throw NumericalError("lift washout exceeds the planned training offset");
    s.lifted = std::move(lifted.points);
    s.phi_norm = std::sqrt(s.trajectory.measured.colwise().squaredNorm().mean());

    const Mat inputs = s.lifted.middleCols(s.train.front(), f.train_length);
    const int l = static_cast<int>(s.lifted.rows());
    if (f.hypothesis == "fourier") {
        s.space = std::make_shared<const HypothesisSpace>(
            HypothesisSpace::trigonometric(l, angle_pairs(s.trajectory.measurement), f.order));
    } else if (f.hypothesis == "gaussian") {
        s.space = std::make_shared<const HypothesisSpace>(HypothesisSpace::gaussian_kernel(
            subsample_columns(inputs, f.centers), median_bandwidth(inputs) * f.bandwidth_factor));
    } else {
        s.space = std::make_shared<const HypothesisSpace>(HypothesisSpace::affine(l));
    }
    s.ridge = f.ridge ? *f.ridge : default_ridge(s.space->feature_matrix(inputs)) * f.ridge_factor;
    return s;
}

FeedbackModel fit_one_step(const ForecastSetup& s)
{
    const Index n = static_cast<Index>(s.train.size());
    const Mat inputs = s.lifted.middleCols(s.train.front(), n);
    const Mat targets = s.trajectory.measured.middleCols(s.train.front() + 1, n);
    return fit_feedback(inputs, targets, 1, *s.space, s.ridge, {true, false});
}

ForecastReport run_forecast(const ExperimentConfig& config)
{
    return run_forecast(prepare_forecast(config));
}

ForecastReport run_forecast(const ForecastSetup& s)
{
    const auto& f = s.config.forecast;
    const ForecastData data = s.data();
    ForecastReport r;
    r.dt = s.config.system.dt;
    r.phi_norm = s.phi_norm;
    r.ridge = s.ridge;
    r.features = s.space->size();
    r.bandwidth = s.space->kind() == FeatureKind::gaussian_kernel ? s.space->bandwidth() : 0.0;

    const FeedbackModel one = fit_one_step(s);
    r.delta = one.delta;
    const ReconstructedMap map(one, s.embedder);
    r.iterative = error_iterative(map, data, s.test, f.n_max, s.phi_norm);

    const auto models = fit_direct_models(*s.space, data, s.train, f.n_max, s.ridge);
    r.direct = error_direct(models, data, s.test, f.n_max);
    r.direct_delta = Vec::Zero(f.n_max + 1);
    for (const auto& m : models) r.direct_delta(m.horizon) = m.delta;

    r.autocorrelation = autocorrelation(s.trajectory.measured, f.n_max);
    r.bound = direct_bound(r.autocorrelation, s.phi_norm);
    r.direct.bound = r.bound;
    r.bound_check = check_direct_bound(r.direct, r.bound, Vec(3.0 * r.direct_delta));

    r.plateau_direct = tail_mean(r.direct.values, 0.2);
    r.plateau_iterative = tail_mean(r.iterative.values, 0.2);
    // growth window: horizon 1 up to the first horizon above half the plateau
    Index last = 1;
    while (last < f.n_max && !(r.iterative.values(last) > 0.5 * r.plateau_iterative)) ++last;
    r.window_last = std::max<Index>(std::min<Index>(2, f.n_max), last);
    if (r.window_last > 1) r.slope_per_step = fit_log_slope(r.iterative.values, 1, r.window_last);
    r.reference_exponent = f.reference_exponent;
    r.reference_offset = dominating_offset(r.iterative.values, 1, r.window_last, f.reference_exponent * r.dt);
    return r;
}

json summary(const ForecastReport& r)
{
    return {{"delta", r.delta},
            {"ridge", r.ridge},
            {"features", r.features},
            {"bandwidth", r.bandwidth},
            {"phi_norm", r.phi_norm},
            {"n_max", r.direct.values.size() - 1},
            {"ensemble", r.direct.ensemble},
            {"iterative_diverged", r.iterative.diverged},
            {"max_error_direct", r.direct.values.maxCoeff()},
            {"plateau_direct", r.plateau_direct},
            {"plateau_iterative", r.plateau_iterative},
            {"error_direct_at_n_max", r.direct.values(r.direct.values.size() - 1)},
            {"growth_window", {1, r.window_last}},
            {"growth_slope_per_step", r.slope_per_step},
            {"growth_slope_per_time", r.slope_per_step / r.dt},
            {"reference_exponent", r.reference_exponent},
            {"reference_offset", r.reference_offset},
            {"bound_violations", r.bound_check.violations},
            {"bound_max_excess", r.bound_check.max_excess}};
}

void write_forecast(const ForecastReport& r, Manifest& manifest)
{
    const Index n = r.direct.values.size();
    Vec horizon = Vec::LinSpaced(n, 0.0, static_cast<double>(n - 1));
    manifest.write("errors.csv", csv_table({"horizon", "error_direct", "error_iter", "autocorr", "bound"},
                                           {horizon, r.direct.values, r.iterative.values, r.autocorrelation.values,
                                            r.bound.head(n)}));
    manifest.write("summary.json", summary(r).dump(2) + "\n");
}

FeedbackJacobian torus_feedback_jacobian(const ForecastSetup& s)
{
    if (s.config.system.kind != SystemKind::torus || s.trajectory.measurement.kind() != MeasurementKind::trigonometric ||
        s.config.embedding.kind != EmbeddingKind::delay)
        throw InvalidArgument("closed-form feedback needs the torus with a trigonometric delay lift");
    const MeasurementMap meas = s.trajectory.measurement;
    const auto coords = meas.coordinates();
    // two steps separate the newest delay block from the forecast target
    Vec shift(static_cast<Index>(coords.size()));
    for (std::size_t i = 0; i < coords.size(); ++i)
        shift(static_cast<Index>(i)) = 2.0 * s.config.system.rotation(coords[i]);
    const Index l = s.lifted.rows();
    return [meas, shift, l](const Vec& y) {
        const Vec& mean = meas.mean();
        const Vec& scale = meas.scale();
        const int d = meas.dim();
        Mat w = Mat::Zero(d, l);
        for (int a = 0; a < d / 2; ++a) {
            const int ic = 2 * a, is = 2 * a + 1;
            const double c = y(ic) * scale(ic) + mean(ic);
            const double sn = y(is) * scale(is) + mean(is);
            const double r2 = c * c + sn * sn;
            const double theta = std::atan2(sn, c) + shift(a);
            // d theta / d y, through the de-normalization
            const double dc = -sn / r2 * scale(ic);
            const double ds = c / r2 * scale(is);
            const double out_c = -std::sin(theta) / scale(ic);
            const double out_s = std::cos(theta) / scale(is);
            w(ic, ic) = out_c * dc;
            w(ic, is) = out_c * ds;
            w(is, ic) = out_s * dc;
            w(is, is) = out_s * ds;
        }
        return w;
    };
}

LyapunovReport run_lyapunov(const ExperimentConfig& config)
{
    validate(config);
    const SystemSpec& spec = config.system;
    const int m = spec.state_dim();
    const Vec x0 = generate_trajectory(spec, initial_state(config, 2), 1, MeasurementMap::full_state(m)).states.col(0);
    LyapunovReport r;
    r.estimate = system_lyapunov(spec, x0, config.lyapunov.steps, config.lyapunov.exponents ? config.lyapunov.exponents : m);
    if (config.lyapunov.stability_gap) {
        const ForecastSetup s = prepare_forecast(config);
        const Index warmup = 1000;
        if (s.washout + warmup + config.lyapunov.gap_steps > s.trajectory.size())
            throw ConfigError("lyapunov.gap_steps", "longer than the forecast orbit");
        const ReconstructedMap map(fit_one_step(s), s.embedder);
        r.gap = stability_gap(map, spec, s.trajectory.states, s.data(), s.washout, config.lyapunov.gap_steps, warmup);
    }
    return r;
}

json summary(const LyapunovReport& r)
{
    json j = {{"steps", r.estimate.steps},
              {"dt", r.estimate.dt},
              {"exponents_per_time", vec_json(r.estimate.per_time)},
              {"exponents_per_step", vec_json(r.estimate.per_step)}};
    if (r.gap) {
        j["stability_gap"] = {{"reconstructed_per_time", vec_json(r.gap->reconstructed.per_time)},
                              {"original_per_time", vec_json(r.gap->original.per_time)},
                              {"gap", r.gap->gap},
                              {"containment", r.gap->containment},
                              {"steps", r.gap->original.steps}};
    }
    return j;
}

void write_lyapunov(const LyapunovReport& r, Manifest& manifest)
{
    const auto& e = r.estimate;
    std::vector<std::string> header{"step"};
    std::vector<Vec> columns;
    Vec steps(static_cast<Index>(e.trace_steps.size()));
    for (std::size_t i = 0; i < e.trace_steps.size(); ++i) steps(static_cast<Index>(i)) = static_cast<double>(e.trace_steps[i]);
    columns.push_back(steps);
    for (Index i = 0; i < e.trace.rows(); ++i) {
        header.push_back("lambda" + std::to_string(i + 1) + "_running");
        columns.push_back(e.trace.row(i).transpose());
    }
    manifest.write("lyapunov.csv", csv_table(header, columns));
    manifest.write("summary.json", summary(r).dump(2) + "\n");
}

MarkovReport run_markov(const ExperimentConfig& config)
{
    validate(config);
    const SystemSpec& spec = config.system;
    const auto& mk = config.markov;
    const int m = spec.state_dim();
    const auto full = MeasurementMap::full_state(m);

    const Mat build = select_rows(generate_trajectory(spec, initial_state(config, 3), mk.length, full).states, mk.coordinates);
    MarkovReport r{BoxPartition::build(build, std::vector<int>(mk.coordinates.size(), mk.resolution),
                                       periodic_flags(config, mk.coordinates)),
                   {}, {}, {}, {}, {}, 0, 0, 0, 0, {}, 0, 0, false, {}};
    const Index cells = r.partition.cells();
    const std::vector<Index> path = r.partition.assign(build);
    r.matrix = transition_matrix(path, cells);
    r.column_error = r.matrix.stochasticity_error();
    r.stationary = stationary_distribution(r.matrix);
    r.occupation = occupation_histogram(path, cells);

    const Mat other = select_rows(generate_trajectory(spec, initial_state(config, 4), mk.length, full).states, mk.coordinates);
    r.independent = Vec::Zero(cells);
    Index outside = 0;
    for (Index t = 0; t < other.cols(); ++t) {
        if (auto c = r.partition.find_cell(other.col(t)))
            r.independent(*c) += 1.0;
        else
            ++outside;
    }
    r.independent /= static_cast<double>(other.cols());
    r.outside_mass = static_cast<double>(outside) / static_cast<double>(other.cols());
    r.tv_independent = total_variation(r.stationary.pi, r.independent) + 0.5 * r.outside_mass;
    r.tv_occupation = total_variation(r.stationary.pi, r.occupation);
    if (spec.kind == SystemKind::torus)
        r.tv_uniform = total_variation(r.stationary.pi, Vec::Constant(cells, 1.0 / static_cast<double>(cells)));

    Index start = 0;
    r.stationary.pi.maxCoeff(&start);
    const MarkovPath chain = simulate_markov(r.matrix, start, mk.simulate, config.seed);
    r.absorbed = chain.absorbed;
    r.simulated = occupation_histogram(chain.cells, cells);
    r.tv_simulated = total_variation(r.stationary.pi, r.simulated);

    const TransitionMatrix via_indicators = koopman_to_markov(koopman_indicator_matrix(path, cells));
    r.identity_error = Mat(via_indicators.p - r.matrix.p).cwiseAbs().maxCoeff();
    r.law = reconstruct_law(r.matrix, r.partition);
    return r;
}

json summary(const MarkovReport& r)
{
    json j = {{"cells", r.partition.cells()},
              {"occupied_cells", r.partition.occupied().size()},
              {"zero_columns", r.matrix.zero_columns},
              {"column_sum_max_error", r.column_error},
              {"stationary_residual", r.stationary.residual},
              {"stationary_converged", r.stationary.converged},
              {"stationary_cesaro", r.stationary.cesaro},
              {"tv_stationary_independent", r.tv_independent},
              {"independent_outside_mass", r.outside_mass},
              {"tv_stationary_occupation", r.tv_occupation},
              {"tv_stationary_simulated", r.tv_simulated},
              {"simulation_absorbed", r.absorbed},
              {"indicator_identity_error", r.identity_error}};
    if (r.tv_uniform) j["tv_stationary_uniform"] = *r.tv_uniform;
    return j;
}

void write_markov(const MarkovReport& r, Manifest& manifest)
{
    std::ostringstream coo;
    write_coo(coo, r.matrix.p);
    manifest.write("transition.coo", coo.str());

    const Index cells = r.partition.cells();
    manifest.write("stationary.csv",
                   csv_table({"cell", "stationary", "occupation", "independent", "simulated"},
                             {Vec::LinSpaced(cells, 0.0, static_cast<double>(cells - 1)), r.stationary.pi, r.occupation,
                              r.independent, r.simulated}));

    std::vector<std::string> header{"cell"};
    std::vector<Vec> columns;
    const Index rows = static_cast<Index>(r.law.cells.size());
    Vec cell(rows);
    Mat centers(r.partition.dim(), rows);
    for (Index i = 0; i < rows; ++i) {
        cell(i) = static_cast<double>(r.law.cells[static_cast<std::size_t>(i)]);
        centers.col(i) = r.partition.centroid(r.law.cells[static_cast<std::size_t>(i)]);
    }
    columns.push_back(cell);
    for (int k = 0; k < r.partition.dim(); ++k) {
        header.push_back("centroid_" + std::to_string(k + 1));
        columns.push_back(centers.row(k).transpose());
    }
    for (int k = 0; k < r.partition.dim(); ++k) {
        header.push_back("image_" + std::to_string(k + 1));
        columns.push_back(r.law.images.row(k).transpose());
    }
    header.push_back("dispersion");
    columns.push_back(r.law.dispersion);
    manifest.write("law.csv", csv_table(header, columns));
    manifest.write("summary.json", summary(r).dump(2) + "\n");
}

FluctuationReport run_fluctuation(const ExperimentConfig& config, Index n_max)
{
    if (n_max < 1) throw InvalidArgument("fluctuation horizon must be at least 1");
    const ForecastSetup s = prepare_forecast(config);
    const FeedbackModel one = fit_one_step(s);
    const ReconstructedMap map(one, s.embedder);
    FluctuationReport r;
    r.start = s.test.front();
    r.delta = one.delta;
    r.series = fluctuations(map, s.data(), r.start, n_max);
    const Vec ratio = r.series.ratio();
    r.min_ratio = ratio.segment(1, n_max).minCoeff();
    r.max_ratio = ratio.segment(1, n_max).maxCoeff();
    return r;
}

}  // namespace dynrecon::experiment
