#include "dynrecon/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dynrecon {

ReconstructedMap::ReconstructedMap(FeedbackModel model, Embedder embedder)
    : model_(std::move(model)), embedder_(std::move(embedder))
{
    if (!model_.space) throw InvalidArgument("reconstructed map needs a fitted model");
    if (model_.input_dim() != dynrecon::state_dim(embedder_))
        throw InvalidArgument("model input dimension differs from the embedding dimension");
    if (model_.output_dim() != dynrecon::input_dim(embedder_))
        throw InvalidArgument("model output dimension differs from the embedding input dimension");
}

std::pair<Vec, Vec> ReconstructedMap::step(const Vec& u, const Vec& y) const
{
    return {predict(model_, y), apply_g(embedder_, u, y)};
}

Mat ReconstructedMap::jacobian(const Vec& u, const Vec& y) const
{
    const int d = measurement_dim();
    const int l = embedding_dim();
    Mat m = Mat::Zero(d + l, d + l);
    m.topRightCorner(d, l) = predict_jacobian(model_, y);
    m.bottomLeftCorner(l, d) = g_du(embedder_, u, y);
    m.bottomRightCorner(l, l) = g_dy(embedder_, u, y);
    return m;
}

Rollout iterate_reconstructed(const ReconstructedMap& map, const Vec& u0, const Vec& y0, Index steps)
{
    if (u0.size() != map.measurement_dim() || y0.size() != map.embedding_dim())
        throw InvalidArgument("iterate_reconstructed: initial state dimension mismatch");
    Rollout r;
    r.u = Mat::Zero(map.measurement_dim(), steps + 1);
    r.y = Mat::Zero(map.embedding_dim(), steps + 1);
    r.u.col(0) = u0;
    r.y.col(0) = y0;
    for (Index n = 0; n < steps; ++n) {
        auto [u, y] = map.step(r.u.col(n), r.y.col(n));
        if (!u.allFinite() || !y.allFinite()) {
            r.divergence = n + 1;
            break;
        }
        r.u.col(n + 1) = u;
        r.y.col(n + 1) = y;
    }
    return r;
}

namespace {

void check_ranges(const ForecastData& data, const std::vector<Index>& starts, Index n_max)
{
    if (data.measured.cols() != data.lifted.cols()) throw InvalidArgument("measured and lifted series differ in length");
    if (starts.empty()) throw InvalidArgument("forecast ensemble is empty");
    if (n_max < 0) throw InvalidArgument("n_max must be non-negative");
    for (Index s : starts)
        if (s < 0 || s + n_max >= data.measured.cols())
            throw InvalidArgument("test start " + std::to_string(s) + " lacks a truth segment of length n_max");
}

}  // namespace

ErrorCurve error_iterative(const ReconstructedMap& map, const ForecastData& data, const std::vector<Index>& starts,
                           Index n_max, double signal_scale)
{
    check_ranges(data, starts, n_max);
    const double cap = 1e3 * signal_scale;
    Vec sum_sq = Vec::Zero(n_max + 1);
    ErrorCurve curve;
    curve.mode = ForecastMode::iterative;
    curve.ensemble = static_cast<Index>(starts.size());
    for (Index s : starts) {
        const Rollout r = iterate_reconstructed(map, data.measured.col(s), data.lifted.col(s), n_max);
        const Index valid = r.divergence.value_or(n_max + 1);
        bool capped = false;
        for (Index k = 0; k <= n_max; ++k) {
            double e = cap;
            if (!capped && k < valid) {
                e = (data.measured.col(s + k) - r.u.col(k)).norm();
                if (!(e <= cap)) {
                    e = cap;
                    capped = true;
                }
            } else {
                capped = true;
            }
            sum_sq(k) += e * e;
        }
        if (capped) ++curve.diverged;
    }
    curve.values = (sum_sq / static_cast<double>(starts.size())).cwiseSqrt();
    return curve;
}

ErrorCurve error_direct(const std::vector<FeedbackModel>& models, const ForecastData& data,
                        const std::vector<Index>& starts, Index n_max)
{
    check_ranges(data, starts, n_max);
    if (static_cast<Index>(models.size()) < n_max) throw InvalidArgument("error_direct needs one model per horizon");
    ErrorCurve curve;
    curve.mode = ForecastMode::direct;
    curve.ensemble = static_cast<Index>(starts.size());
    curve.values = Vec::Zero(n_max + 1);
    if (n_max == 0) return curve;

    // features of the test lifts, shared by all models over the same space
    const auto& space = models.front().space;
    Mat lifts(data.lifted.rows(), static_cast<Index>(starts.size()));
    for (std::size_t i = 0; i < starts.size(); ++i) lifts.col(static_cast<Index>(i)) = data.lifted.col(starts[i]);
    const Mat shared = space->feature_matrix(lifts);

    for (Index k = 1; k <= n_max; ++k) {
        const FeedbackModel& m = models[static_cast<std::size_t>(k - 1)];
        if (m.horizon != k) throw InvalidArgument("direct models must be ordered by horizon");
        const Mat pred = m.space == space ? Mat(m.coefficients * shared.transpose())
                                          : Mat(m.coefficients * m.space->feature_matrix(lifts).transpose());
        double sq = 0.0;
        for (std::size_t i = 0; i < starts.size(); ++i)
            sq += (data.measured.col(starts[i] + k) - pred.col(static_cast<Index>(i))).squaredNorm();
        curve.values(k) = std::sqrt(sq / static_cast<double>(starts.size()));
    }
    return curve;
}

std::vector<FeedbackModel> fit_direct_models(const HypothesisSpace& space, const ForecastData& data,
                                             const std::vector<Index>& train, Index n_max, double ridge)
{
    if (train.empty()) throw InvalidArgument("training index set is empty");
    if (n_max < 1) throw InvalidArgument("direct fitting needs n_max >= 1");
    for (Index i : train)
        if (i < 0 || i + n_max >= data.measured.cols()) throw InvalidArgument("training index lacks horizon targets");

    const Index d = data.measured.rows();
    const Index n = static_cast<Index>(train.size());
    Mat inputs(data.lifted.rows(), n);
    for (Index i = 0; i < n; ++i) inputs.col(i) = data.lifted.col(train[static_cast<std::size_t>(i)]);
    const LeastSquaresSolver solver(space.feature_matrix(inputs), ridge);
    auto shared = std::make_shared<const HypothesisSpace>(space);

    std::vector<FeedbackModel> models;
    models.reserve(static_cast<std::size_t>(n_max));
    // horizons are solved in batches so the stacked targets stay small
    const Index batch = std::max<Index>(1, 600 / d);
    for (Index k0 = 1; k0 <= n_max; k0 += batch) {
        const Index count = std::min(batch, n_max - k0 + 1);
        Mat targets(count * d, n);
        for (Index b = 0; b < count; ++b)
            for (Index i = 0; i < n; ++i)
                targets.block(b * d, i, d, 1) = data.measured.col(train[static_cast<std::size_t>(i)] + k0 + b);
        const auto sol = solver.solve_with_residuals(targets);
        for (Index b = 0; b < count; ++b) {
            FeedbackModel m;
            m.horizon = static_cast<int>(k0 + b);
            m.space = shared;
            m.ridge = ridge;
            m.coefficients = sol.coefficients.middleRows(b * d, d);
            m.delta = std::sqrt(sol.mean_square_residual.segment(b * d, d).sum());
            models.push_back(std::move(m));
        }
    }
    return models;
}

AutocorrelationCurve autocorrelation(const Mat& series, Index n_max)
{
    const Index n = series.cols();
    if (n_max < 0) throw InvalidArgument("n_max must be non-negative");
    if (n < 2 * n_max || n < 1) throw InvalidArgument("series shorter than 2 n_max");
    const double power = series.colwise().squaredNorm().sum() / static_cast<double>(n);
    if (!(power > 0.0)) throw InvalidArgument("autocorrelation of a zero series");
    AutocorrelationCurve c;
    c.values.resize(n_max + 1);
    c.values(0) = 1.0;
    for (Index lag = 1; lag <= n_max; ++lag) {
        double acc = 0.0;
        for (Index t = 0; t + lag < n; ++t) acc += series.col(t + lag).dot(series.col(t));
        c.values(lag) = acc / static_cast<double>(n - lag) / power;
    }
    return c;
}

Vec direct_bound(const AutocorrelationCurve& curve, double phi_norm)
{
    return (phi_norm * (1.0 - curve.values.array().square()).max(0.0).sqrt()).matrix();
}

BoundCheck check_direct_bound(const ErrorCurve& direct, const Vec& bound, double slack)
{
    return check_direct_bound(direct, bound, Vec::Constant(direct.values.size(), slack));
}

BoundCheck check_direct_bound(const ErrorCurve& direct, const Vec& bound, const Vec& slack)
{
    if (bound.size() < direct.values.size()) throw InvalidArgument("bound curve is shorter than the error curve");
    if (slack.size() < direct.values.size()) throw InvalidArgument("slack curve is shorter than the error curve");
    BoundCheck out;
    out.max_excess = -std::numeric_limits<double>::infinity();
    for (Index k = 0; k < direct.values.size(); ++k) {
        const double excess = direct.values(k) - bound(k);
        out.max_excess = std::max(out.max_excess, excess);
        if (excess > slack(k)) out.violations.push_back(k);
    }
    return out;
}

double unitarity_deviation(const Mat& series, Index n_max)
{
    const Index window = series.cols() - n_max;
    if (n_max < 0 || window < 1) throw InvalidArgument("series too short for the requested lag range");
    const double base = std::sqrt(series.leftCols(window).colwise().squaredNorm().sum() / static_cast<double>(window));
    if (!(base > 0.0)) throw InvalidArgument("unitarity check on a zero series");
    double worst = 0.0;
    for (Index lag = 1; lag <= n_max; ++lag) {
        const double rms =
            std::sqrt(series.middleCols(lag, window).colwise().squaredNorm().sum() / static_cast<double>(window));
        worst = std::max(worst, std::abs(rms - base) / base);
    }
    return worst;
}

double fit_log_slope(const Vec& values, Index first, Index last)
{
    if (first < 0 || last >= values.size() || last <= first) throw InvalidArgument("invalid slope window");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double count = 0;
    for (Index k = first; k <= last; ++k) {
        if (!(values(k) > 0.0)) continue;
        const double x = static_cast<double>(k);
        const double y = std::log(values(k));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        count += 1;
    }
    if (count < 2) throw NumericalError("fewer than two positive values in the slope window");
    const double denom = count * sxx - sx * sx;
    return (count * sxy - sx * sy) / denom;
}

double dominating_offset(const Vec& values, Index first, Index last, double slope)
{
    if (first < 0 || last >= values.size() || last < first) throw InvalidArgument("invalid offset window");
    double offset = -std::numeric_limits<double>::infinity();
    for (Index k = first; k <= last; ++k)
        if (values(k) > 0.0) offset = std::max(offset, std::log(values(k)) - slope * static_cast<double>(k));
    return offset;
}

double tail_mean(const Vec& values, double fraction)
{
    if (values.size() == 0) throw InvalidArgument("tail mean of an empty curve");
    const Index count = std::max<Index>(1, static_cast<Index>(std::ceil(fraction * static_cast<double>(values.size()))));
    return values.tail(std::min(count, values.size())).mean();
}

}  // namespace dynrecon
