#include "doctest.h"

#include "dynrecon/forecast.hpp"

#include <cmath>
#include <numeric>

using namespace dynrecon;

namespace {

struct TorusData {
    Trajectory trajectory;
    EmbeddedSeries lifted;
    HypothesisSpace space;
};

TorusData torus_data(Index n, const SystemSpec& spec = SystemSpec::torus())
{
    Trajectory t = generate_trajectory(spec, Vec::Constant(2, 0.2), n, MeasurementMap::trigonometric({0, 1}), {-1, true});
    EmbeddedSeries lifted = lift(DelayEmbedder(1, 4), t.measured);
    auto space = HypothesisSpace::trigonometric(4, angle_pairs(t.measurement), 1);
    return {std::move(t), std::move(lifted), std::move(space)};
}

std::vector<Index> range(Index first, Index count, Index stride = 1)
{
    std::vector<Index> out(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = first + i * stride;
    return out;
}

}  // namespace

TEST_CASE("autocorrelation of a rotation observable")
{
    const SystemSpec spec = SystemSpec::torus();
    const Trajectory t = generate_trajectory(spec, Vec::Zero(2), 200000, MeasurementMap::full_state(2));
    Mat psi = t.states.row(0).array().cos().matrix();
    psi.array() -= psi.mean();
    const AutocorrelationCurve c = autocorrelation(psi, 100);
    CHECK(c.values(0) == doctest::Approx(1.0).epsilon(1e-10));
    double worst = 0.0;
    for (Index n = 0; n <= 100; ++n) worst = std::max(worst, std::abs(c.values(n) - std::cos(double(n) * spec.rotation(0))));
    CHECK(worst < 1e-3);
    CHECK_THROWS_AS(autocorrelation(psi.leftCols(150), 100), InvalidArgument);
}

TEST_CASE("lorenz63 autocorrelation has a vanishing Cesaro mean")
{
    const SystemSpec spec = SystemSpec::lorenz63();
    const Trajectory t = generate_trajectory(spec, default_initial_state(spec), 300000, MeasurementMap::projection({2}),
                                             {-1, true});
    const AutocorrelationCurve c = autocorrelation(t.measured, 1000);
    CHECK(c.values(0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(c.values.head(1000).mean()) < 0.05);
    CHECK(c.values.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
}

TEST_CASE("direct bound")
{
    AutocorrelationCurve c;
    c.values = (Vec(3) << 1.0, 0.0, 0.6).finished();
    const Vec b = direct_bound(c, 1.0);
    CHECK(b(0) == 0.0);
    CHECK(b(1) == 1.0);
    CHECK(b(2) == doctest::Approx(0.8).epsilon(1e-14));
    CHECK(direct_bound(c, 2.0)(2) == doctest::Approx(1.6).epsilon(1e-14));

    ErrorCurve e;
    e.values = (Vec(3) << 0.0, 1.05, 0.7).finished();
    const BoundCheck loose = check_direct_bound(e, b, 0.1);
    CHECK(loose.violations.empty());
    CHECK(loose.max_excess == doctest::Approx(0.05));
    const BoundCheck tight = check_direct_bound(e, b, 0.01);
    REQUIRE(tight.violations.size() == 1);
    CHECK(tight.violations[0] == 1);
}

TEST_CASE("reconstructed map structure")
{
    const TorusData d = torus_data(500);
    FeedbackModel zero = fit_feedback(d.lifted.points.middleCols(1, 400), d.trajectory.measured.middleCols(2, 400), 1,
                                      d.space, 0.0);
    zero.coefficients.setZero();
    const ReconstructedMap map(zero, DelayEmbedder(1, 4));
    const Rollout r = iterate_reconstructed(map, d.trajectory.measured.col(10), d.lifted.points.col(10), 20);
    CHECK(r.u.cols() == 21);
    CHECK(r.u.rightCols(20).norm() == 0.0);
    for (Index n = 0; n < 20; ++n) CHECK((r.y.col(n + 1) - r.u.col(n)).norm() == 0.0);

    const Mat j = map.jacobian(r.u.col(0), r.y.col(0));
    CHECK(j.rows() == 8);
    CHECK(j.topLeftCorner(4, 4).norm() == 0.0);
}

TEST_CASE("exact torus model forecasts")
{
    const TorusData d = torus_data(3000);
    const ForecastData data{d.trajectory.measured, d.lifted.points};
    const std::vector<Index> train = range(1, 2000);
    const std::vector<FeedbackModel> models = fit_direct_models(d.space, data, train, 50, 0.0);
    REQUIRE(models.size() == 50);
    CHECK(models[0].delta < 1e-10);
    const ReconstructedMap map(models[0], DelayEmbedder(1, 4));

    const std::vector<Index> starts = range(2100, 40, 20);
    const ErrorCurve it = error_iterative(map, data, starts, 50);
    CHECK(it.values(0) == 0.0);
    CHECK(it.values(50) < 1e-3);
    CHECK(it.diverged == 0);
    CHECK(it.ensemble == 40);

    const ErrorCurve direct = error_direct(models, data, starts, 50);
    CHECK(direct.values(0) == 0.0);
    CHECK(direct.values.maxCoeff() < 1e-8);

    // direct error is the horizon-k fit's test residual, independent of the others
    const std::vector<FeedbackModel> first = fit_direct_models(d.space, data, train, 10, 0.0);
    CHECK((error_direct(first, data, starts, 10).values - direct.values.head(11)).norm() < 1e-12);
}

TEST_CASE("periodic lag has a perfect direct forecast")
{
    SystemSpec spec = SystemSpec::torus();
    spec.rotation = Eigen::Vector2d(2 * M_PI / 5, 2 * M_PI / 5);
    const Trajectory t = generate_trajectory(spec, (Vec(2) << 0.2, 0.9).finished(), 400, MeasurementMap::full_state(2));
    const Mat measured = t.states.array().cos().matrix();
    const EmbeddedSeries lifted = lift(DelayEmbedder(1, 2), measured);
    const ForecastData data{measured, lifted.points};
    const auto space = HypothesisSpace::affine(2);
    const std::vector<FeedbackModel> models = fit_direct_models(space, data, range(1, 300), 4, 1e-12);
    Mat psi = measured.row(0);
    psi.array() -= psi.mean();
    CHECK(autocorrelation(psi, 5).values(5) == doctest::Approx(1.0).epsilon(1e-12));
    // lag 5 from the measurement is horizon 4 from the delay-one lift
    const ErrorCurve e = error_direct(models, data, range(310, 50), 4);
    CHECK(e.values(4) <= models[3].delta + 1e-12);
}

TEST_CASE("unitarity of a rotation observable")
{
    const Trajectory t = generate_trajectory(SystemSpec::torus(), Vec::Zero(2), 100000, MeasurementMap::trigonometric({0}),
                                             {-1, true});
    CHECK(unitarity_deviation(t.measured, 100) < 0.02);
}

TEST_CASE("log slope and offset")
{
    Vec v(101);
    for (Index n = 0; n <= 100; ++n) v(n) = 0.003 * std::exp(0.07 * double(n));
    CHECK(fit_log_slope(v, 1, 100) == doctest::Approx(0.07).epsilon(1e-10));
    CHECK(dominating_offset(v, 1, 100, 0.07) == doctest::Approx(std::log(0.003)).epsilon(1e-10));
    v(0) = 0.0;
    CHECK(fit_log_slope(v, 0, 100) == doctest::Approx(0.07).epsilon(1e-10));

    Vec tail = Vec::LinSpaced(10, 1, 10);
    CHECK(tail_mean(tail, 0.2) == doctest::Approx(9.5));
}
