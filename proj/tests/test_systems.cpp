#include "doctest.h"

#include "dynrecon/systems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace dynrecon;

namespace {

constexpr double two_pi = 2 * std::numbers::pi;

double max_circular_gap(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    double gap = v.front() + two_pi - v.back();
    for (std::size_t i = 1; i < v.size(); ++i) gap = std::max(gap, v[i] - v[i - 1]);
    return gap;
}

}  // namespace

TEST_CASE("torus step wraps angles")
{
    const Eigen::Vector2d zero(0, 0);
    CHECK(step_torus(zero, zero).norm() == 0.0);
    const Eigen::Vector2d next = step_torus({6.0, 6.0}, {0.5, 0.5});
    CHECK(next(0) == doctest::Approx(6.5 - two_pi).epsilon(1e-14));
    CHECK(next(1) == doctest::Approx(0.21681).epsilon(1e-4));
}

TEST_CASE("irrational rotation fills both circles")
{
    const SystemSpec spec = SystemSpec::torus();
    const Trajectory t = generate_trajectory(spec, Vec::Zero(2), 10000, MeasurementMap::full_state(2));
    for (int c = 0; c < 2; ++c) {
        std::vector<double> v(t.states.row(c).data(), t.states.row(c).data() + t.size());
        CHECK(max_circular_gap(v) < 0.2);
    }
    // closed-form orbit
    for (Index n : {Index(1), Index(999), Index(9999)})
        for (int c = 0; c < 2; ++c)
            CHECK(std::abs(std::remainder(t.states(c, n) - n * spec.rotation(c), two_pi)) < 1e-9);
}

TEST_CASE("lorenz63 equilibria")
{
    const SystemSpec spec = SystemSpec::lorenz63();
    CHECK(step_lorenz63(Eigen::Vector3d::Zero(), spec).norm() == 0.0);
    const Eigen::Vector3d cplus(std::sqrt(72.0), std::sqrt(72.0), 27.0);
    CHECK((step_lorenz63(cplus, spec) - cplus).norm() < 1e-9);
}

TEST_CASE("lorenz63 step refinement")
{
    // A single 4th-order step of 0.01 carries a truncation error near 1e-6 on
    // the attractor, so 1e-8 agreement with the refined map needs 10 substeps.
    const Eigen::Vector3d x(1.3, -4.2, 22.0);
    SystemSpec spec = SystemSpec::lorenz63();
    spec.substeps = 100;
    const Eigen::Vector3d reference = step_lorenz63(x, spec);
    auto error = [&](int substeps) {
        SystemSpec s = SystemSpec::lorenz63();
        s.substeps = substeps;
        return (step_lorenz63(x, s) - reference).cwiseAbs().maxCoeff();
    };
    CHECK(error(1) < 1e-5);
    CHECK(error(10) < 1e-8);
    // fourth order: halving the step cuts the error by about 16
    const double ratio = error(2) / error(4);
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);
}

TEST_CASE("l63rot is a product system")
{
    SystemSpec spec = SystemSpec::l63rot();
    SystemSpec still = spec;
    still.rotation.setZero();
    CHECK(step_l63rot(Eigen::Vector4d::Zero(), still).norm() == 0.0);

    const Eigen::Vector4d a(0.3, 1.0, 2.0, 20.0);
    Eigen::Vector4d b = a;
    b.tail<3>() += Eigen::Vector3d(0.5, -0.5, 1.0);
    CHECK(step_l63rot(a, spec)(0) == step_l63rot(b, spec)(0));

    Vec s = a;
    for (int i = 0; i < 1000; ++i) s = step(spec, s);
    const double expected = std::fmod(0.3 + 1000 * spec.rotation(0), two_pi);
    CHECK(std::abs(std::remainder(s(0) - expected, two_pi)) < 1e-9);
}

TEST_CASE("lorenz63 attractor stays in its bounding box")
{
    const Trajectory t = generate_trajectory(SystemSpec::lorenz63(), default_initial_state(SystemSpec::lorenz63()),
                                             20000, MeasurementMap::full_state(3));
    CHECK(t.states.row(0).cwiseAbs().maxCoeff() <= 25.0);
    CHECK(t.states.row(1).cwiseAbs().maxCoeff() <= 30.0);
    CHECK(t.states.row(2).minCoeff() >= 0.0);
    CHECK(t.states.row(2).maxCoeff() <= 55.0);
}

TEST_CASE("full-state measurement of a torus orbit equals the states")
{
    const Trajectory t = generate_trajectory(SystemSpec::torus(), Vec::Zero(2), 3, MeasurementMap::full_state(2));
    CHECK((t.measured - t.states).norm() == 0.0);
}

TEST_CASE("normalized measurements have zero mean and unit RMS norm")
{
    for (const MeasurementMap& m : {MeasurementMap::full_state(3), MeasurementMap::projection({2})}) {
        const Trajectory t = generate_trajectory(SystemSpec::lorenz63(), default_initial_state(SystemSpec::lorenz63()),
                                                 5000, m, {-1, true});
        CHECK(t.measured.rowwise().mean().cwiseAbs().maxCoeff() < 1e-12);
        CHECK(std::sqrt(t.measured.colwise().squaredNorm().mean()) == doctest::Approx(1.0).epsilon(1e-12));
    }
    const MeasurementMap trig = MeasurementMap::trigonometric({0, 1});
    const Trajectory t = generate_trajectory(SystemSpec::torus(), Vec::Zero(2), 5000, trig, {-1, true});
    CHECK(t.measured.rows() == 4);
    CHECK(t.measured.rowwise().mean().cwiseAbs().maxCoeff() < 1e-12);
    const Vec raw = t.measurement.raw(t.states.col(7));
    CHECK((t.measurement.denormalize(t.measured.col(7)) - raw).norm() < 1e-12);
}

TEST_CASE("jacobians")
{
    CHECK(jacobian(SystemSpec::torus(), Vec::Constant(2, 0.4)).isIdentity(0.0));

    const SystemSpec l63 = SystemSpec::lorenz63();
    const Trajectory t = generate_trajectory(l63, default_initial_state(l63), 200, MeasurementMap::full_state(3));
    const double h = 1e-5;
    for (Index n = 0; n < t.size(); n += 20) {
        const Vec x = t.states.col(n);
        Mat fd(3, 3);
        for (int j = 0; j < 3; ++j) {
            Vec p = x, m = x;
            p(j) += h;
            m(j) -= h;
            fd.col(j) = (step(l63, p) - step(l63, m)) / (2 * h);
        }
        const Mat exact = jacobian(l63, x);
        CHECK((exact - fd).norm() / exact.norm() < 1e-4);
    }

    const SystemSpec rot = SystemSpec::l63rot();
    const Vec s = (Vec(4) << 1.0, 2.0, -3.0, 25.0).finished();
    const Mat j = jacobian(rot, s);
    CHECK(j(0, 0) == 1.0);
    CHECK(j.row(0).tail(3).norm() == 0.0);
    CHECK(j.col(0).tail(3).norm() == 0.0);
    CHECK((j.bottomRightCorner(3, 3) - jacobian(l63, s.tail(3))).norm() < 1e-14);
}

TEST_CASE("trajectories are deterministic")
{
    const SystemSpec spec = SystemSpec::lorenz63();
    const auto a = generate_trajectory(spec, default_initial_state(spec), 1000, MeasurementMap::full_state(3));
    const auto b = generate_trajectory(spec, default_initial_state(spec), 1000, MeasurementMap::full_state(3));
    CHECK((a.states - b.states).norm() == 0.0);
}

TEST_CASE("invalid specs are rejected")
{
    SystemSpec spec = SystemSpec::lorenz63();
    spec.dt = 0.0;
    CHECK_THROWS_AS(spec.validate(), InvalidArgument);
    spec = SystemSpec::lorenz63();
    spec.substeps = 0;
    CHECK_THROWS_AS(spec.validate(), InvalidArgument);
    CHECK_THROWS_AS(system_kind_from_string("henon"), InvalidArgument);
    CHECK(system_kind_from_string(to_string(SystemKind::l63rot)) == SystemKind::l63rot);
}
