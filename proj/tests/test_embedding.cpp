#include "doctest.h"

#include "dynrecon/embedding.hpp"

#include <cmath>
#include <random>

using namespace dynrecon;

namespace {

Vec random_vec(std::mt19937_64& rng, Index n, double scale = 1.0)
{
    std::uniform_real_distribution<double> u(-scale, scale);
    Vec v(n);
    for (Index i = 0; i < n; ++i) v(i) = u(rng);
    return v;
}

Mat torus_series(Index n)
{
    return generate_trajectory(SystemSpec::torus(), Vec::Constant(2, 0.3), n, MeasurementMap::trigonometric({0, 1}),
                               {-1, true})
        .measured;
}

}  // namespace

TEST_CASE("delay embedding unrolled")
{
    const Mat series = (Mat(1, 4) << 1, 2, 3, 4).finished();
    CHECK((delay_embed(series, 1).points - series).norm() == 0.0);

    const EmbeddedSeries e = delay_embed(series, 3);
    CHECK(e.washout == 2);
    CHECK(e.points.col(2) == Vec((Vec(3) << 3, 2, 1).finished()));
    CHECK(e.points.col(3) == Vec((Vec(3) << 4, 3, 2).finished()));
    CHECK_THROWS_AS(delay_embed(series, 5), InvalidArgument);
}

TEST_CASE("delay g shifts and inserts")
{
    CHECK(delay_g(Vec::Constant(1, 5.0), (Vec(3) << 3, 2, 1).finished()) == Vec((Vec(3) << 5, 3, 2).finished()));

    const Mat series = torus_series(50);
    const EmbeddedSeries e = delay_embed(series, 4);
    for (Index n = e.washout; n + 1 < e.size(); ++n)
        CHECK((delay_g(series.col(n + 1), e.points.col(n)) - e.points.col(n + 1)).norm() == 0.0);

    std::mt19937_64 rng(3);
    const Vec u = random_vec(rng, 2), u2 = random_vec(rng, 2), y = random_vec(rng, 6), y2 = random_vec(rng, 6);
    const double a = 0.7, b = -1.9;
    CHECK((delay_g(a * u + b * u2, a * y + b * y2) - a * delay_g(u, y) - b * delay_g(u2, y2)).norm() < 1e-14);

    const DelayEmbedder d(3, 2);
    CHECK((d.g_du() * u + d.g_dy() * y - d.g(u, y)).norm() < 1e-15);
}

TEST_CASE("delay embedding of a torus orbit is injective")
{
    const Mat series = generate_trajectory(SystemSpec::torus(), Vec::Zero(2), 1000, MeasurementMap::full_state(2)).measured;
    const EmbeddedSeries e = delay_embed(series, 5);
    double closest = INFINITY;
    for (Index i = e.washout; i < e.size(); ++i)
        for (Index j = i + 1; j < e.size(); ++j) closest = std::min(closest, (e.points.col(i) - e.points.col(j)).norm());
    CHECK(closest > 0.0);
}

TEST_CASE("reservoir initialization")
{
    const auto a = reservoir_init(200, 3, 0.9, 11);
    const auto b = reservoir_init(200, 3, 0.9, 11);
    CHECK((a.recurrence() - b.recurrence()).norm() == 0.0);
    CHECK((a.input() - b.input()).norm() == 0.0);
    Eigen::JacobiSVD<Mat> svd(a.recurrence());
    CHECK(std::abs(svd.singularValues()(0) - 0.9) < 1e-10);
    CHECK(a.input().colwise().norm().maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a.input().cwiseAbs().maxCoeff() <= 1.0);
    CHECK_THROWS_AS(reservoir_init(10, 1, 1.0, 1), InvalidArgument);

    std::mt19937_64 rng(5);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Vec u = random_vec(rng, 3, 3.0), y = random_vec(rng, 200);
        worst = std::max(worst, Eigen::JacobiSVD<Mat>(a.g_dy(u, y)).singularValues()(0));
    }
    CHECK(worst <= 0.9 + 1e-12);
}

TEST_CASE("reservoir map")
{
    const ReservoirEmbedder zero(Mat::Zero(5, 5), Mat::Zero(5, 2), 0.5);
    CHECK(reservoir_g(zero, Vec::Ones(2), Vec::Ones(5)).norm() == 0.0);

    const auto res = reservoir_init(50, 2, 0.9, 2);
    std::mt19937_64 rng(8);
    for (int i = 0; i < 1000; ++i) {
        const Vec u = random_vec(rng, 2, 5.0), y = random_vec(rng, 50, 2.0), y2 = random_vec(rng, 50, 2.0);
        const Vec out = res.g(u, y);
        CHECK(out.cwiseAbs().maxCoeff() < 1.0);
        CHECK((out - res.g(u, y2)).norm() <= 0.9 * (y - y2).norm() + 1e-15);
    }

    // analytic partial Jacobians against central differences
    const Vec u = random_vec(rng, 2), y = random_vec(rng, 50);
    const double h = 1e-6;
    Mat fd_u(50, 2), fd_y(50, 50);
    for (int j = 0; j < 2; ++j) {
        Vec p = u, m = u;
        p(j) += h;
        m(j) -= h;
        fd_u.col(j) = (res.g(p, y) - res.g(m, y)) / (2 * h);
    }
    for (int j = 0; j < 50; ++j) {
        Vec p = y, m = y;
        p(j) += h;
        m(j) -= h;
        fd_y.col(j) = (res.g(u, p) - res.g(u, m)) / (2 * h);
    }
    CHECK((res.g_du(u, y) - fd_u).norm() / fd_u.norm() < 1e-6);
    CHECK((res.g_dy(u, y) - fd_y).norm() / fd_y.norm() < 1e-6);
}

TEST_CASE("reservoir drive contracts")
{
    const auto res = reservoir_init(100, 4, 0.9, 4);
    const Mat series = torus_series(400);
    std::mt19937_64 rng(9);
    const Vec y0 = random_vec(rng, 100), y1 = random_vec(rng, 100);
    const EmbeddedSeries a = reservoir_drive(res, series, y0);
    const EmbeddedSeries b = reservoir_drive(res, series, y1);
    const double d0 = (y0 - y1).norm();
    for (Index n = 0; n < a.size(); ++n)
        CHECK((a.points.col(n) - b.points.col(n)).norm() <= std::pow(0.9, double(n)) * d0 * (1 + 1e-12) + 1e-15);
}

TEST_CASE("memoryless reservoir")
{
    std::mt19937_64 rng(1);
    Mat input(6, 4);
    for (Index j = 0; j < 4; ++j) input.col(j) = random_vec(rng, 6);
    const ReservoirEmbedder res(Mat::Zero(6, 6), input, 0.5);
    const Mat series = torus_series(20);
    const EmbeddedSeries a = reservoir_drive(res, series, random_vec(rng, 6));
    for (Index n = 0; n + 1 < a.size(); ++n)
        CHECK((a.points.col(n + 1) - (input * series.col(n)).array().tanh().matrix()).norm() < 1e-15);
}

TEST_CASE("echo state on the torus")
{
    const auto res = reservoir_init(200, 4, 0.9, 21);
    const Mat series = torus_series(2000);
    std::mt19937_64 rng(2);
    const EmbeddedSeries a = reservoir_drive(res, series, random_vec(rng, 200));
    const EmbeddedSeries b = reservoir_drive(res, series, random_vec(rng, 200));
    const Index w = res.washout();
    CHECK(w < a.size());
    CHECK((a.points.rightCols(a.size() - w) - b.points.rightCols(b.size() - w)).colwise().norm().maxCoeff() < 1e-8);
}

TEST_CASE("lift satisfies the semiconjugacy")
{
    const Mat series = torus_series(300);
    for (const Embedder& e : {Embedder(DelayEmbedder(3, 4)), Embedder(reservoir_init(40, 4, 0.8, 6))}) {
        const EmbeddedSeries s = lift(e, series);
        CHECK(s.washout < s.size());
        for (Index n = s.washout; n + 1 < s.size(); ++n)
            CHECK((s.points.col(n + 1) - apply_g(e, series.col(n), s.points.col(n))).norm() < 1e-14);
    }
    // the delay lift at n ends at measurement n - 1
    const EmbeddedSeries s = lift(DelayEmbedder(2, 4), series);
    CHECK((s.points.col(10).head(4) - series.col(9)).norm() == 0.0);
    CHECK((s.points.col(10).tail(4) - series.col(8)).norm() == 0.0);
}
