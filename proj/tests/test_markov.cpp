#include "doctest.h"

#include "dynrecon/markov.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace dynrecon;

namespace {

constexpr double two_pi = 2 * std::numbers::pi;

std::vector<Index> three_cycle(Index length)
{
    std::vector<Index> cells;
    for (Index n = 0; n < length; ++n) cells.push_back(n % 3);
    return cells;
}

Mat torus_angles(Index n, int coordinate)
{
    return generate_trajectory(SystemSpec::torus(), Vec::Constant(2, 0.1), n, MeasurementMap::full_state(2))
        .states.row(coordinate);
}

double overlap(double a0, double a1, double b0, double b1)
{
    // length of [a0, a1] intersect the periodic copies of [b0, b1]
    double total = 0.0;
    for (int shift = -1; shift <= 1; ++shift)
        total += std::max(0.0, std::min(a1, b1 + shift * two_pi) - std::max(a0, b0 + shift * two_pi));
    return total;
}

}  // namespace

TEST_CASE("uniform split of the unit interval")
{
    const Mat x = Vec::LinSpaced(1000, 0.0, 0.999).transpose();
    const BoxPartition b = BoxPartition::build(x, {4});
    const double width = (b.upper()(0) - b.lower()(0)) / 4;
    for (int k = 0; k <= 4; ++k) CHECK(std::abs(b.lower()(0) + k * width - 0.25 * k) < 0.011);
    const auto cells = b.assign(x);
    for (Index c : cells) CHECK((c >= 0 && c < 4));
    CHECK(b.cell_of(Vec::Constant(1, 0.1)) == 0);
    CHECK(b.cell_of(Vec::Constant(1, 0.9)) == 3);
    CHECK_THROWS_AS(b.cell_of(Vec::Constant(1, 1.5)), InvalidArgument);
    CHECK(!b.find_cell(Vec::Constant(1, -0.5)));
    CHECK_THROWS_AS(BoxPartition::build(x, {0}), InvalidArgument);
}

TEST_CASE("irrational rotation occupies every arc")
{
    const BoxPartition b = BoxPartition::build(torus_angles(10000, 0), {20}, {true});
    CHECK(b.occupied().size() == 20);
    CHECK(b.distance(Vec::Constant(1, 0.1), Vec::Constant(1, two_pi - 0.1)) == doctest::Approx(0.2));
}

TEST_CASE("deterministic 3-cycle")
{
    const TransitionMatrix t = transition_matrix(three_cycle(300), 3);
    const Mat p = Mat(t.p);
    Mat cycle = Mat::Zero(3, 3);
    cycle(1, 0) = cycle(2, 1) = cycle(0, 2) = 1.0;
    CHECK((p - cycle).norm() == 0.0);
    CHECK(t.stochasticity_error() < 1e-15);

    const StationaryDistribution s = stationary_distribution(t);
    CHECK((s.pi - Vec::Constant(3, 1.0 / 3)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(s.residual <= 1e-12);

    const MarkovPath path = simulate_markov(t, 1, 10, 42);
    for (std::size_t i = 0; i < path.cells.size(); ++i) CHECK(path.cells[i] == Index((1 + i) % 3));

    // law: each centroid goes to the next cell's centroid
    const Mat x = (Mat(1, 3) << 0.0, 1.0, 2.0).finished();
    const BoxPartition b = BoxPartition::build(x, {3});
    std::vector<Index> cells = b.assign(x.replicate(1, 50));
    const TransitionMatrix tt = transition_matrix(cells, 3);
    const LawTable law = reconstruct_law(tt, b);
    for (std::size_t i = 0; i < law.cells.size(); ++i) {
        const Index c = law.cells[i];
        CHECK((law.images.col(Index(i)) - b.centroid((c + 1) % 3)).norm() < 1e-12);
        CHECK(law.dispersion(Index(i)) < 1e-12);
    }
}

TEST_CASE("periodic chain needs the Cesaro average")
{
    // 0 -> 1 -> {0, 2} -> 1: period two, stationary (1/4, 1/2, 1/4)
    std::vector<Index> cells;
    for (int k = 0; k < 100; ++k) cells.insert(cells.end(), {0, 1, 2, 1});
    const TransitionMatrix t = transition_matrix(cells, 3);
    const StationaryDistribution s = stationary_distribution(t);
    CHECK(s.cesaro);
    // pi_0 = P(0|1) pi_1 and pi_2 = P(2|1) pi_1 for this chain
    const Mat p = Mat(t.p);
    Vec exact(3);
    exact << p(0, 1), 1.0, p(2, 1);
    exact /= exact.sum();
    CHECK((s.pi - exact).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((s.pi - Vec((Vec(3) << 0.25, 0.5, 0.25).finished())).cwiseAbs().maxCoeff() < 0.01);
    CHECK(s.residual <= 1e-11);
}

TEST_CASE("rotation on four arcs")
{
    const Mat theta = torus_angles(100000, 1);
    const double rho = SystemSpec::torus().rotation(1);
    const BoxPartition b = BoxPartition::build(theta, {4}, {true});
    const TransitionMatrix t = transition_matrix(theta, b);
    const Mat p = Mat(t.p);
    const double arc = two_pi / 4;
    for (Index j = 0; j < 4; ++j) {
        CHECK((p.col(j).array() > 0).count() <= 2);
        CHECK(t.column_sums(j) == doctest::Approx(1.0).epsilon(1e-12));
        for (Index i = 0; i < 4; ++i) {
            const double expected = overlap(i * arc, (i + 1) * arc, j * arc + rho, (j + 1) * arc + rho) / arc;
            CHECK(std::abs(p(i, j) - expected) <= 0.02);
        }
    }
}

TEST_CASE("stationary measure of the torus is uniform")
{
    const Mat theta = torus_angles(200000, 1);
    const BoxPartition b = BoxPartition::build(theta, {20}, {true});
    const TransitionMatrix t = transition_matrix(theta, b);
    const StationaryDistribution s = stationary_distribution(t);
    CHECK(total_variation(s.pi, Vec::Constant(20, 0.05)) <= 0.05);

    const MarkovPath path = simulate_markov(t, 0, 1000000, 9);
    CHECK(!path.absorbed);
    CHECK(total_variation(occupation_histogram(path.cells, 20), s.pi) <= 0.05);
    const MarkovPath again = simulate_markov(t, 0, 1000, 9);
    CHECK(std::equal(again.cells.begin(), again.cells.end(), path.cells.begin()));

    // projected image of each centroid lies within one cell of its rotation
    const LawTable law = reconstruct_law(t, b);
    for (std::size_t i = 0; i < law.cells.size(); ++i) {
        const Vec rotated = Vec::Constant(1, std::fmod(b.centroid(law.cells[i])(0) + SystemSpec::torus().rotation(1), two_pi));
        CHECK(b.distance(law.images.col(Index(i)), rotated) <= b.diameter());
    }
}

TEST_CASE("stationary measure of the lorenz63 z-coordinate")
{
    const SystemSpec spec = SystemSpec::lorenz63();
    const Mat z = generate_trajectory(spec, default_initial_state(spec), 200000, MeasurementMap::full_state(3)).states.row(2);
    const Mat other =
        generate_trajectory(spec, Vec((Vec(3) << -3.0, 2.0, 30.0).finished()), 200000, MeasurementMap::full_state(3))
            .states.row(2);
    const BoxPartition b = BoxPartition::build(z, {20});
    const TransitionMatrix t = transition_matrix(z, b);
    const StationaryDistribution s = stationary_distribution(t);
    CHECK(s.residual <= 1e-11);
    std::vector<Index> cells;
    for (Index n = 0; n < other.cols(); ++n)
        if (auto c = b.find_cell(other.col(n))) cells.push_back(*c);
    CHECK(total_variation(s.pi, occupation_histogram(cells, 20)) <= 0.05);
    CHECK(t.stochasticity_error() <= 1e-12);
}

TEST_CASE("indicator-basis Koopman matrix")
{
    const Mat theta = torus_angles(20000, 0);
    const BoxPartition b = BoxPartition::build(theta, {10}, {true});
    const auto cells = b.assign(theta);
    const TransitionMatrix direct = transition_matrix(cells, 10);
    const TransitionMatrix via = koopman_to_markov(koopman_indicator_matrix(cells, 10));
    CHECK((Mat(direct.p) - Mat(via.p)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(via.clipped_columns.empty());

    const std::vector<Index> still(100, 2);
    const TransitionMatrix identity = koopman_to_markov(koopman_indicator_matrix(still, 3));
    CHECK(Mat(identity.p)(2, 2) == 1.0);
    CHECK(identity.zero_columns.size() == 2);

    Mat u = Mat::Identity(2, 2);
    u(1, 0) = -0.5;
    const TransitionMatrix clipped = koopman_to_markov(u);
    CHECK(clipped.clipped_columns == std::vector<Index>{0});

    // identity dynamics: law maps centroids to themselves
    const Mat x = Vec::LinSpaced(30, 0.0, 3.0).transpose();
    const BoxPartition line = BoxPartition::build(x, {3});
    const TransitionMatrix diag = koopman_to_markov(Mat(Mat::Identity(3, 3)));
    const LawTable law = reconstruct_law(diag, line);
    CHECK(law.cells.size() == 3);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK((law.images.col(Index(i)) - line.centroid(law.cells[i])).norm() < 1e-9);

    CHECK(matrix_spectrum(koopman_indicator_matrix(three_cycle(30), 3)).size() == 3);
}

TEST_CASE("coordinate list round trip")
{
    const TransitionMatrix t = transition_matrix(three_cycle(40), 3);
    std::stringstream io;
    write_coo(io, t.p);
    const SparseMat back = read_coo(io);
    CHECK((Mat(back) - Mat(t.p)).norm() == 0.0);
    std::istringstream bad("2 2 1\n5 0 1.0\n");
    CHECK_THROWS_AS(read_coo(bad), InvalidArgument);
}

TEST_CASE("mixing diagnostics")
{
    const SystemSpec spec = SystemSpec::torus();
    Mat psi = torus_angles(20000, 0).array().cos().matrix();
    // mean-removed with the exact mean 0 of cos over the circle
    const MixingCurve m = mixing_diagnostic(psi, psi, 1000);
    double worst = 0.0;
    for (Index n = 0; n < 1000; ++n) worst = std::max(worst, std::abs(m.correlation(n) - 0.5 * std::cos(n * spec.rotation(0))));
    CHECK(worst < 1e-3);
    CHECK(m.correlation.tail(100).cwiseAbs().maxCoeff() > 0.4);  // no decay
    CHECK(std::abs(m.cesaro(999)) < 2e-3);
    CHECK(std::abs(m.cesaro(99)) * 100 < 1.2);

    const SystemSpec l63 = SystemSpec::lorenz63();
    const Mat x = generate_trajectory(l63, default_initial_state(l63), 300000, MeasurementMap::projection({2}), {-1, true})
                      .measured;
    CHECK(std::abs(mixing_diagnostic(x, x, 1000).cesaro(999)) <= 0.05);

    Mat constant = Mat::Zero(1, x.cols());
    CHECK(mixing_diagnostic(x, constant, 10).correlation.norm() == 0.0);
    CHECK_THROWS_AS(mixing_diagnostic(x.leftCols(10), x.leftCols(10), 6), InvalidArgument);
}
