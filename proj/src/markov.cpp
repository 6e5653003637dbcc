#include "dynrecon/markov.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>

namespace dynrecon {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double circular_diff(double a, double b)
{
    double d = std::fmod(a - b, two_pi);
    if (d > std::numbers::pi) d -= two_pi;
    if (d < -std::numbers::pi) d += two_pi;
    return d;
}

}  // namespace

BoxPartition BoxPartition::build(const Mat& points, std::vector<int> resolution, std::vector<bool> periodic)
{
    if (points.cols() == 0) throw InvalidArgument("cannot partition an empty trajectory");
    if (static_cast<Index>(resolution.size()) != points.rows())
        throw InvalidArgument("one resolution per coordinate required");
    for (int r : resolution)
        if (r < 2) throw InvalidArgument("resolution must be at least 2 per coordinate");
    if (periodic.empty()) periodic.assign(resolution.size(), false);
    if (periodic.size() != resolution.size()) throw InvalidArgument("one periodic flag per coordinate required");

    BoxPartition b;
    b.resolution_ = std::move(resolution);
    b.periodic_ = std::move(periodic);
    const Index k = points.rows();
    b.lower_.resize(k);
    b.upper_.resize(k);
    for (Index i = 0; i < k; ++i) {
        if (b.periodic_[static_cast<std::size_t>(i)]) {
            b.lower_(i) = 0.0;
            b.upper_(i) = two_pi;
            continue;
        }
        const double lo = points.row(i).minCoeff();
        const double hi = points.row(i).maxCoeff();
        const double pad = 0.01 * std::max(hi - lo, 1e-12);
        b.lower_(i) = lo - pad;
        b.upper_(i) = hi + pad;
    }
    b.cells_ = 1;
    for (int r : b.resolution_) b.cells_ *= r;

    std::vector<char> seen(static_cast<std::size_t>(b.cells_), 0);
    for (Index c : b.assign(points)) seen[static_cast<std::size_t>(c)] = 1;
    for (Index c = 0; c < b.cells_; ++c)
        if (seen[static_cast<std::size_t>(c)]) b.occupied_.push_back(c);
    return b;
}

Index BoxPartition::cell_of(const Vec& x) const
{
    if (x.size() != dim()) throw InvalidArgument("point dimension differs from the partition");
    Index index = 0;
    for (int i = 0; i < dim(); ++i) {
        double v = x(i);
        if (periodic_[static_cast<std::size_t>(i)]) {
            v = std::fmod(v, two_pi);
            if (v < 0) v += two_pi;
        } else if (v < lower_(i) || v >= upper_(i)) {
            throw InvalidArgument("point outside the partition box");
        }
        const int r = resolution_[static_cast<std::size_t>(i)];
        const int bin = std::min(r - 1, static_cast<int>((v - lower_(i)) / (upper_(i) - lower_(i)) * r));
        index = index * r + bin;
    }
    return index;
}

std::optional<Index> BoxPartition::find_cell(const Vec& x) const
{
    if (x.size() != dim()) throw InvalidArgument("point dimension differs from the partition");
    for (int i = 0; i < dim(); ++i)
        if (!periodic_[static_cast<std::size_t>(i)] && (x(i) < lower_(i) || x(i) >= upper_(i))) return std::nullopt;
    return cell_of(x);
}

std::vector<Index> BoxPartition::assign(const Mat& points) const
{
    std::vector<Index> cells(static_cast<std::size_t>(points.cols()));
    for (Index t = 0; t < points.cols(); ++t) cells[static_cast<std::size_t>(t)] = cell_of(points.col(t));
    return cells;
}

Vec BoxPartition::centroid(Index cell) const
{
    if (cell < 0 || cell >= cells_) throw InvalidArgument("cell index out of range");
    Vec c(dim());
    for (int i = dim() - 1; i >= 0; --i) {
        const int r = resolution_[static_cast<std::size_t>(i)];
        const Index bin = cell % r;
        cell /= r;
        c(i) = lower_(i) + (static_cast<double>(bin) + 0.5) * (upper_(i) - lower_(i)) / r;
    }
    return c;
}

Mat BoxPartition::centroids() const
{
    Mat c(dim(), cells_);
    for (Index j = 0; j < cells_; ++j) c.col(j) = centroid(j);
    return c;
}

double BoxPartition::diameter() const
{
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) {
        const double w = (upper_(i) - lower_(i)) / resolution_[static_cast<std::size_t>(i)];
        s += w * w;
    }
    return std::sqrt(s);
}

double BoxPartition::distance(const Vec& a, const Vec& b) const
{
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) {
        const double d = periodic_[static_cast<std::size_t>(i)] ? circular_diff(a(i), b(i)) : a(i) - b(i);
        s += d * d;
    }
    return std::sqrt(s);
}

double TransitionMatrix::stochasticity_error() const
{
    double worst = 0.0;
    for (Index j = 0; j < size(); ++j)
        if (samples[static_cast<std::size_t>(j)] > 0) worst = std::max(worst, std::abs(column_sums(j) - 1.0));
    return worst;
}

namespace {

// Column-normalizes a count matrix and fills the bookkeeping fields.
TransitionMatrix normalize_counts(SparseMat counts, std::vector<Index> samples)
{
    TransitionMatrix t;
    const Index m = counts.cols();
    Vec totals = Vec::Zero(m);
    for (Index j = 0; j < m; ++j)
        for (SparseMat::InnerIterator it(counts, j); it; ++it) totals(j) += it.value();
    for (Index j = 0; j < m; ++j)
        for (SparseMat::InnerIterator it(counts, j); it; ++it) it.valueRef() /= totals(j);
    t.p = std::move(counts);
    t.column_sums = Vec::Zero(m);
    for (Index j = 0; j < m; ++j) {
        for (SparseMat::InnerIterator it(t.p, j); it; ++it) t.column_sums(j) += it.value();
        if (samples[static_cast<std::size_t>(j)] == 0) t.zero_columns.push_back(j);
    }
    t.samples = std::move(samples);
    return t;
}

SparseMat pair_counts(const std::vector<Index>& cells, Index m, std::vector<Index>& samples)
{
    if (cells.size() < 2) throw InvalidArgument("transition counts need at least two points");
    if (m < 1) throw InvalidArgument("cell count must be positive");
    samples.assign(static_cast<std::size_t>(m), 0);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(cells.size());
    for (std::size_t t = 0; t + 1 < cells.size(); ++t) {
        const Index from = cells[t];
        const Index to = cells[t + 1];
        if (from < 0 || from >= m || to < 0 || to >= m) throw InvalidArgument("cell index out of range");
        triplets.emplace_back(to, from, 1.0);
        ++samples[static_cast<std::size_t>(from)];
    }
    SparseMat counts(m, m);
    counts.setFromTriplets(triplets.begin(), triplets.end());  // duplicates are summed
    counts.makeCompressed();
    return counts;
}

}  // namespace

TransitionMatrix transition_matrix(const std::vector<Index>& cells, Index m)
{
    std::vector<Index> samples;
    SparseMat counts = pair_counts(cells, m, samples);
    return normalize_counts(std::move(counts), std::move(samples));
}

TransitionMatrix transition_matrix(const Mat& points, const BoxPartition& partition)
{
    return transition_matrix(partition.assign(points), partition.cells());
}

StationaryDistribution stationary_distribution(const TransitionMatrix& t, double tol, Index max_iters)
{
    const Index m = t.size();
    std::vector<Index> active;
    for (Index j = 0; j < m; ++j)
        if (t.samples[static_cast<std::size_t>(j)] > 0) active.push_back(j);
    if (active.empty()) throw InvalidArgument("transition matrix has no sampled columns");
    const Index k = static_cast<Index>(active.size());
    std::vector<Index> local(static_cast<std::size_t>(m), -1);
    for (Index i = 0; i < k; ++i) local[static_cast<std::size_t>(active[static_cast<std::size_t>(i)])] = i;

    // restriction to the sampled cells; mass leaving them is renormalized away
    std::vector<Eigen::Triplet<double>> triplets;
    for (Index j = 0; j < k; ++j) {
        const Index col = active[static_cast<std::size_t>(j)];
        double kept = 0.0;
        for (SparseMat::InnerIterator it(t.p, col); it; ++it)
            if (local[static_cast<std::size_t>(it.row())] >= 0) kept += it.value();
        for (SparseMat::InnerIterator it(t.p, col); it; ++it) {
            const Index row = local[static_cast<std::size_t>(it.row())];
            if (row >= 0) triplets.emplace_back(row, j, it.value() / kept);
        }
    }
    SparseMat p(k, k);
    p.setFromTriplets(triplets.begin(), triplets.end());

    auto residual = [&](const Vec& v) { return (p * v - v).lpNorm<1>(); };
    StationaryDistribution out;
    Vec pi = Vec::Constant(k, 1.0 / static_cast<double>(k));
    Vec average = Vec::Zero(k);
    double r = residual(pi);
    Index it = 0;
    while (r > tol && it < max_iters) {
        average += pi;
        pi = p * pi;
        pi /= pi.sum();
        ++it;
        r = residual(pi);
    }
    out.iterations = it;
    out.converged = r <= tol;
    if (!out.converged) {
        out.cesaro = true;
        pi = average / average.sum();
        r = residual(pi);
        if (r > 10.0 * tol) {
            // null vector of P - I with the normalization row appended
            Mat a(k + 1, k);
            a.topRows(k) = Mat(p) - Mat::Identity(k, k);
            a.row(k).setOnes();
            Vec rhs = Vec::Zero(k + 1);
            rhs(k) = 1.0;
            Vec solved = a.colPivHouseholderQr().solve(rhs);
            solved = solved.cwiseMax(0.0);
            solved /= solved.sum();
            out.solved = true;
            pi = solved;
            r = residual(pi);
        }
    }
    out.residual = r;
    out.pi = Vec::Zero(m);
    for (Index i = 0; i < k; ++i) out.pi(active[static_cast<std::size_t>(i)]) = pi(i);
    return out;
}

MarkovPath simulate_markov(const TransitionMatrix& t, Index start, Index steps, std::uint64_t seed)
{
    const Index m = t.size();
    if (start < 0 || start >= m) throw InvalidArgument("start cell out of range");
    if (steps < 0) throw InvalidArgument("negative path length");

    // cumulative laws per column
    std::vector<std::vector<std::pair<double, Index>>> cdf(static_cast<std::size_t>(m));
    for (Index j = 0; j < m; ++j) {
        double acc = 0.0;
        for (SparseMat::InnerIterator it(t.p, j); it; ++it) {
            if (it.value() <= 0.0) continue;
            acc += it.value();
            cdf[static_cast<std::size_t>(j)].emplace_back(acc, it.row());
        }
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    MarkovPath path;
    path.cells.reserve(static_cast<std::size_t>(steps) + 1);
    Index cell = start;
    path.cells.push_back(cell);
    for (Index n = 0; n < steps; ++n) {
        const auto& law = cdf[static_cast<std::size_t>(cell)];
        if (law.empty()) {
            path.absorbed = true;
            break;
        }
        const double u = unif(rng) * law.back().first;
        auto pos = std::lower_bound(law.begin(), law.end(), u,
                                    [](const std::pair<double, Index>& e, double v) { return e.first < v; });
        if (pos == law.end()) --pos;
        cell = pos->second;
        path.cells.push_back(cell);
    }
    return path;
}

SparseMat koopman_indicator_matrix(const std::vector<Index>& cells, Index m)
{
    std::vector<Index> samples;
    SparseMat u = pair_counts(cells, m, samples);
    u /= static_cast<double>(cells.size() - 1);
    return u;
}

TransitionMatrix koopman_to_markov(const SparseMat& u)
{
    if (u.rows() != u.cols()) throw InvalidArgument("indicator matrix must be square");
    const Index m = u.cols();
    std::vector<Eigen::Triplet<double>> kept;
    std::vector<Index> samples(static_cast<std::size_t>(m), 0);
    std::vector<Index> clipped;
    for (Index j = 0; j < m; ++j) {
        double positive = 0.0, negative = 0.0;
        for (SparseMat::InnerIterator it(u, j); it; ++it) {
            if (it.value() > 0.0) {
                positive += it.value();
                kept.emplace_back(it.row(), j, it.value());
            } else {
                negative -= it.value();
            }
        }
        if (positive > 0.0) samples[static_cast<std::size_t>(j)] = 1;
        if (negative > 0.01 * (positive + negative)) clipped.push_back(j);
    }
    SparseMat p(m, m);
    p.setFromTriplets(kept.begin(), kept.end());
    p.makeCompressed();
    TransitionMatrix t = normalize_counts(std::move(p), std::move(samples));
    t.clipped_columns = std::move(clipped);
    return t;
}

TransitionMatrix koopman_to_markov(const Mat& u)
{
    return koopman_to_markov(SparseMat(u.sparseView(0.0, 0.0)));
}

std::vector<std::complex<double>> matrix_spectrum(const SparseMat& u)
{
    Eigen::EigenSolver<Mat> es(Mat(u), false);
    std::vector<std::complex<double>> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(ev.begin(), ev.end(), [](auto a, auto b) { return std::abs(a) > std::abs(b); });
    return ev;
}

LawTable reconstruct_law(const TransitionMatrix& t, const BoxPartition& partition)
{
    if (t.size() != partition.cells()) throw InvalidArgument("matrix size differs from the partition");
    const int k = partition.dim();
    const Mat centers = partition.centroids();
    LawTable table;
    std::vector<Vec> images;
    std::vector<double> spread;
    for (Index j = 0; j < t.size(); ++j) {
        if (t.samples[static_cast<std::size_t>(j)] == 0) continue;
        Vec image = Vec::Zero(k);
        Vec s = Vec::Zero(k), c = Vec::Zero(k);
        for (SparseMat::InnerIterator it(t.p, j); it; ++it) {
            const auto x = centers.col(it.row());
            for (int i = 0; i < k; ++i) {
                if (partition.periodic()[static_cast<std::size_t>(i)]) {
                    s(i) += it.value() * std::sin(x(i));
                    c(i) += it.value() * std::cos(x(i));
                } else {
                    image(i) += it.value() * x(i);
                }
            }
        }
        for (int i = 0; i < k; ++i) {
            if (!partition.periodic()[static_cast<std::size_t>(i)]) continue;
            double a = std::atan2(s(i), c(i));
            if (a < 0) a += two_pi;
            image(i) = a;
        }
        double var = 0.0;
        for (SparseMat::InnerIterator it(t.p, j); it; ++it) {
            const double d = partition.distance(centers.col(it.row()), image);
            var += it.value() * d * d;
        }
        table.cells.push_back(j);
        images.push_back(image);
        spread.push_back(std::sqrt(var));
    }
    table.images.resize(k, static_cast<Index>(images.size()));
    table.dispersion.resize(static_cast<Index>(spread.size()));
    for (std::size_t i = 0; i < images.size(); ++i) {
        table.images.col(static_cast<Index>(i)) = images[i];
        table.dispersion(static_cast<Index>(i)) = spread[i];
    }
    return table;
}

Vec occupation_histogram(const std::vector<Index>& cells, Index m)
{
    if (cells.empty()) throw InvalidArgument("empty cell sequence");
    Vec h = Vec::Zero(m);
    for (Index c : cells) {
        if (c < 0 || c >= m) throw InvalidArgument("cell index out of range");
        h(c) += 1.0;
    }
    return h / static_cast<double>(cells.size());
}

double total_variation(const Vec& p, const Vec& q)
{
    if (p.size() != q.size()) throw InvalidArgument("distributions differ in size");
    return 0.5 * (p - q).lpNorm<1>();
}

MixingCurve mixing_diagnostic(const Mat& psi, const Mat& chi, Index n)
{
    if (psi.rows() != chi.rows() || psi.cols() != chi.cols()) throw InvalidArgument("series differ in shape");
    if (n < 1) throw InvalidArgument("mixing diagnostic needs N >= 1");
    const Index len = psi.cols();
    if (len < 2 * n) throw InvalidArgument("series shorter than 2 N");
    MixingCurve out;
    out.correlation.resize(n);
    out.cesaro.resize(n);
    double running = 0.0;
    for (Index lag = 0; lag < n; ++lag) {
        const Index count = len - lag;
        const double acc =
            (psi.middleCols(lag, count).array() * chi.leftCols(count).array()).sum() / static_cast<double>(count);
        out.correlation(lag) = acc;
        running += acc;
        out.cesaro(lag) = running / static_cast<double>(lag + 1);
    }
    return out;
}

void write_coo(std::ostream& out, const SparseMat& m)
{
    out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
    out << std::setprecision(17);
    for (Index j = 0; j < m.outerSize(); ++j)
        for (SparseMat::InnerIterator it(m, j); it; ++it) out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

SparseMat read_coo(std::istream& in)
{
    Index rows = 0, cols = 0, nnz = 0;
    if (!(in >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0)
        throw InvalidArgument("malformed coordinate-list header");
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(nnz));
    for (Index e = 0; e < nnz; ++e) {
        Index r = 0, c = 0;
        double v = 0;
        if (!(in >> r >> c >> v)) throw InvalidArgument("coordinate list ended early");
        if (r < 0 || r >= rows || c < 0 || c >= cols) throw InvalidArgument("coordinate-list entry out of range");
        triplets.emplace_back(r, c, v);
    }
    SparseMat m(rows, cols);
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    return m;
}

}  // namespace dynrecon
