#include "dynrecon/embedding.hpp"

#include <cmath>
#include <random>

namespace dynrecon {

DelayEmbedder::DelayEmbedder(int delays, int measurement_dim) : delays_(delays), dim_(measurement_dim)
{
    if (delays < 1) throw InvalidArgument("number of delays must be at least 1");
    if (measurement_dim < 1) throw InvalidArgument("measurement dimension must be at least 1");
}

EmbeddedSeries DelayEmbedder::embed(const Mat& measured) const
{
    if (measured.rows() != dim_) throw InvalidArgument("delay_embed: measurement dimension mismatch");
    if (measured.cols() < delays_) throw InvalidArgument("delay_embed: series shorter than the number of delays");
    EmbeddedSeries out;
    out.points = Mat::Zero(state_dim(), measured.cols());
    out.washout = delays_ - 1;
    for (Index n = 0; n < measured.cols(); ++n) {
        for (int q = 0; q < delays_ && q <= n; ++q) out.points.block(q * dim_, n, dim_, 1) = measured.col(n - q);
    }
    return out;
}

Vec DelayEmbedder::g(const Vec& u, const Vec& y) const
{
    if (u.size() != dim_ || y.size() != state_dim()) throw InvalidArgument("delay g: dimension mismatch");
    Vec out(state_dim());
    out.head(dim_) = u;
    out.tail(state_dim() - dim_) = y.head(state_dim() - dim_);
    return out;
}

Mat DelayEmbedder::g_du() const
{
    Mat j = Mat::Zero(state_dim(), dim_);
    j.topRows(dim_).setIdentity();
    return j;
}

Mat DelayEmbedder::g_dy() const
{
    const int l = state_dim();
    Mat j = Mat::Zero(l, l);
    j.bottomLeftCorner(l - dim_, l - dim_).setIdentity();
    return j;
}

EmbeddedSeries delay_embed(const Mat& measured, int delays)
{
    return DelayEmbedder(delays, static_cast<int>(measured.rows())).embed(measured);
}

Vec delay_g(const Vec& u, const Vec& y)
{
    if (u.size() == 0 || y.size() % u.size() != 0) throw InvalidArgument("delay g: dimension mismatch");
    return DelayEmbedder(static_cast<int>(y.size() / u.size()), static_cast<int>(u.size())).g(u, y);
}

ReservoirEmbedder::ReservoirEmbedder(Mat recurrence, Mat input, double contraction)
    : recurrence_(std::move(recurrence)), input_(std::move(input)), contraction_(contraction)
{
    if (!(contraction_ > 0.0 && contraction_ < 1.0)) throw InvalidArgument("contraction factor must lie in (0, 1)");
    if (recurrence_.rows() != recurrence_.cols() || recurrence_.rows() < 1)
        throw InvalidArgument("reservoir recurrence matrix must be square and non-empty");
    if (input_.rows() != recurrence_.rows() || input_.cols() < 1)
        throw InvalidArgument("reservoir input matrix has the wrong shape");
}

ReservoirEmbedder ReservoirEmbedder::random(int nodes, int input_dim, double contraction, std::uint64_t seed)
{
    if (!(contraction > 0.0 && contraction < 1.0)) throw InvalidArgument("contraction factor must lie in (0, 1)");
    if (nodes < 1 || input_dim < 1) throw InvalidArgument("reservoir sizes must be positive");

    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);

    Mat w(nodes, nodes);
    for (Index j = 0; j < w.cols(); ++j)
        for (Index i = 0; i < w.rows(); ++i) w(i, j) = normal(gen);
    const double norm = Eigen::JacobiSVD<Mat>(w).singularValues()(0);
    w *= contraction / norm;

    Mat b(nodes, input_dim);
    for (Index j = 0; j < b.cols(); ++j)
        for (Index i = 0; i < b.rows(); ++i) b(i, j) = uniform(gen);
    for (Index j = 0; j < b.cols(); ++j) b.col(j).normalize();

    return ReservoirEmbedder(std::move(w), std::move(b), contraction);
}

Vec ReservoirEmbedder::g(const Vec& u, const Vec& y) const
{
    if (u.size() != input_dim() || y.size() != state_dim()) throw InvalidArgument("reservoir g: dimension mismatch");
    return (recurrence_ * y + input_ * u).array().tanh().matrix();
}

Mat ReservoirEmbedder::g_du(const Vec& u, const Vec& y) const
{
    const Vec s = g(u, y);
    const Vec slope = (1.0 - s.array().square()).matrix();
    return slope.asDiagonal() * input_;
}

Mat ReservoirEmbedder::g_dy(const Vec& u, const Vec& y) const
{
    const Vec s = g(u, y);
    const Vec slope = (1.0 - s.array().square()).matrix();
    return slope.asDiagonal() * recurrence_;
}

double ReservoirEmbedder::input_gain() const
{
    return input_.colwise().norm().maxCoeff();
}

Index ReservoirEmbedder::washout() const
{
    return static_cast<Index>(std::ceil(std::log(1e-10) / std::log(contraction_)));
}

EmbeddedSeries ReservoirEmbedder::drive(const Mat& measured, const Vec& initial) const
{
    if (measured.rows() != input_dim()) throw InvalidArgument("reservoir drive: measurement dimension mismatch");
    if (initial.size() != state_dim()) throw InvalidArgument("reservoir drive: initial state dimension mismatch");
    EmbeddedSeries out;
    out.points.resize(state_dim(), measured.cols());
    out.washout = washout();
    if (measured.cols() == 0) return out;
    out.points.col(0) = initial;
    for (Index n = 0; n + 1 < measured.cols(); ++n) out.points.col(n + 1) = g(measured.col(n), out.points.col(n));
    return out;
}

ReservoirEmbedder reservoir_init(int nodes, int input_dim, double contraction, std::uint64_t seed)
{
    return ReservoirEmbedder::random(nodes, input_dim, contraction, seed);
}

Vec reservoir_g(const ReservoirEmbedder& emb, const Vec& u, const Vec& y)
{
    return emb.g(u, y);
}

EmbeddedSeries reservoir_drive(const ReservoirEmbedder& emb, const Mat& measured, const Vec& initial)
{
    return emb.drive(measured, initial);
}

namespace {
template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
}  // namespace

int state_dim(const Embedder& e)
{
    return std::visit([](const auto& x) { return x.state_dim(); }, e);
}

int input_dim(const Embedder& e)
{
    return std::visit([](const auto& x) { return x.input_dim(); }, e);
}

Vec apply_g(const Embedder& e, const Vec& u, const Vec& y)
{
    return std::visit([&](const auto& x) { return x.g(u, y); }, e);
}

Mat g_du(const Embedder& e, const Vec& u, const Vec& y)
{
    return std::visit(overloaded{[](const DelayEmbedder& d) { return d.g_du(); },
                                 [&](const ReservoirEmbedder& r) { return r.g_du(u, y); }},
                      e);
}

Mat g_dy(const Embedder& e, const Vec& u, const Vec& y)
{
    return std::visit(overloaded{[](const DelayEmbedder& d) { return d.g_dy(); },
                                 [&](const ReservoirEmbedder& r) { return r.g_dy(u, y); }},
                      e);
}

EmbeddedSeries lift(const Embedder& e, const Mat& measured, const Vec& reservoir_initial)
{
    return std::visit(
        overloaded{[&](const DelayEmbedder& d) {
                       EmbeddedSeries shifted = d.embed(measured);
                       EmbeddedSeries out;
                       out.points = Mat::Zero(d.state_dim(), measured.cols());
                       out.points.rightCols(measured.cols() - 1) = shifted.points.leftCols(measured.cols() - 1);
                       out.washout = d.delays();
                       return out;
                   },
                   [&](const ReservoirEmbedder& r) {
                       const Vec init =
                           reservoir_initial.size() == 0 ? Vec(Vec::Zero(r.state_dim())) : reservoir_initial;
                       return r.drive(measured, init);
                   }},
        e);
}

}  // namespace dynrecon
