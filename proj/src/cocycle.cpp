#include "dynrecon/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dynrecon {

CocycleGenerator constant_generator(Mat g)
{
    if (g.rows() != g.cols() || g.rows() == 0) throw InvalidArgument("cocycle generator must be square");
    const int dim = static_cast<int>(g.rows());
    return {dim, [m = std::move(g)](Index) { return m; }};
}

CocycleGenerator jacobian_generator(const SystemSpec& spec, Mat orbit)
{
    if (orbit.rows() != spec.state_dim()) throw InvalidArgument("orbit dimension does not match the system");
    return {spec.state_dim(), [spec, o = std::move(orbit)](Index n) {
                if (n < 0 || n >= o.cols()) throw InvalidArgument("orbit index out of range");
                return jacobian(spec, o.col(n));
            }};
}

Mat cocycle_product(const CocycleGenerator& g, Index start, Index n)
{
    if (n < 0) throw InvalidArgument("cocycle_product: negative length");
    Mat p = Mat::Identity(g.dim, g.dim);
    for (Index i = 0; i < n; ++i) p = g.at(start + i) * p;
    return p;
}

namespace {

// Advances the frame by one matrix and returns log |R_ii|.
Vec qr_step(const Mat& a, Mat& frame)
{
    const Mat moved = a * frame;
    Eigen::HouseholderQR<Mat> qr(moved);
    const Index p = frame.cols();
    const Mat r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
    Mat q = qr.householderQ() * Mat::Identity(moved.rows(), p);
    Vec logs(p);
    for (Index i = 0; i < p; ++i) {
        const double rii = r(i, i);
        if (rii == 0.0 || !std::isfinite(rii)) throw NumericalError("degenerate Lyapunov frame: singular cocycle");
        if (rii < 0.0) q.col(i) = -q.col(i);
        logs(i) = std::log(std::abs(rii));
    }
    frame = std::move(q);
    return logs;
}

template <class NextMatrix>
LyapunovEstimate run_qr(int dim, Index steps, int p, double dt, Index warmup, NextMatrix&& next)
{
    if (warmup < 0) throw InvalidArgument("warmup must be non-negative");
    if (steps < 1000) throw InvalidArgument("Lyapunov estimation needs at least 1000 steps");
    if (p < 1 || p > dim) throw InvalidArgument("number of exponents must be in [1, dim]");
    if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");

    Mat frame = Mat::Identity(dim, p);
    Vec sums = Vec::Zero(p);
    LyapunovEstimate est;
    est.dt = dt;
    est.steps = steps;
    const Index every = std::max<Index>(1, steps / 100);
    std::vector<Vec> trace;
    for (Index n = 0; n < warmup; ++n) qr_step(next(n), frame);
    for (Index n = 0; n < steps; ++n) {
        sums += qr_step(next(warmup + n), frame);
        if ((n + 1) % every == 0) {
            est.trace_steps.push_back(n + 1);
            trace.push_back(sums / (static_cast<double>(n + 1) * dt));
        }
    }
    est.trace.resize(p, static_cast<Index>(trace.size()));
    for (std::size_t i = 0; i < trace.size(); ++i) est.trace.col(static_cast<Index>(i)) = trace[i];

    est.per_step = sums / static_cast<double>(steps);
    std::sort(est.per_step.data(), est.per_step.data() + p, std::greater<>());
    est.per_time = est.per_step / dt;
    return est;
}

}  // namespace

LyapunovEstimate lyapunov_spectrum(const CocycleGenerator& g, Index start, Index steps, int p, double dt,
                                   Index warmup)
{
    return run_qr(g.dim, steps, p, dt, warmup, [&](Index n) { return g.at(start + n); });
}

LyapunovEstimate system_lyapunov(const SystemSpec& spec, const Vec& initial, Index steps, int p)
{
    Vec state = initial;
    return run_qr(spec.state_dim(), steps, p, spec.dt, 0, [&](Index) {
        auto [next, jac] = step_with_jacobian(spec, state);
        state = std::move(next);
        return jac;
    });
}

Mat CocycleBundle::assembled(Index n, bool use_true) const
{
    if (n < 0 || n >= size()) throw InvalidArgument("bundle index out of range");
    if (use_true && !w) throw InvalidArgument("bundle has no true feedback Jacobian");
    Mat m = Mat::Zero(d + l, d + l);
    m.topRightCorner(d, l) = use_true ? (*w)[static_cast<std::size_t>(n)] : w_hat[static_cast<std::size_t>(n)];
    m.bottomLeftCorner(l, d) = g1[static_cast<std::size_t>(n)];
    m.bottomRightCorner(l, l) = g2[static_cast<std::size_t>(n)];
    return m;
}

CocycleBundle build_bundle(const ReconstructedMap& map, const ForecastData& data, Index start, Index count,
                           const FeedbackJacobian& true_feedback)
{
    if (start < 1 || count < 1 || start + count > data.measured.cols())
        throw InvalidArgument("bundle range outside the orbit");
    const auto& model = map.model();
    const auto& emb = map.embedder();

    CocycleBundle b;
    b.d = map.measurement_dim();
    b.l = map.embedding_dim();
    b.start = start;
    if (true_feedback) b.w.emplace();

    // Delta phi(omega_{n-1}) = phi(omega_n) - w_hat(Phi(omega_{n-1}))
    auto residual_before = [&](Index n) {
        return Vec(data.measured.col(n) - predict(model, data.lifted.col(n - 1)));
    };
    b.initial_a = -residual_before(start);

    for (Index i = 0; i < count; ++i) {
        const Index n = start + i;
        const Vec u = data.measured.col(n);
        const Vec y = data.lifted.col(n);
        b.w_hat.push_back(predict_jacobian(model, y));
        b.g1.push_back(g_du(emb, u, y));
        b.g2.push_back(g_dy(emb, u, y));
        if (true_feedback) b.w->push_back(true_feedback(y));
        Vec c = Vec::Zero(b.d + b.l);
        c.tail(b.l) = b.g1.back() * residual_before(n);
        b.c.push_back(std::move(c));
    }
    return b;
}

PerturbedSeries perturbed_iterate(const CocycleBundle& bundle, Index n_max)
{
    if (n_max < 0 || n_max > bundle.size()) throw InvalidArgument("bundle does not cover n_max steps");
    PerturbedSeries s;
    s.a = Mat::Zero(bundle.d, n_max + 1);
    s.b = Mat::Zero(bundle.l, n_max + 1);
    s.a.col(0) = bundle.initial_a;
    Vec z(bundle.d + bundle.l);
    z << bundle.initial_a, Vec::Zero(bundle.l);
    for (Index n = 0; n < n_max; ++n) {
        z = bundle.assembled(n) * z + bundle.c[static_cast<std::size_t>(n)];
        if (!z.allFinite()) {
            s.divergence = n + 1;
            break;
        }
        s.a.col(n + 1) = z.head(bundle.d);
        s.b.col(n + 1) = z.tail(bundle.l);
    }
    return s;
}

Vec limiting_iterate(const CocycleBundle& bundle, const Vec& z0, Index n, bool use_true)
{
    if (z0.size() != bundle.d + bundle.l) throw InvalidArgument("limiting_iterate: dimension mismatch");
    if (n < 0 || n > bundle.size()) throw InvalidArgument("bundle does not cover the requested steps");
    Vec z = z0;
    for (Index i = 0; i < n; ++i) z = bundle.assembled(i, use_true) * z;
    return z;
}

Vec FluctuationSeries::ratio() const
{
    Vec r(du.cols());
    for (Index n = 0; n < du.cols(); ++n) {
        const double num = du.col(n).norm();
        const double den = a.col(n).norm();
        if (num == 0.0 && den == 0.0)
            r(n) = 1.0;
        else
            r(n) = den == 0.0 ? std::numeric_limits<double>::infinity() : num / den;
    }
    return r;
}

FluctuationSeries fluctuations(const ReconstructedMap& map, const ForecastData& data, Index start, Index n_max)
{
    if (start < 1 || start + n_max >= data.measured.cols()) throw InvalidArgument("fluctuation range outside the orbit");
    const Rollout r = iterate_reconstructed(map, data.measured.col(start), data.lifted.col(start), n_max);
    FluctuationSeries f;
    f.divergence = r.divergence;
    const Index valid = r.divergence.value_or(n_max + 1);
    f.du = Mat::Zero(map.measurement_dim(), n_max + 1);
    f.dy = Mat::Zero(map.embedding_dim(), n_max + 1);
    for (Index n = 0; n < valid; ++n) {
        // reference (U^{n-1} pi U phi, U^n Phi) sampled along the true orbit
        f.du.col(n) = predict(map.model(), data.lifted.col(start + n - 1)) - r.u.col(n);
        f.dy.col(n) = data.lifted.col(start + n) - r.y.col(n);
    }
    const CocycleBundle bundle = build_bundle(map, data, start, std::max<Index>(n_max, 1));
    PerturbedSeries p = perturbed_iterate(bundle, n_max);
    f.a = std::move(p.a);
    f.b = std::move(p.b);
    if (p.divergence && (!f.divergence || *p.divergence < *f.divergence)) f.divergence = p.divergence;
    return f;
}

StabilityGap stability_gap(const ReconstructedMap& map, const SystemSpec& spec, const Mat& states,
                           const ForecastData& data, Index start, Index steps, Index warmup)
{
    if (states.cols() != data.measured.cols()) throw InvalidArgument("states and measurements differ in length");
    if (start < 0 || warmup < 0 || start + warmup + steps > states.cols()) throw InvalidArgument("stability gap range outside the orbit");

    StabilityGap out;
    const CocycleGenerator system = jacobian_generator(spec, states);
    out.original = lyapunov_spectrum(system, start, steps, spec.state_dim(), spec.dt, warmup);

    const CocycleGenerator recon{map.state_dim(), [&](Index n) {
                                     return map.jacobian(data.measured.col(n), data.lifted.col(n));
                                 }};
    for (int p = map.state_dim(); p >= 1; --p) {
        try {
            out.reconstructed = lyapunov_spectrum(recon, start, steps, p, spec.dt, warmup);
            break;
        } catch (const NumericalError&) {
            if (p == 1) throw;
        }
    }
    out.gap = out.reconstructed.per_time(0) - out.original.per_time(0);
    out.containment = 0.0;
    for (Index i = 0; i < out.original.per_time.size(); ++i) {
        const double target = out.original.per_time(i);
        const double nearest = (out.reconstructed.per_time.array() - target).abs().minCoeff();
        out.containment = std::max(out.containment, nearest);
    }
    return out;
}

Vec sensitivity_constant(const SystemSpec& spec, const MeasurementMap& measurement, int delays, const Mat& states)
{
    if (spec.kind != SystemKind::torus) throw InvalidArgument("sensitivity constant is only available for the torus");
    if (delays < 1) throw InvalidArgument("number of delays must be at least 1");
    const Index n = states.cols();
    const int d = measurement.dim();
    Vec out = Vec::Constant(n, std::numeric_limits<double>::quiet_NaN());
    for (Index t = delays - 1; t < n; ++t) {
        const Mat a = measurement.jacobian(states.col(t));
        Mat b(static_cast<Index>(delays) * d, states.rows());
        for (int q = 0; q < delays; ++q) b.middleRows(q * d, d) = measurement.jacobian(states.col(t - q));
        const Mat btb = b.transpose() * b;
        Eigen::SelfAdjointEigenSolver<Mat> eb(btb);
        if (eb.eigenvalues().minCoeff() <= 1e-12 * std::max(1.0, eb.eigenvalues().maxCoeff()))
            throw InvalidArgument("delay map derivative is rank deficient");
        Eigen::GeneralizedSelfAdjointEigenSolver<Mat> gen(a.transpose() * a, btb, Eigen::EigenvaluesOnly);
        out(t) = std::sqrt(std::max(0.0, gen.eigenvalues().maxCoeff()));
    }
    return out;
}

}  // namespace dynrecon
