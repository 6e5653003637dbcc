#include "dynrecon/learning.hpp"

#include <algorithm>
#include <cmath>

namespace dynrecon {

std::vector<AnglePair> angle_pairs(const MeasurementMap& measurement)
{
    if (measurement.kind() != MeasurementKind::trigonometric)
        throw InvalidArgument("angle pairs need a trigonometric measurement");
    const Vec& m = measurement.mean();
    const Vec& s = measurement.scale();
    std::vector<AnglePair> pairs;
    for (int c = 0; c + 1 < measurement.dim(); c += 2)
        pairs.push_back({c, c + 1, -m(c) / s(c), 1.0 / s(c), -m(c + 1) / s(c + 1), 1.0 / s(c + 1)});
    return pairs;
}

std::string to_string(FeatureKind kind)
{
    switch (kind) {
    case FeatureKind::affine: return "affine";
    case FeatureKind::trigonometric: return "trigonometric";
    case FeatureKind::gaussian_kernel: return "gaussian";
    }
    return "unknown";
}

namespace {

// Integer multi-indices with max |k_i| <= order, first nonzero entry positive,
// ordered by max |k_i| so lower orders come first.
std::vector<Eigen::VectorXi> fourier_modes(int n_angles, int order)
{
    std::vector<Eigen::VectorXi> out;
    for (int level = 1; level <= order; ++level) {
        Eigen::VectorXi k = Eigen::VectorXi::Constant(n_angles, -level);
        while (true) {
            int first = 0;
            for (int i = 0; i < n_angles; ++i)
                if (k(i) != 0) {
                    first = k(i);
                    break;
                }
            if (first > 0 && k.cwiseAbs().maxCoeff() == level) out.push_back(k);
            int i = n_angles - 1;
            while (i >= 0 && k(i) == level) {
                k(i) = -level;
                --i;
            }
            if (i < 0) break;
            ++k(i);
        }
    }
    return out;
}

}  // namespace

HypothesisSpace HypothesisSpace::affine(int input_dim)
{
    if (input_dim < 1) throw InvalidArgument("affine space needs a positive input dimension");
    HypothesisSpace h;
    h.kind_ = FeatureKind::affine;
    h.input_dim_ = input_dim;
    return h;
}

HypothesisSpace HypothesisSpace::trigonometric(int input_dim, std::vector<AnglePair> angles, int order)
{
    if (order < 0) throw InvalidArgument("Fourier order must be non-negative");
    if (angles.empty()) throw InvalidArgument("trigonometric space needs at least one angle pair");
    for (const auto& a : angles) {
        if (a.cos_index < 0 || a.cos_index >= input_dim || a.sin_index < 0 || a.sin_index >= input_dim)
            throw InvalidArgument("angle pair index outside the input dimension");
        if (a.cos_scale == 0.0 || a.sin_scale == 0.0) throw InvalidArgument("angle pair scale must be nonzero");
    }
    HypothesisSpace h;
    h.kind_ = FeatureKind::trigonometric;
    h.input_dim_ = input_dim;
    h.angles_ = std::move(angles);
    h.order_ = order;
    h.modes_ = fourier_modes(static_cast<int>(h.angles_.size()), order);
    return h;
}

HypothesisSpace HypothesisSpace::gaussian_kernel(Mat centers, double bandwidth, bool with_linear)
{
    if (centers.cols() < 1 || centers.rows() < 1) throw InvalidArgument("gaussian space needs at least one center");
    if (!(bandwidth > 0.0)) throw InvalidArgument("gaussian bandwidth must be positive");
    HypothesisSpace h;
    h.kind_ = FeatureKind::gaussian_kernel;
    h.input_dim_ = static_cast<int>(centers.rows());
    h.centers_ = std::move(centers);
    h.bandwidth_ = bandwidth;
    h.with_linear_ = with_linear;
    return h;
}

int HypothesisSpace::size() const
{
    switch (kind_) {
    case FeatureKind::affine: return 1 + input_dim_;
    case FeatureKind::trigonometric: return 1 + 2 * static_cast<int>(modes_.size());
    case FeatureKind::gaussian_kernel:
        return 1 + (with_linear_ ? input_dim_ : 0) + static_cast<int>(centers_.cols());
    }
    return 0;
}

Vec HypothesisSpace::angles_of(const Vec& y, Mat* d_angles) const
{
    Vec theta(static_cast<Index>(angles_.size()));
    if (d_angles) *d_angles = Mat::Zero(theta.size(), input_dim_);
    for (std::size_t i = 0; i < angles_.size(); ++i) {
        const AnglePair& a = angles_[i];
        const double c = (y(a.cos_index) - a.cos_offset) / a.cos_scale;
        const double s = (y(a.sin_index) - a.sin_offset) / a.sin_scale;
        theta(static_cast<Index>(i)) = std::atan2(s, c);
        if (d_angles) {
            const double r2 = c * c + s * s;
            (*d_angles)(static_cast<Index>(i), a.cos_index) += -s / r2 / a.cos_scale;
            (*d_angles)(static_cast<Index>(i), a.sin_index) += c / r2 / a.sin_scale;
        }
    }
    return theta;
}

Vec HypothesisSpace::features(const Vec& y) const
{
    if (y.size() != input_dim_) throw InvalidArgument("feature evaluation: input dimension mismatch");
    Vec f(size());
    f(0) = 1.0;
    switch (kind_) {
    case FeatureKind::affine:
        f.tail(input_dim_) = y;
        break;
    case FeatureKind::trigonometric: {
        const Vec theta = angles_of(y, nullptr);
        for (std::size_t j = 0; j < modes_.size(); ++j) {
            const double phase = modes_[j].cast<double>().dot(theta);
            f(1 + 2 * static_cast<Index>(j)) = std::cos(phase);
            f(2 + 2 * static_cast<Index>(j)) = std::sin(phase);
        }
        break;
    }
    case FeatureKind::gaussian_kernel: {
        Index off = 1;
        if (with_linear_) {
            f.segment(1, input_dim_) = y;
            off += input_dim_;
        }
        const double inv = -0.5 / (bandwidth_ * bandwidth_);
        for (Index j = 0; j < centers_.cols(); ++j) f(off + j) = std::exp(inv * (y - centers_.col(j)).squaredNorm());
        break;
    }
    }
    return f;
}

Mat HypothesisSpace::feature_matrix(const Mat& ys) const
{
    if (ys.rows() != input_dim_) throw InvalidArgument("feature matrix: input dimension mismatch");
    const Index n = ys.cols();
    Mat h(n, size());
    if (kind_ != FeatureKind::gaussian_kernel) {
        for (Index i = 0; i < n; ++i) h.row(i) = features(ys.col(i)).transpose();
        return h;
    }
    h.col(0).setOnes();
    Index off = 1;
    if (with_linear_) {
        h.middleCols(1, input_dim_) = ys.transpose();
        off += input_dim_;
    }
    // |y - c|^2 = |y|^2 + |c|^2 - 2 y.c, evaluated as one product
    const Vec y2 = ys.colwise().squaredNorm().transpose();
    const Eigen::RowVectorXd c2 = centers_.colwise().squaredNorm();
    Mat d2 = -2.0 * ys.transpose() * centers_;
    d2.colwise() += y2;
    d2.rowwise() += c2;
    const double inv = -0.5 / (bandwidth_ * bandwidth_);
    h.rightCols(centers_.cols()) = (d2.array().max(0.0) * inv).exp().matrix();
    return h;
}

Mat HypothesisSpace::feature_jacobian(const Vec& y) const
{
    if (y.size() != input_dim_) throw InvalidArgument("feature jacobian: input dimension mismatch");
    Mat j = Mat::Zero(size(), input_dim_);
    switch (kind_) {
    case FeatureKind::affine:
        j.bottomRows(input_dim_).setIdentity();
        break;
    case FeatureKind::trigonometric: {
        Mat d_theta;
        const Vec theta = angles_of(y, &d_theta);
        for (std::size_t m = 0; m < modes_.size(); ++m) {
            const Eigen::VectorXd k = modes_[m].cast<double>();
            const double phase = k.dot(theta);
            const Eigen::RowVectorXd d_phase = k.transpose() * d_theta;
            j.row(1 + 2 * static_cast<Index>(m)) = -std::sin(phase) * d_phase;
            j.row(2 + 2 * static_cast<Index>(m)) = std::cos(phase) * d_phase;
        }
        break;
    }
    case FeatureKind::gaussian_kernel: {
        Index off = 1;
        if (with_linear_) {
            j.middleRows(1, input_dim_).setIdentity();
            off += input_dim_;
        }
        const double h2 = bandwidth_ * bandwidth_;
        for (Index c = 0; c < centers_.cols(); ++c) {
            const Vec diff = y - centers_.col(c);
            const double k = std::exp(-0.5 * diff.squaredNorm() / h2);
            j.row(off + c) = (-k / h2) * diff.transpose();
        }
        break;
    }
    }
    return j;
}

Mat subsample_columns(const Mat& points, Index count)
{
    if (count <= 0) throw InvalidArgument("subsample count must be positive");
    const Index n = points.cols();
    if (n <= count) return points;
    Mat out(points.rows(), count);
    for (Index i = 0; i < count; ++i) out.col(i) = points.col((i * n) / count);
    return out;
}

double median_bandwidth(const Mat& points, Index max_points)
{
    const Mat sample = subsample_columns(points, max_points);
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(sample.cols() * (sample.cols() - 1) / 2));
    for (Index i = 0; i < sample.cols(); ++i)
        for (Index j = i + 1; j < sample.cols(); ++j) d.push_back((sample.col(i) - sample.col(j)).norm());
    if (d.empty()) throw InvalidArgument("median bandwidth needs at least two points");
    auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    if (!(*mid > 0.0)) throw NumericalError("median pairwise distance is zero");
    return *mid;
}

double default_ridge(const Mat& design)
{
    const double n = static_cast<double>(design.rows());
    const double trace = design.colwise().squaredNorm().sum() / n;
    return 1e-8 * trace / static_cast<double>(design.cols());
}

LeastSquaresSolver::LeastSquaresSolver(Mat design, double ridge)
    : samples_(design.rows()), features_(design.cols()), ridge_(ridge)
{
    if (ridge < 0.0 || !std::isfinite(ridge)) throw InvalidArgument("ridge must be a finite non-negative number");
    if (samples_ < features_)
        throw InvalidArgument("too few samples: " + std::to_string(samples_) + " pairs for "
                              + std::to_string(features_) + " features");
    design_ = std::move(design);
    if (ridge_ == 0.0) {
        qr_.compute(design_);
        if (qr_.rank() < features_)
            throw NumericalError("rank-deficient least squares at ridge 0 (rank " + std::to_string(qr_.rank())
                                 + " of " + std::to_string(features_) + "); set a positive ridge");
        return;
    }
    gram_ = Mat::Zero(features_, features_);
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(design_.transpose(), 1.0 / static_cast<double>(samples_));
    gram_.triangularView<Eigen::StrictlyUpper>() = gram_.transpose();
    Mat regularized = gram_;
    regularized.diagonal().array() += ridge_;
    gram_llt_.compute(regularized);
    if (gram_llt_.info() != Eigen::Success) throw NumericalError("regularized normal equations are not positive definite");
}

Mat LeastSquaresSolver::solve(const Mat& targets) const
{
    if (targets.cols() != samples_) throw InvalidArgument("least squares: target count mismatch");
    if (ridge_ == 0.0) return qr_.solve(targets.transpose()).transpose();
    const Mat rhs = design_.transpose() * targets.transpose() / static_cast<double>(samples_);
    return gram_llt_.solve(rhs).transpose();
}

LeastSquaresSolver::Solution LeastSquaresSolver::solve_with_residuals(const Mat& targets) const
{
    if (targets.cols() != samples_) throw InvalidArgument("least squares: target count mismatch");
    const double n = static_cast<double>(samples_);
    Solution out;
    if (ridge_ == 0.0) {
        out.coefficients = qr_.solve(targets.transpose()).transpose();
        const Mat residual = targets - out.coefficients * design_.transpose();
        out.mean_square_residual = residual.rowwise().squaredNorm() / n;
        return out;
    }
    const Mat rhs = design_.transpose() * targets.transpose() / n;  // m x r
    out.coefficients = gram_llt_.solve(rhs).transpose();
    out.mean_square_residual.resize(targets.rows());
    const Mat cg = out.coefficients * gram_;
    for (Index r = 0; r < targets.rows(); ++r) {
        const double ms = targets.row(r).squaredNorm() / n - 2.0 * out.coefficients.row(r).dot(rhs.col(r).transpose())
                          + cg.row(r).dot(out.coefficients.row(r));
        out.mean_square_residual(r) = std::max(ms, 0.0);
    }
    return out;
}

namespace {

double spectral_norm(const Mat& a)
{
    if (a.rows() <= a.cols()) {
        Eigen::SelfAdjointEigenSolver<Mat> es(a * a.transpose(), Eigen::EigenvaluesOnly);
        return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(a.transpose() * a, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

}  // namespace

FeedbackModel fit_feedback(const Mat& inputs, const Mat& targets, int horizon, const HypothesisSpace& space,
                           double ridge, FitOptions options)
{
    if (inputs.cols() != targets.cols()) throw InvalidArgument("fit_feedback: inputs and targets differ in length");
    if (inputs.rows() != space.input_dim()) throw InvalidArgument("fit_feedback: input dimension mismatch");
    if (horizon < 1) throw InvalidArgument("fit_feedback: horizon must be at least 1");

    const LeastSquaresSolver solver(space.feature_matrix(inputs), ridge);
    const Mat& design = solver.design();

    FeedbackModel model;
    model.horizon = horizon;
    model.ridge = ridge;
    model.space = std::make_shared<const HypothesisSpace>(space);
    model.coefficients = solver.solve(targets);

    const Mat residual = targets - model.coefficients * design.transpose();
    model.delta = std::sqrt(residual.squaredNorm() / static_cast<double>(residual.cols()));
    if (options.keep_residuals) model.residual_norms = residual.colwise().norm().transpose();

    if (options.estimate_derivative) {
        double best = 0.0;
        for (Index n = 0; n < inputs.cols(); ++n)
            best = std::max(best, spectral_norm(model.coefficients * space.feature_jacobian(inputs.col(n))));
        model.derivative_norm = best;
    }
    return model;
}

Vec predict(const FeedbackModel& model, const Vec& y)
{
    if (y.size() != model.input_dim()) throw InvalidArgument("predict: input dimension mismatch");
    return model.coefficients * model.space->features(y);
}

Mat predict_jacobian(const FeedbackModel& model, const Vec& y)
{
    return model.coefficients * model.space->feature_jacobian(y);
}

namespace {

void set_flags(TradeoffScan& scan)
{
    auto le = [](double a, double b) { return a <= b + 1e-9 * std::max(std::abs(a), std::abs(b)) + 1e-15; };
    for (std::size_t i = 1; i < scan.entries.size(); ++i) {
        const auto& p = scan.entries[i - 1];
        const auto& c = scan.entries[i];
        scan.delta_non_increasing = scan.delta_non_increasing && le(c.delta, p.delta);
        scan.delta_non_decreasing = scan.delta_non_decreasing && le(p.delta, c.delta);
        scan.derivative_non_increasing = scan.derivative_non_increasing && le(c.derivative_norm, p.derivative_norm);
        scan.derivative_non_decreasing = scan.derivative_non_decreasing && le(p.derivative_norm, c.derivative_norm);
    }
}

}  // namespace

TradeoffScan tradeoff_scan(const Mat& inputs, const Mat& targets, int horizon,
                           const std::vector<HypothesisSpace>& family, double ridge)
{
    if (family.empty()) throw InvalidArgument("tradeoff scan needs at least one hypothesis space");
    TradeoffScan scan;
    for (const auto& space : family) {
        const FeedbackModel m = fit_feedback(inputs, targets, horizon, space, ridge, {true, false});
        scan.entries.push_back({static_cast<double>(space.size()), m.delta, m.derivative_norm});
    }
    set_flags(scan);
    return scan;
}

TradeoffScan tradeoff_scan(const Mat& inputs, const Mat& targets, int horizon, const HypothesisSpace& space,
                           const std::vector<double>& ridges)
{
    if (ridges.empty()) throw InvalidArgument("tradeoff scan needs at least one ridge value");
    TradeoffScan scan;
    for (double r : ridges) {
        const FeedbackModel m = fit_feedback(inputs, targets, horizon, space, r, {true, false});
        scan.entries.push_back({r, m.delta, m.derivative_norm});
    }
    set_flags(scan);
    return scan;
}

}  // namespace dynrecon
