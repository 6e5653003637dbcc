#include "dynrecon/systems.hpp"

#include <cmath>
#include <numbers>

namespace dynrecon {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double wrap_angle(double a)
{
    double r = std::fmod(a, two_pi);
    if (r < 0.0) r += two_pi;
    // fmod can return exactly two_pi after the shift for tiny negative inputs
    if (r >= two_pi) r -= two_pi;
    return r;
}

Eigen::Vector3d lorenz_field(const Eigen::Vector3d& x, const SystemSpec& s)
{
    return {s.sigma * (x(1) - x(0)), x(0) * (s.rho - x(2)) - x(1), x(0) * x(1) - s.beta * x(2)};
}

Eigen::Matrix3d lorenz_field_jacobian(const Eigen::Vector3d& x, const SystemSpec& s)
{
    Eigen::Matrix3d j;
    j << -s.sigma, s.sigma, 0.0,
         s.rho - x(2), -1.0, -x(0),
         x(1), x(0), -s.beta;
    return j;
}

// RK4 on the state together with its variational equation dJ/dt = Df(x) J.
template <bool WithJacobian>
Eigen::Vector3d lorenz_rk4(const Eigen::Vector3d& x0, const SystemSpec& s, Eigen::Matrix3d* jac)
{
    const double h = s.dt / s.substeps;
    Eigen::Vector3d x = x0;
    Eigen::Matrix3d j = Eigen::Matrix3d::Identity();
    for (int i = 0; i < s.substeps; ++i) {
        const Eigen::Vector3d k1 = lorenz_field(x, s);
        const Eigen::Vector3d x2 = x + 0.5 * h * k1;
        const Eigen::Vector3d k2 = lorenz_field(x2, s);
        const Eigen::Vector3d x3 = x + 0.5 * h * k2;
        const Eigen::Vector3d k3 = lorenz_field(x3, s);
        const Eigen::Vector3d x4 = x + h * k3;
        const Eigen::Vector3d k4 = lorenz_field(x4, s);
        if constexpr (WithJacobian) {
            const Eigen::Matrix3d l1 = lorenz_field_jacobian(x, s) * j;
            const Eigen::Matrix3d l2 = lorenz_field_jacobian(x2, s) * (j + 0.5 * h * l1);
            const Eigen::Matrix3d l3 = lorenz_field_jacobian(x3, s) * (j + 0.5 * h * l2);
            const Eigen::Matrix3d l4 = lorenz_field_jacobian(x4, s) * (j + h * l3);
            j += (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
        }
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!x.allFinite()) throw NumericalError("Lorenz-63 integrator produced a non-finite state");
    if constexpr (WithJacobian) *jac = j;
    return x;
}

void require_dim(const Vec& v, int dim, const char* what)
{
    if (v.size() != dim)
        throw InvalidArgument(std::string(what) + ": expected dimension " + std::to_string(dim) + ", got "
                              + std::to_string(v.size()));
}

}  // namespace

std::string to_string(SystemKind kind)
{
    switch (kind) {
    case SystemKind::torus: return "torus";
    case SystemKind::lorenz63: return "l63";
    case SystemKind::l63rot: return "l63rot";
    }
    return "unknown";
}

SystemKind system_kind_from_string(const std::string& name)
{
    if (name == "torus") return SystemKind::torus;
    if (name == "l63" || name == "lorenz63") return SystemKind::lorenz63;
    if (name == "l63rot") return SystemKind::l63rot;
    throw InvalidArgument("unknown system '" + name + "'");
}

Eigen::Vector2d SystemSpec::default_rotation()
{
    return {1.0, std::fmod(two_pi / std::numbers::phi, two_pi)};
}

SystemSpec SystemSpec::torus()
{
    SystemSpec s;
    s.kind = SystemKind::torus;
    s.dt = 1.0;
    return s;
}

SystemSpec SystemSpec::lorenz63()
{
    return SystemSpec{};
}

SystemSpec SystemSpec::l63rot()
{
    SystemSpec s;
    s.kind = SystemKind::l63rot;
    return s;
}

int SystemSpec::state_dim() const
{
    switch (kind) {
    case SystemKind::torus: return 2;
    case SystemKind::lorenz63: return 3;
    case SystemKind::l63rot: return 4;
    }
    return 0;
}

int SystemSpec::default_spinup() const
{
    return kind == SystemKind::torus ? 0 : 10000;
}

void SystemSpec::validate() const
{
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("sampling interval dt must be positive");
    if (substeps < 1) throw InvalidArgument("substeps must be at least 1");
    if (!rotation.allFinite()) throw InvalidArgument("rotation vector must be finite");
}

Eigen::Vector2d step_torus(const Eigen::Vector2d& angles, const Eigen::Vector2d& rotation)
{
    return {wrap_angle(angles(0) + rotation(0)), wrap_angle(angles(1) + rotation(1))};
}

Eigen::Vector3d step_lorenz63(const Eigen::Vector3d& x, const SystemSpec& spec)
{
    if (spec.substeps < 1) throw InvalidArgument("substeps must be at least 1");
    if (!x.allFinite()) throw InvalidArgument("Lorenz-63 state must be finite");
    return lorenz_rk4<false>(x, spec, nullptr);
}

Eigen::Vector4d step_l63rot(const Eigen::Vector4d& state, const SystemSpec& spec)
{
    Eigen::Vector4d out;
    out(0) = wrap_angle(state(0) + spec.rotation(0));
    out.tail<3>() = step_lorenz63(state.tail<3>(), spec);
    return out;
}

Vec step(const SystemSpec& spec, const Vec& state)
{
    require_dim(state, spec.state_dim(), "step");
    switch (spec.kind) {
    case SystemKind::torus: return step_torus(state, spec.rotation);
    case SystemKind::lorenz63: return step_lorenz63(state, spec);
    case SystemKind::l63rot: return step_l63rot(state, spec);
    }
    throw InvalidArgument("unknown system kind");
}

std::pair<Vec, Mat> step_with_jacobian(const SystemSpec& spec, const Vec& state)
{
    require_dim(state, spec.state_dim(), "step_with_jacobian");
    if (!state.allFinite()) throw InvalidArgument("state must be finite");
    switch (spec.kind) {
    case SystemKind::torus:
        return {step_torus(state, spec.rotation), Mat::Identity(2, 2)};
    case SystemKind::lorenz63: {
        Eigen::Matrix3d j;
        Vec next = lorenz_rk4<true>(state, spec, &j);
        return {next, j};
    }
    case SystemKind::l63rot: {
        Eigen::Matrix3d j;
        Vec next(4);
        next(0) = wrap_angle(state(0) + spec.rotation(0));
        next.tail<3>() = lorenz_rk4<true>(state.tail<3>(), spec, &j);
        Mat full = Mat::Zero(4, 4);
        full(0, 0) = 1.0;
        full.bottomRightCorner<3, 3>() = j;
        return {next, full};
    }
    }
    throw InvalidArgument("unknown system kind");
}

Mat jacobian(const SystemSpec& spec, const Vec& state)
{
    return step_with_jacobian(spec, state).second;
}

std::string to_string(MeasurementKind kind)
{
    switch (kind) {
    case MeasurementKind::full_state: return "full-state";
    case MeasurementKind::coordinate_projection: return "coordinate-projection";
    case MeasurementKind::linear_combination: return "linear-combination";
    case MeasurementKind::trigonometric: return "trigonometric";
    }
    return "unknown";
}

MeasurementKind measurement_kind_from_string(const std::string& name)
{
    if (name == "full-state") return MeasurementKind::full_state;
    if (name == "coordinate-projection") return MeasurementKind::coordinate_projection;
    if (name == "linear-combination") return MeasurementKind::linear_combination;
    if (name == "trigonometric") return MeasurementKind::trigonometric;
    throw InvalidArgument("unknown measurement kind '" + name + "'");
}

MeasurementMap MeasurementMap::full_state(int state_dim)
{
    if (state_dim < 1) throw InvalidArgument("state dimension must be positive");
    MeasurementMap m;
    m.kind_ = MeasurementKind::full_state;
    m.state_dim_ = state_dim;
    m.mean_ = Vec::Zero(state_dim);
    m.scale_ = Vec::Ones(state_dim);
    return m;
}

MeasurementMap MeasurementMap::projection(std::vector<int> coordinates)
{
    if (coordinates.empty()) throw InvalidArgument("projection needs at least one coordinate");
    for (int c : coordinates)
        if (c < 0) throw InvalidArgument("negative coordinate index");
    MeasurementMap m;
    m.kind_ = MeasurementKind::coordinate_projection;
    m.coordinates_ = std::move(coordinates);
    m.mean_ = Vec::Zero(m.dim());
    m.scale_ = Vec::Ones(m.dim());
    return m;
}

MeasurementMap MeasurementMap::linear_combination(Mat coefficients)
{
    if (coefficients.size() == 0) throw InvalidArgument("empty coefficient table");
    MeasurementMap m;
    m.kind_ = MeasurementKind::linear_combination;
    m.coefficients_ = std::move(coefficients);
    m.mean_ = Vec::Zero(m.dim());
    m.scale_ = Vec::Ones(m.dim());
    return m;
}

MeasurementMap MeasurementMap::trigonometric(std::vector<int> angle_coordinates)
{
    if (angle_coordinates.empty()) throw InvalidArgument("trigonometric measurement needs angle coordinates");
    for (int c : angle_coordinates)
        if (c < 0) throw InvalidArgument("negative coordinate index");
    MeasurementMap m;
    m.kind_ = MeasurementKind::trigonometric;
    m.coordinates_ = std::move(angle_coordinates);
    m.mean_ = Vec::Zero(m.dim());
    m.scale_ = Vec::Ones(m.dim());
    return m;
}

int MeasurementMap::dim() const
{
    switch (kind_) {
    case MeasurementKind::full_state: return state_dim_;
    case MeasurementKind::coordinate_projection: return static_cast<int>(coordinates_.size());
    case MeasurementKind::linear_combination: return static_cast<int>(coefficients_.rows());
    case MeasurementKind::trigonometric: return 2 * static_cast<int>(coordinates_.size());
    }
    return 0;
}

Vec MeasurementMap::raw(const Vec& state) const
{
    auto check = [&](int c) {
        if (c >= state.size()) throw InvalidArgument("measurement coordinate out of range for state");
    };
    switch (kind_) {
    case MeasurementKind::full_state:
        require_dim(state, state_dim_, "full-state measurement");
        return state;
    case MeasurementKind::coordinate_projection: {
        Vec out(dim());
        for (std::size_t i = 0; i < coordinates_.size(); ++i) {
            check(coordinates_[i]);
            out(static_cast<Index>(i)) = state(coordinates_[i]);
        }
        return out;
    }
    case MeasurementKind::linear_combination:
        require_dim(state, static_cast<int>(coefficients_.cols()), "linear-combination measurement");
        return coefficients_ * state;
    case MeasurementKind::trigonometric: {
        Vec out(dim());
        for (std::size_t i = 0; i < coordinates_.size(); ++i) {
            check(coordinates_[i]);
            out(static_cast<Index>(2 * i)) = std::cos(state(coordinates_[i]));
            out(static_cast<Index>(2 * i + 1)) = std::sin(state(coordinates_[i]));
        }
        return out;
    }
    }
    throw InvalidArgument("unknown measurement kind");
}

Vec MeasurementMap::normalize(const Vec& raw_value) const
{
    return (raw_value - mean_).cwiseQuotient(scale_);
}

Vec MeasurementMap::denormalize(const Vec& value) const
{
    return value.cwiseProduct(scale_) + mean_;
}

Vec MeasurementMap::operator()(const Vec& state) const
{
    return normalize(raw(state));
}

Mat MeasurementMap::jacobian(const Vec& state) const
{
    const Index m = state.size();
    Mat j = Mat::Zero(dim(), m);
    switch (kind_) {
    case MeasurementKind::full_state:
        require_dim(state, state_dim_, "full-state measurement");
        j.setIdentity();
        break;
    case MeasurementKind::coordinate_projection:
        for (std::size_t i = 0; i < coordinates_.size(); ++i) j(static_cast<Index>(i), coordinates_[i]) = 1.0;
        break;
    case MeasurementKind::linear_combination:
        j = coefficients_;
        break;
    case MeasurementKind::trigonometric:
        for (std::size_t i = 0; i < coordinates_.size(); ++i) {
            const double a = state(coordinates_[i]);
            j(static_cast<Index>(2 * i), coordinates_[i]) = -std::sin(a);
            j(static_cast<Index>(2 * i + 1), coordinates_[i]) = std::cos(a);
        }
        break;
    }
    return scale_.cwiseInverse().asDiagonal() * j;
}

MeasurementMap MeasurementMap::fitted(const Mat& states) const
{
    if (states.cols() == 0) throw InvalidArgument("cannot fit normalization on an empty sample");
    MeasurementMap out = *this;
    out.mean_ = Vec::Zero(dim());
    out.scale_ = Vec::Ones(dim());
    const Mat raw_values = measure(out, states);
    const double n = static_cast<double>(raw_values.cols());
    const Vec mean = raw_values.rowwise().sum() / n;
    const Mat centered = raw_values.colwise() - mean;
    const Vec rms = (centered.rowwise().squaredNorm() / n).cwiseSqrt();
    const double target = 1.0 / std::sqrt(static_cast<double>(dim()));
    out.mean_ = mean;
    for (Index i = 0; i < rms.size(); ++i) out.scale_(i) = rms(i) > 0.0 ? rms(i) / target : 1.0;
    return out;
}

Mat measure(const MeasurementMap& measurement, const Mat& states)
{
    Mat out(measurement.dim(), states.cols());
    for (Index n = 0; n < states.cols(); ++n) out.col(n) = measurement(states.col(n));
    return out;
}

Vec default_initial_state(const SystemSpec& spec)
{
    switch (spec.kind) {
    case SystemKind::torus: return Vec::Zero(2);
    case SystemKind::lorenz63: return Vec::Ones(3);
    case SystemKind::l63rot: {
        Vec s = Vec::Ones(4);
        s(0) = 0.0;
        return s;
    }
    }
    return {};
}

Trajectory generate_trajectory(const SystemSpec& spec, const Vec& initial, Index length,
                               const MeasurementMap& measurement, TrajectoryOptions options)
{
    spec.validate();
    if (length < 1) throw InvalidArgument("trajectory length must be at least 1");
    require_dim(initial, spec.state_dim(), "initial state");
    if (!initial.allFinite()) throw InvalidArgument("initial state must be finite");

    Vec state = initial;
    const int spinup = options.spinup < 0 ? spec.default_spinup() : options.spinup;
    for (int i = 0; i < spinup; ++i) state = step(spec, state);

    Trajectory t;
    t.system = spec;
    t.states.resize(spec.state_dim(), length);
    for (Index n = 0; n < length; ++n) {
        t.states.col(n) = state;
        if (n + 1 < length) state = step(spec, state);
    }
    t.measurement = options.fit_normalization ? measurement.fitted(t.states) : measurement;
    t.measured = measure(t.measurement, t.states);
    return t;
}

}  // namespace dynrecon
