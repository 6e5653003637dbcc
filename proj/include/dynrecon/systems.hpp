#pragma once

// Reference dynamical systems: torus rotation, Lorenz-63 sampled at a fixed
// interval, and the product of Lorenz-63 with a circle rotation.

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dynrecon {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Bad arguments or configuration: dimensions, ranges, unknown names.
class InvalidArgument : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Integrator blow-up, singular solves and similar numerical breakdowns.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class SystemKind { torus, lorenz63, l63rot };

std::string to_string(SystemKind kind);
SystemKind system_kind_from_string(const std::string& name);

struct SystemSpec {
    SystemKind kind = SystemKind::lorenz63;
    // Radians per step. l63rot uses the first component for its angle.
    Eigen::Vector2d rotation = default_rotation();
    double sigma = 10.0;
    double rho = 28.0;
    double beta = 8.0 / 3.0;
    // Sampling interval in time units per step; the torus uses 1.
    double dt = 0.01;
    int substeps = 1;

    static Eigen::Vector2d default_rotation();
    static SystemSpec torus();
    static SystemSpec lorenz63();
    static SystemSpec l63rot();

    int state_dim() const;
    /// Attractor settling steps discarded before recording.
    int default_spinup() const;
    /// Throws InvalidArgument on dt <= 0 or substeps < 1.
    void validate() const;
};

Eigen::Vector2d step_torus(const Eigen::Vector2d& angles, const Eigen::Vector2d& rotation);
Eigen::Vector3d step_lorenz63(const Eigen::Vector3d& x, const SystemSpec& spec);
Eigen::Vector4d step_l63rot(const Eigen::Vector4d& state, const SystemSpec& spec);

/// One step of the system; throws NumericalError if the result is not finite.
Vec step(const SystemSpec& spec, const Vec& state);

/// Jacobian of the one-step map. For the Lorenz systems the variational
/// equations are carried through the same RK4 stages as the state, so this
/// is the exact derivative of the discrete map.
Mat jacobian(const SystemSpec& spec, const Vec& state);

/// Next state and Jacobian at the current state in one pass.
std::pair<Vec, Mat> step_with_jacobian(const SystemSpec& spec, const Vec& state);

enum class MeasurementKind { full_state, coordinate_projection, linear_combination, trigonometric };

std::string to_string(MeasurementKind kind);
MeasurementKind measurement_kind_from_string(const std::string& name);

/// Measurement phi: state -> R^d followed by an affine normalization
/// (x - mean) / scale. An unfitted map has mean 0 and scale 1.
class MeasurementMap {
  public:
    static MeasurementMap full_state(int state_dim);
    static MeasurementMap projection(std::vector<int> coordinates);
    static MeasurementMap linear_combination(Mat coefficients);
    /// (cos a, sin a) for every listed angle coordinate a.
    static MeasurementMap trigonometric(std::vector<int> angle_coordinates);

    MeasurementKind kind() const { return kind_; }
    int dim() const;
    const Vec& mean() const { return mean_; }
    const Vec& scale() const { return scale_; }
    const std::vector<int>& coordinates() const { return coordinates_; }

    Vec raw(const Vec& state) const;
    Vec operator()(const Vec& state) const;
    /// d x m derivative of the normalized measurement.
    Mat jacobian(const Vec& state) const;

    /// Componentwise mean removal with every component scaled to RMS
    /// 1/sqrt(d), so the normalized vector signal has unit L2 norm over the
    /// sample. Components with zero spread keep scale 1.
    MeasurementMap fitted(const Mat& states) const;

    Vec normalize(const Vec& raw_value) const;
    Vec denormalize(const Vec& value) const;

  private:
    MeasurementKind kind_ = MeasurementKind::full_state;
    int state_dim_ = 0;
    std::vector<int> coordinates_;
    Mat coefficients_;
    Vec mean_;
    Vec scale_;
};

/// Orbit omega_n (columns of states) with its measurements phi(omega_n).
struct Trajectory {
    SystemSpec system;
    MeasurementMap measurement;
    Mat states;    // m x N
    Mat measured;  // d x N

    Index size() const { return states.cols(); }
};

struct TrajectoryOptions {
    // Negative means SystemSpec::default_spinup().
    int spinup = -1;
    // Fit the measurement normalization on the generated states.
    bool fit_normalization = false;
};

Trajectory generate_trajectory(const SystemSpec& spec, const Vec& initial, Index length,
                               const MeasurementMap& measurement, TrajectoryOptions options = {});

/// A generic initial condition: the origin for the torus, (1, 1, 1) for
/// Lorenz-63 and (0, 1, 1, 1) for l63rot.
Vec default_initial_state(const SystemSpec& spec);

/// Measurement applied columnwise.
Mat measure(const MeasurementMap& measurement, const Mat& states);

}  // namespace dynrecon
