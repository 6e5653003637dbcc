#pragma once

// Feedback-function regression over finite linear hypothesis spaces.

#include "dynrecon/systems.hpp"

#include <memory>
#include <vector>

namespace dynrecon {

enum class FeatureKind { affine, trigonometric, gaussian_kernel };

std::string to_string(FeatureKind kind);

/// An angle recovered from two input coordinates as
/// atan2((y[sin] - sin_offset) / sin_scale, (y[cos] - cos_offset) / cos_scale).
/// Offsets and scales undo a measurement normalization.
struct AnglePair {
    int cos_index = 0;
    int sin_index = 1;
    double cos_offset = 0.0;
    double cos_scale = 1.0;
    double sin_offset = 0.0;
    double sin_scale = 1.0;
};

/// Angle pairs for the newest block of a delay vector built from a
/// normalized trigonometric measurement: component 2i and 2i+1 are the
/// cos/sin of the i-th angle.
std::vector<AnglePair> angle_pairs(const MeasurementMap& measurement);

/// Span of feature maps h_1..h_m : R^L -> R. The constant function is always
/// the first feature.
class HypothesisSpace {
  public:
    /// {1, y_1, ..., y_L}.
    static HypothesisSpace affine(int input_dim);
    /// {1} and cos/sin of k.theta for integer multi-indices with
    /// max |k_i| <= order, one representative per +-k pair.
    static HypothesisSpace trigonometric(int input_dim, std::vector<AnglePair> angles, int order);
    /// {1, [y_1..y_L if linear], exp(-|y - c_j|^2 / (2 h^2))}.
    static HypothesisSpace gaussian_kernel(Mat centers, double bandwidth, bool with_linear = true);

    FeatureKind kind() const { return kind_; }
    int input_dim() const { return input_dim_; }
    int size() const;
    int order() const { return order_; }
    double bandwidth() const { return bandwidth_; }
    const Mat& centers() const { return centers_; }

    Vec features(const Vec& y) const;
    /// N x m design matrix for the columns of ys.
    Mat feature_matrix(const Mat& ys) const;
    /// m x L derivative of the feature vector.
    Mat feature_jacobian(const Vec& y) const;

  private:
    FeatureKind kind_ = FeatureKind::affine;
    int input_dim_ = 0;
    // trigonometric
    std::vector<AnglePair> angles_;
    std::vector<Eigen::VectorXi> modes_;
    int order_ = 0;
    // gaussian kernel
    Mat centers_;
    double bandwidth_ = 1.0;
    bool with_linear_ = true;

    Vec angles_of(const Vec& y, Mat* d_angles) const;
};

/// Median pairwise distance among at most `max_points` evenly spaced columns.
double median_bandwidth(const Mat& points, Index max_points = 1000);
/// `count` evenly spaced columns of `points` (all if fewer).
Mat subsample_columns(const Mat& points, Index count);

/// Fitted w_k : R^L -> R^d, coefficients over the feature basis.
struct FeedbackModel {
    int horizon = 1;
    Mat coefficients;  // d x m
    std::shared_ptr<const HypothesisSpace> space;
    double ridge = 0.0;
    double delta = 0.0;            // RMS training residual
    double derivative_norm = 0.0;  // max over training points of ||D w_hat||, a lower bound of the sup
    Vec residual_norms;            // per training pair

    int output_dim() const { return static_cast<int>(coefficients.rows()); }
    int input_dim() const { return space->input_dim(); }
};

struct FitOptions {
    bool estimate_derivative = true;
    bool keep_residuals = true;
};

/// Regularized least squares
///   min_C (1/N) sum_n |targets_n - C h(inputs_n)|^2 + ridge |C|_F^2
/// on the columns of `inputs` (L x N) and `targets` (d x N).
/// Throws NumericalError for a rank-deficient problem at ridge 0 and
/// InvalidArgument for fewer pairs than features.
FeedbackModel fit_feedback(const Mat& inputs, const Mat& targets, int horizon, const HypothesisSpace& space,
                           double ridge, FitOptions options = {});

/// Factorizes the design matrix once and solves for many target sets.
/// Used by direct forecasting, which needs one regression per horizon on the
/// same inputs.
class LeastSquaresSolver {
  public:
    LeastSquaresSolver(Mat design, double ridge);
    /// Returns coefficients d x m for targets d x N.
    Mat solve(const Mat& targets) const;

    struct Solution {
        Mat coefficients;
        Vec mean_square_residual;  // per target row
    };
    /// As solve(), plus the mean square training residual of every target
    /// row. With a positive ridge the residual comes from the Gram identity
    /// and is accurate to about sqrt(machine epsilon) relative to |targets|.
    Solution solve_with_residuals(const Mat& targets) const;

    const Mat& design() const { return design_; }
    Index samples() const { return samples_; }
    Index features() const { return features_; }

  private:
    Index samples_;
    Index features_;
    double ridge_;
    Mat design_;
    Mat gram_;  // H^T H / N, without the ridge
    Eigen::LLT<Mat> gram_llt_;
    Eigen::ColPivHouseholderQR<Mat> qr_;
};

/// Default ridge 1e-8 * trace(Gram) / m with Gram = H^T H / N.
double default_ridge(const Mat& design);

Vec predict(const FeedbackModel& model, const Vec& y);
/// d x L Jacobian of the fitted model at y.
Mat predict_jacobian(const FeedbackModel& model, const Vec& y);

struct TradeoffEntry {
    double parameter;  // feature count or ridge value
    double delta;
    double derivative_norm;
};

struct TradeoffScan {
    std::vector<TradeoffEntry> entries;
    // Monotonicity along the entry order, up to a relative slack of 1e-9.
    // Only meaningful with two or more entries.
    bool delta_non_increasing = true;
    bool delta_non_decreasing = true;
    bool derivative_non_increasing = true;
    bool derivative_non_decreasing = true;
};

/// Nested hypothesis spaces in growing order; parameter = feature count.
TradeoffScan tradeoff_scan(const Mat& inputs, const Mat& targets, int horizon,
                           const std::vector<HypothesisSpace>& family, double ridge);
/// Ridge grid in increasing order over one space; parameter = ridge.
TradeoffScan tradeoff_scan(const Mat& inputs, const Mat& targets, int horizon, const HypothesisSpace& space,
                           const std::vector<double>& ridges);

}  // namespace dynrecon
