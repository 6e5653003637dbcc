#pragma once

// Direct and iterative forecasting with the reconstructed map
// T_hat(u, y) = (w_hat(y), g(u, y)), their RMS error curves, and the
// autocorrelation bound on the direct error.

#include "dynrecon/embedding.hpp"
#include "dynrecon/learning.hpp"

#include <optional>
#include <vector>

namespace dynrecon {

class ReconstructedMap {
  public:
    ReconstructedMap(FeedbackModel model, Embedder embedder);

    int measurement_dim() const { return model_.output_dim(); }
    int embedding_dim() const { return dynrecon::state_dim(embedder_); }
    int state_dim() const { return measurement_dim() + embedding_dim(); }
    const FeedbackModel& model() const { return model_; }
    const Embedder& embedder() const { return embedder_; }

    /// (u, y) -> (w_hat(y), g(u, y)).
    std::pair<Vec, Vec> step(const Vec& u, const Vec& y) const;
    /// Block Jacobian [0 | W_hat; G1 | G2] at (u, y).
    Mat jacobian(const Vec& u, const Vec& y) const;

  private:
    FeedbackModel model_;
    Embedder embedder_;
};

struct Rollout {
    Mat u;  // d x (steps + 1), column 0 is the initial lift
    Mat y;  // L x (steps + 1)
    // First step index at which the state stopped being finite; columns from
    // there on are not filled.
    std::optional<Index> divergence;
};

Rollout iterate_reconstructed(const ReconstructedMap& map, const Vec& u0, const Vec& y0, Index steps);

enum class ForecastMode { direct, iterative };

struct ErrorCurve {
    ForecastMode mode = ForecastMode::direct;
    Vec values;  // horizons 0..n_max
    Index ensemble = 0;
    Index diverged = 0;  // ensemble members that hit the divergence cap
    std::optional<Vec> bound;
};

/// Measured orbit with the matching lift Phi(omega_n); test initial
/// conditions are indices into it.
struct ForecastData {
    const Mat& measured;  // d x N
    const Mat& lifted;    // L x N
};

/// RMS over starts s of |phi(omega_{s+k}) - u_k| for the rollout from
/// z_0 = (phi(omega_s), Phi(omega_s)). Members that diverge, or whose error
/// exceeds cap = 1e3 * signal_scale, contribute the cap from then on.
ErrorCurve error_iterative(const ReconstructedMap& map, const ForecastData& data, const std::vector<Index>& starts,
                           Index n_max, double signal_scale = 1.0);

/// RMS over starts s of |phi(omega_{s+k}) - w_hat_k(Phi(omega_s))|.
/// models[k-1] is the horizon-k model. Horizon 0 is reported as 0.
ErrorCurve error_direct(const std::vector<FeedbackModel>& models, const ForecastData& data,
                        const std::vector<Index>& starts, Index n_max);

/// One regression per horizon 1..n_max on the shared inputs Phi(omega_i),
/// i in `train`, with targets phi(omega_{i+k}). The design matrix is
/// factorized once. Derivative norms are not estimated.
std::vector<FeedbackModel> fit_direct_models(const HypothesisSpace& space, const ForecastData& data,
                                             const std::vector<Index>& train, Index n_max, double ridge);

struct AutocorrelationCurve {
    Vec values;  // lags 0..n_max
};

/// Time-average estimate sum_t <psi_{t+n}, psi_t> / sum_t |psi_t|^2 with
/// per-lag sample counts. The series (d x N) must already be mean-removed.
/// Throws InvalidArgument when N < 2 n_max.
AutocorrelationCurve autocorrelation(const Mat& series, Index n_max);

/// |phi| sqrt(1 - AutCor(n)^2); valid as an upper bound on the direct error
/// only when phi lies in the hypothesis space.
Vec direct_bound(const AutocorrelationCurve& curve, double phi_norm);

struct BoundCheck {
    std::vector<Index> violations;  // horizons with error > bound + slack
    double max_excess = 0.0;        // max of error - bound over all horizons
};

BoundCheck check_direct_bound(const ErrorCurve& direct, const Vec& bound, double slack);
/// Per-horizon slack, e.g. 3 delta_k of the horizon-k model.
BoundCheck check_direct_bound(const ErrorCurve& direct, const Vec& bound, const Vec& slack);

/// max_n |RMS(psi o f^n) - RMS(psi)| / RMS(psi) over n <= n_max, with RMS over
/// the common window of N - n_max samples.
double unitarity_deviation(const Mat& series, Index n_max);

/// Ordinary least squares slope of log(values) over [first, last]; entries
/// that are not positive are skipped.
double fit_log_slope(const Vec& values, Index first, Index last);

/// Smallest offset c with log(values(n)) <= c + slope * n on [first, last].
double dominating_offset(const Vec& values, Index first, Index last, double slope);

/// Mean of values over the trailing `fraction` of the horizons.
double tail_mean(const Vec& values, double fraction);

}  // namespace dynrecon
