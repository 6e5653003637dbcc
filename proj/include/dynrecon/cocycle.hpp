#pragma once

// Matrix cocycles over a stored orbit: products, QR Lyapunov spectra, the
// (W, W_hat, G1, G2, c) bundle of the reconstructed map, the perturbed
// cocycle driving forecast fluctuations, and the stability gap.

#include "dynrecon/forecast.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace dynrecon {

/// G(omega_n) as a function of the orbit index n. Output is dim x dim.
struct CocycleGenerator {
    int dim = 0;
    std::function<Mat(Index)> at;
};

CocycleGenerator constant_generator(Mat g);
/// Jacobians of the one-step map along the columns of `orbit`.
CocycleGenerator jacobian_generator(const SystemSpec& spec, Mat orbit);

/// G(omega_{start+n-1}) ... G(omega_start); identity for n = 0.
Mat cocycle_product(const CocycleGenerator& g, Index start, Index n);

struct LyapunovEstimate {
    Vec per_step;  // descending
    Vec per_time;  // per_step / dt
    double dt = 1.0;
    Index steps = 0;
    std::vector<Index> trace_steps;
    Mat trace;  // p x trace_steps.size(), running per-time estimates in frame order
};

/// Discrete QR method: an orthonormal p-frame is pushed through the cocycle
/// and re-orthonormalized every step; log |R_ii| accumulate. Requires
/// steps >= 1000 and 1 <= p <= dim. A zero or non-finite R_ii throws
/// NumericalError (numerically singular cocycle). The frame is first pushed
/// through `warmup` untimed steps from `start`, so the estimate covers
/// generator indices start + warmup .. start + warmup + steps - 1.
LyapunovEstimate lyapunov_spectrum(const CocycleGenerator& g, Index start, Index steps, int p, double dt = 1.0,
                                   Index warmup = 0);

/// Same estimate for the system's own Jacobian cocycle, integrating the
/// orbit on the fly instead of storing it.
LyapunovEstimate system_lyapunov(const SystemSpec& spec, const Vec& initial, Index steps, int p);

/// Matrices of the linearized reconstruction along an orbit segment. Entry n
/// refers to orbit index start + n.
struct CocycleBundle {
    int d = 0;
    int l = 0;
    Index start = 0;
    std::vector<Mat> w_hat;  // d x L
    std::vector<Mat> g1;     // L x d
    std::vector<Mat> g2;     // L x L
    std::optional<std::vector<Mat>> w;  // true feedback Jacobian, when known
    std::vector<Vec> c;                 // (0_d, G1 Delta phi(omega_{n-1}))
    Vec initial_a;                      // a_0 = -Delta phi(omega_{start-1})

    Index size() const { return static_cast<Index>(w_hat.size()); }
    bool has_true_feedback() const { return w.has_value(); }
    /// [0 | W_hat; G1 | G2], or with W in place of W_hat when use_true.
    Mat assembled(Index n, bool use_true = false) const;
};

/// Jacobian of a closed-form true feedback w at an embedded point.
using FeedbackJacobian = std::function<Mat(const Vec& y)>;

/// Needs start - 1 past the lift washout so Delta phi(omega_{start-1}) =
/// phi(omega_start) - w_hat(Phi(omega_{start-1})) exists.
CocycleBundle build_bundle(const ReconstructedMap& map, const ForecastData& data, Index start, Index count,
                           const FeedbackJacobian& true_feedback = nullptr);

struct PerturbedSeries {
    Mat a;  // d x (n_max + 1)
    Mat b;  // L x (n_max + 1)
    std::optional<Index> divergence;
};

/// (a, b)_{n+1} = M_hat(omega_n) (a, b)_n + c(omega_n) from a_0 = initial_a,
/// b_0 = 0, which gives a_1 = 0 and b_1 = 0.
PerturbedSeries perturbed_iterate(const CocycleBundle& bundle, Index n_max);

/// z_{n+1} = M(omega_n) z_n (c dropped) for n steps.
Vec limiting_iterate(const CocycleBundle& bundle, const Vec& z0, Index n, bool use_true = false);

struct FluctuationSeries {
    Mat du;  // d x (n_max + 1): w_hat(Phi(omega_{n-1})) - u_n
    Mat dy;  // L x (n_max + 1): Phi(omega_n) - y_n
    Mat a;
    Mat b;
    std::optional<Index> divergence;

    /// |du_n| / |a_n|; 1 where both vanish exactly.
    Vec ratio() const;
};

FluctuationSeries fluctuations(const ReconstructedMap& map, const ForecastData& data, Index start, Index n_max);

struct StabilityGap {
    LyapunovEstimate reconstructed;
    LyapunovEstimate original;
    double gap = 0.0;  // lambda_1(T_hat) - lambda_1(f), per time unit
    // max over exponents of f of the distance to the nearest exponent of T_hat
    double containment = 0.0;
};

/// Lyapunov spectra of the M_hat cocycle along the true lifted orbit and of
/// the system Jacobian cocycle over the same `steps`. The number of T_hat
/// exponents starts at d + L and drops while the frame is degenerate. Both
/// frames first run through `warmup` steps so that directions the cocycle
/// annihilates do not bias the averages; the orbit must hold
/// start + warmup + steps points.
StabilityGap stability_gap(const ReconstructedMap& map, const SystemSpec& spec, const Mat& states,
                           const ForecastData& data, Index start, Index steps, Index warmup = 1000);

/// C(omega_n) = sup_v |D phi v| / |D Phi v| for the torus, where Phi stacks
/// phi(omega_n), ..., phi(omega_{n-Q+1}) and Df = I. Evaluated along the
/// columns of `states` from index Q - 1 on; earlier entries are NaN.
Vec sensitivity_constant(const SystemSpec& spec, const MeasurementMap& measurement, int delays, const Mat& states);

}  // namespace dynrecon
