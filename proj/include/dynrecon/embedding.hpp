#pragma once

// Embedding mechanisms (Phi, g): delay coordinates and a contracting
// tanh reservoir.

#include "dynrecon/systems.hpp"

#include <cstdint>
#include <variant>

namespace dynrecon {

/// Points y_n stored as columns and aligned with trajectory indices.
/// Columns before `washout` are transient and must not be used as samples.
struct EmbeddedSeries {
    Mat points;  // L x N
    Index washout = 0;

    Index size() const { return points.cols(); }
    Index dim() const { return points.rows(); }
};

/// Delay coordinates: y_n = (u_n, u_{n-1}, ..., u_{n-Q+1}), newest block first.
class DelayEmbedder {
  public:
    DelayEmbedder(int delays, int measurement_dim);

    int delays() const { return delays_; }
    int input_dim() const { return dim_; }
    int state_dim() const { return delays_ * dim_; }

    EmbeddedSeries embed(const Mat& measured) const;
    /// Inserts u as the newest block and drops the oldest one.
    Vec g(const Vec& u, const Vec& y) const;
    /// Partial Jacobians of g. Both are constant: a first-block injector and
    /// the block down-shift.
    Mat g_du() const;
    Mat g_dy() const;

  private:
    int delays_;
    int dim_;
};

EmbeddedSeries delay_embed(const Mat& measured, int delays);
Vec delay_g(const Vec& u, const Vec& y);

/// g(u, y) = tanh(W y + B u) with ||W||_2 = contraction < 1.
class ReservoirEmbedder {
  public:
    /// W: Gaussian entries rescaled to operator norm `contraction`;
    /// B: uniform [-1, 1] entries rescaled to unit column norms.
    static ReservoirEmbedder random(int nodes, int input_dim, double contraction, std::uint64_t seed);
    /// Explicit matrices; `contraction` must bound ||recurrence||_2.
    ReservoirEmbedder(Mat recurrence, Mat input, double contraction);

    int state_dim() const { return static_cast<int>(recurrence_.rows()); }
    int input_dim() const { return static_cast<int>(input_.cols()); }
    double contraction() const { return contraction_; }
    const Mat& recurrence() const { return recurrence_; }
    const Mat& input() const { return input_; }

    Vec g(const Vec& u, const Vec& y) const;
    Mat g_du(const Vec& u, const Vec& y) const;
    Mat g_dy(const Vec& u, const Vec& y) const;
    /// Largest column norm of the input matrix; bounds ||dg/du||.
    double input_gain() const;

    /// Steps needed for contraction^n <= 1e-10.
    Index washout() const;

    /// y_{n+1} = g(measured[n], y_n) from y_0 = initial; column n holds y_n.
    EmbeddedSeries drive(const Mat& measured, const Vec& initial) const;

  private:
    Mat recurrence_;
    Mat input_;
    double contraction_;
};

ReservoirEmbedder reservoir_init(int nodes, int input_dim, double contraction, std::uint64_t seed);
Vec reservoir_g(const ReservoirEmbedder& emb, const Vec& u, const Vec& y);
EmbeddedSeries reservoir_drive(const ReservoirEmbedder& emb, const Mat& measured, const Vec& initial);

using Embedder = std::variant<DelayEmbedder, ReservoirEmbedder>;

int state_dim(const Embedder& e);
int input_dim(const Embedder& e);
Vec apply_g(const Embedder& e, const Vec& u, const Vec& y);
Mat g_du(const Embedder& e, const Vec& u, const Vec& y);
Mat g_dy(const Embedder& e, const Vec& u, const Vec& y);

/// Samples of Phi(omega_n) along a measured orbit, normalized so that
/// Phi(omega_{n+1}) = g(phi(omega_n), Phi(omega_n)) holds for every n past
/// the washout. Phi(omega_n) only depends on measurements 0..n-1: for delays
/// it is the delay vector ending at n-1, for a reservoir the driven state y_n.
EmbeddedSeries lift(const Embedder& e, const Mat& measured, const Vec& reservoir_initial = Vec());

}  // namespace dynrecon
