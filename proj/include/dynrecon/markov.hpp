#pragma once

// Ulam transition matrices on box partitions, indicator-basis Koopman
// matrices, stationary measures, law reconstruction and mixing diagnostics.

#include "dynrecon/systems.hpp"

#include <Eigen/Sparse>

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace dynrecon {

using SparseMat = Eigen::SparseMatrix<double>;

class BoxPartition {
  public:
    /// Boxes over the rows of `points` (k x N). Non-periodic coordinates use
    /// the data range inflated by 1% on each side; periodic ones use [0, 2 pi).
    static BoxPartition build(const Mat& points, std::vector<int> resolution, std::vector<bool> periodic = {});

    int dim() const { return static_cast<int>(resolution_.size()); }
    Index cells() const { return cells_; }
    const std::vector<int>& resolution() const { return resolution_; }
    const std::vector<bool>& periodic() const { return periodic_; }
    const Vec& lower() const { return lower_; }
    const Vec& upper() const { return upper_; }
    const std::vector<Index>& occupied() const { return occupied_; }

    /// Row-major (last coordinate fastest) index of the half-open box holding
    /// x. Throws for points outside a non-periodic range.
    Index cell_of(const Vec& x) const;
    /// As cell_of, but empty for points outside a non-periodic range.
    std::optional<Index> find_cell(const Vec& x) const;
    std::vector<Index> assign(const Mat& points) const;
    Vec centroid(Index cell) const;
    Mat centroids() const;  // k x cells
    double diameter() const;
    /// Euclidean distance with circular differences on periodic coordinates.
    double distance(const Vec& a, const Vec& b) const;

  private:
    std::vector<int> resolution_;
    std::vector<bool> periodic_;
    Vec lower_, upper_;
    Index cells_ = 0;
    std::vector<Index> occupied_;
};

struct TransitionMatrix {
    SparseMat p;  // m x m, column j = law of the next cell given cell j
    Vec column_sums;
    std::vector<Index> samples;       // non-terminal visits per column
    std::vector<Index> zero_columns;  // columns without samples, left at zero
    std::vector<Index> clipped_columns;  // koopman_to_markov: clipped mass above 1%

    Index size() const { return p.cols(); }
    /// max over sampled columns of |column sum - 1|.
    double stochasticity_error() const;
};

/// Entry (i, j) = #(cell_j -> cell_i) / #(visits to j among non-terminal points).
TransitionMatrix transition_matrix(const std::vector<Index>& cells, Index m);
TransitionMatrix transition_matrix(const Mat& points, const BoxPartition& partition);

struct StationaryDistribution {
    Vec pi;  // over all m cells; zero outside the occupied set
    double residual = 0.0;  // |P pi - pi|_1
    Index iterations = 0;
    bool converged = false;
    bool cesaro = false;  // power iteration failed; Cesaro average used
    bool solved = false;  // Cesaro average refined by a direct null-space solve
};

/// Power iteration from the uniform vector on the sampled columns (the
/// restriction of P there, renormalized). If the residual stays above tol,
/// the iterates are averaged; if that average is still above 10 tol, the
/// null space of P - I on the sampled set is solved directly.
StationaryDistribution stationary_distribution(const TransitionMatrix& t, double tol = 1e-12, Index max_iters = 100000);

struct MarkovPath {
    std::vector<Index> cells;
    bool absorbed = false;  // reached a column with no mass
};

MarkovPath simulate_markov(const TransitionMatrix& t, Index start, Index steps, std::uint64_t seed);

/// U_ij = <U 1_{V_i}, 1_{V_j}> estimated as (1/T) sum_t 1_{V_j}(x_t) 1_{V_i}(x_{t+1}).
SparseMat koopman_indicator_matrix(const std::vector<Index>& cells, Index m);

/// Negative entries are clipped, columns normalized; columns whose clipped
/// mass exceeds 1% of their absolute mass are flagged.
TransitionMatrix koopman_to_markov(const SparseMat& u);
TransitionMatrix koopman_to_markov(const Mat& u);

/// Spectrum of the indicator-basis matrix, as a diagnostic only.
std::vector<std::complex<double>> matrix_spectrum(const SparseMat& u);

struct LawTable {
    std::vector<Index> cells;
    Mat images;      // k x cells.size(): sum_i P_ij centroid(i)
    Vec dispersion;  // sqrt(sum_i P_ij d(centroid(i), image)^2)
};

/// Projected image of the identity observable. Periodic coordinates use
/// weighted circular means. Unsampled cells are skipped.
LawTable reconstruct_law(const TransitionMatrix& t, const BoxPartition& partition);

Vec occupation_histogram(const std::vector<Index>& cells, Index m);
double total_variation(const Vec& p, const Vec& q);

struct MixingCurve {
    Vec correlation;  // C(n) = time average of <psi_{t+n}, chi_t>, n = 0..N-1
    Vec cesaro;       // (1/N') sum_{n<N'} C(n), N' = 1..N
};

/// psi and chi are d x T mean-removed series of equal length with T >= 2N.
MixingCurve mixing_diagnostic(const Mat& psi, const Mat& chi, Index n);

/// Coordinate list text: "rows cols nnz" header, then "row col value" lines.
void write_coo(std::ostream& out, const SparseMat& m);
SparseMat read_coo(std::istream& in);

}  // namespace dynrecon
