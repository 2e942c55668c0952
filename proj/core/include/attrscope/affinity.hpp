#ifndef ATTRSCOPE_AFFINITY_HPP
#define ATTRSCOPE_AFFINITY_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "attrscope/matrix.hpp"

namespace attrscope {

/// Magnitude of the per-coordinate jitter applied before distances are taken.
inline constexpr double kDuplicateJitter = 1e-10;

/// Bandwidth search limits: at most this many bisection steps, stopping once
/// the row entropy (nats) is within kEntropyTolerance of log(perplexity).
inline constexpr int kBandwidthMaxIter = 50;
inline constexpr double kEntropyTolerance = 1e-5;

/**
 * Copy of `x` with a deterministic offset in [-1e-10, 1e-10] added to every
 * entry. The offset depends only on (row, column), so exact duplicate rows
 * become distinct without any random state.
 */
Matrix jittered(const Matrix& x);

/**
 * Gaussian conditional distribution over candidates given their squared
 * distances: p_j proportional to exp(-beta * d_j), with beta chosen by
 * bisection so that exp(H(p)) matches `perplexity`. Writes into `out` and
 * returns beta. If the spread of the distances is at most `tie_tolerance`
 * they are treated as equal and the result is uniform.
 */
double calibrate_row(std::span<const double> sq_distances, double perplexity, std::span<double> out,
                     double tie_tolerance = 0.0);

/// Largest change jitter can cause between two equal squared distances, for
/// distances up to `max_sq_distance` in `dims` dimensions.
double jitter_tie_tolerance(double max_sq_distance, std::size_t dims);

struct ConditionalAffinities {
    /// Row i holds p_{j|i}; the diagonal is zero and every row sums to 1.
    Matrix conditional;
    std::vector<double> betas;
};

/// Dense conditional affinities over all other points. Jitter is applied first.
/// Throws ArgumentError if n < 2 or perplexity is not in (0, n), and
/// DegenerateInput if some row has all-zero distances after jitter.
ConditionalAffinities conditional_affinities(const Matrix& x, double perplexity);

/// P = (C + C^T) / (2n) for a row-stochastic conditional matrix C.
Matrix symmetrize(const Matrix& conditional);

/// Symmetric joint affinities over all pairs, summing to 1.
Matrix pairwise_affinities(const Matrix& x, double perplexity);

/**
 * Joint affinities restricted to each point's `neighbors` nearest neighbours
 * (exact search, ties broken by index), then symmetrized. This is the input
 * of the Barnes-Hut path.
 */
SparseMatrix sparse_affinities(const Matrix& x, double perplexity, std::size_t neighbors);

} // namespace attrscope

#endif
