#ifndef ATTRSCOPE_TSNE_HPP
#define ATTRSCOPE_TSNE_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stop_token>
#include <vector>

#include "attrscope/matrix.hpp"

namespace attrscope {

/// Number of points above which the defaults switch to Barnes-Hut.
inline constexpr std::size_t kBarnesHutThreshold = 2000;
/// KL divergence is sampled every this many iterations.
inline constexpr int kKlSampleInterval = 50;
/// Standard deviation of the Gaussian initial layout.
inline constexpr double kInitSigma = 1e-4;
inline constexpr double kMinGain = 0.01;

struct TsneConfig {
    double perplexity = 30.0;
    int n_iter = 1000;
    double learning_rate = 200.0;
    double early_exaggeration_factor = 12.0;
    int early_exaggeration_iters = 250;
    double momentum_initial = 0.5;
    double momentum_final = 0.8;
    int momentum_switch_iter = 250;
    /// 0 selects the exact O(n^2) gradient; > 0 the Barnes-Hut approximation.
    double theta = 0.0;
    std::uint64_t seed = 0;
    /// When set, inputs wider than this are first projected onto their
    /// leading principal components.
    std::optional<std::size_t> pca_predim;

    /// Throws ArgumentError on any out-of-range field. Perplexity against the
    /// point count is checked separately by tsne_embed.
    void validate() const;

    /// Library defaults for n points: perplexity min(30, (n - 1) / 3) and
    /// theta 0.5 once n exceeds kBarnesHutThreshold.
    static TsneConfig defaults_for(std::size_t n);

    friend bool operator==(const TsneConfig&, const TsneConfig&) = default;
};

struct KlSample {
    int iteration = 0;
    double kl = 0.0;
    friend bool operator==(const KlSample&, const KlSample&) = default;
};

struct TsneResult {
    Matrix coords;
    std::vector<KlSample> kl_trace;
};

/// KL(P || Q) for joint affinities P and the Student-t affinities of Y.
double kl_divergence(const Matrix& p, const Matrix& y);

/// Exact gradient of KL(P || Q) with respect to Y (n x 2).
/// Throws ArgumentError on shape mismatch.
Matrix tsne_gradient(const Matrix& p, const Matrix& y);

/// Barnes-Hut gradient: exact attraction over the nonzeros of P, quadtree
/// approximation of repulsion. With theta = 0 it equals tsne_gradient up to
/// summation order.
Matrix bh_gradient(const SparseMatrix& p, const Matrix& y, double theta);

/// KL divergence over the nonzeros of P with the normaliser from the quadtree.
double bh_kl_divergence(const SparseMatrix& p, const Matrix& y, double theta);

/**
 * Embeds the rows of `vectors` into 2-D.
 *
 * Deterministic for fixed (vectors, config). Uses gradient descent with
 * momentum and per-coordinate adaptive gains; P is multiplied by the
 * exaggeration factor for the first early_exaggeration_iters iterations and
 * KL is recorded every kKlSampleInterval iterations and at the last one. A
 * single point is placed at the origin.
 *
 * Throws ArgumentError (invalid config, empty input, perplexity >= n),
 * DegenerateInput, or Cancelled when `stop` is triggered.
 */
TsneResult tsne_embed(const Matrix& vectors, const TsneConfig& config, std::stop_token stop = {});

} // namespace attrscope

#endif
