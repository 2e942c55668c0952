#include "attrscope/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "attrscope/affinity.hpp"
#include "attrscope/error.hpp"
#include "attrscope/pca.hpp"
#include "attrscope/quadtree.hpp"
#include "attrscope/random.hpp"

namespace attrscope {

void TsneConfig::validate() const {
    if (!(perplexity > 0.0) || !std::isfinite(perplexity)) throw ArgumentError("perplexity must be positive");
    if (n_iter < 1) throw ArgumentError("n_iter must be at least 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ArgumentError("learning_rate must be positive");
    if (!(early_exaggeration_factor > 0.0) || !std::isfinite(early_exaggeration_factor)) {
        throw ArgumentError("early_exaggeration_factor must be positive");
    }
    if (early_exaggeration_iters < 0) throw ArgumentError("early_exaggeration_iters must be non-negative");
    if (!(momentum_initial >= 0.0 && momentum_initial < 1.0)) throw ArgumentError("momentum_initial must lie in [0, 1)");
    if (!(momentum_final >= 0.0 && momentum_final < 1.0)) throw ArgumentError("momentum_final must lie in [0, 1)");
    if (momentum_switch_iter < 0) throw ArgumentError("momentum_switch_iter must be non-negative");
    if (!(theta >= 0.0 && theta <= 1.0)) throw ArgumentError("theta must lie in [0, 1]");
    if (pca_predim && *pca_predim < 1) throw ArgumentError("pca_predim must be positive");
}

TsneConfig TsneConfig::defaults_for(std::size_t n) {
    TsneConfig c;
    if (n >= 2) c.perplexity = std::min(c.perplexity, static_cast<double>(n - 1) / 3.0);
    c.theta = n > kBarnesHutThreshold ? 0.5 : 0.0;
    return c;
}

namespace {

void check_shapes(const Matrix& p, const Matrix& y) {
    if (y.cols() != 2) throw ArgumentError("embedding coordinates must have 2 columns");
    if (p.rows() != y.rows() || p.cols() != y.rows()) {
        throw ArgumentError("affinity matrix is " + std::to_string(p.rows()) + "x" + std::to_string(p.cols()) +
                            " but there are " + std::to_string(y.rows()) + " points");
    }
}

void check_shapes(const SparseMatrix& p, const Matrix& y) {
    if (y.cols() != 2) throw ArgumentError("embedding coordinates must have 2 columns");
    if (p.rows != y.rows() || p.cols != y.rows() || p.offsets.size() != p.rows + 1) {
        throw ArgumentError("sparse affinity matrix does not match the number of points");
    }
}

double student_t(const Matrix& y, std::size_t i, std::size_t j) {
    const double dx = y(i, 0) - y(j, 0);
    const double dy = y(i, 1) - y(j, 1);
    return 1.0 / (1.0 + dx * dx + dy * dy);
}

double normaliser(const Matrix& y) {
    const std::size_t n = y.rows();
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) z += student_t(y, i, j);
        }
    }
    return z;
}

Matrix exact_gradient(const Matrix& p, const Matrix& y, double exaggeration) {
    const std::size_t n = y.rows();
    Matrix grad(n, 2);
    if (n < 2) return grad;
    const double z = normaliser(y);
    for (std::size_t i = 0; i < n; ++i) {
        double gx = 0.0, gy = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double num = student_t(y, i, j);
            const double mult = (exaggeration * p(i, j) - num / z) * num;
            gx += mult * (y(i, 0) - y(j, 0));
            gy += mult * (y(i, 1) - y(j, 1));
        }
        grad(i, 0) = 4.0 * gx;
        grad(i, 1) = 4.0 * gy;
    }
    return grad;
}

Matrix barnes_hut_gradient(const SparseMatrix& p, const Matrix& y, double theta, double exaggeration) {
    const std::size_t n = y.rows();
    Matrix attract(n, 2);
    Matrix repel(n, 2);
    if (n < 2) return attract;

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = p.offsets[i]; k < p.offsets[i + 1]; ++k) {
            const std::size_t j = p.indices[k];
            if (j == i) continue;
            const double mult = exaggeration * p.values[k] * student_t(y, i, j);
            attract(i, 0) += mult * (y(i, 0) - y(j, 0));
            attract(i, 1) += mult * (y(i, 1) - y(j, 1));
        }
    }

    const QuadTree tree(y);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = tree.repulsion(i, theta);
        repel(i, 0) = r.fx;
        repel(i, 1) = r.fy;
        z += r.z;
    }

    Matrix grad(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        grad(i, 0) = 4.0 * (attract(i, 0) - repel(i, 0) / z);
        grad(i, 1) = 4.0 * (attract(i, 1) - repel(i, 1) / z);
    }
    return grad;
}

int sign(double x) { return (x > 0.0) - (x < 0.0); }

void center(Matrix& y) {
    const std::size_t n = y.rows();
    for (std::size_t d = 0; d < 2; ++d) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += y(i, d);
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) y(i, d) -= mean;
    }
}

} // namespace

double kl_divergence(const Matrix& p, const Matrix& y) {
    check_shapes(p, y);
    const std::size_t n = y.rows();
    if (n < 2) return 0.0;
    const double z = normaliser(y);
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || p(i, j) <= 0.0) continue;
            const double q = student_t(y, i, j) / z;
            kl += p(i, j) * std::log(p(i, j) / q);
        }
    }
    return kl;
}

Matrix tsne_gradient(const Matrix& p, const Matrix& y) {
    check_shapes(p, y);
    return exact_gradient(p, y, 1.0);
}

Matrix bh_gradient(const SparseMatrix& p, const Matrix& y, double theta) {
    check_shapes(p, y);
    if (!(theta >= 0.0 && theta <= 1.0)) throw ArgumentError("theta must lie in [0, 1]");
    return barnes_hut_gradient(p, y, theta, 1.0);
}

double bh_kl_divergence(const SparseMatrix& p, const Matrix& y, double theta) {
    check_shapes(p, y);
    const std::size_t n = y.rows();
    if (n < 2) return 0.0;
    const QuadTree tree(y);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) z += tree.repulsion(i, theta).z;
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = p.offsets[i]; k < p.offsets[i + 1]; ++k) {
            const std::size_t j = p.indices[k];
            if (j == i || p.values[k] <= 0.0) continue;
            const double q = student_t(y, i, j) / z;
            kl += p.values[k] * std::log(p.values[k] / q);
        }
    }
    return kl;
}

TsneResult tsne_embed(const Matrix& vectors, const TsneConfig& config, std::stop_token stop) {
    config.validate();
    const std::size_t n = vectors.rows();
    if (n == 0) throw ArgumentError("t-SNE needs at least one point");
    if (vectors.cols() == 0) throw ArgumentError("input vectors have no dimensions");

    TsneResult result{Matrix(n, 2), {}};
    if (n == 1) return result;

    if (config.perplexity >= static_cast<double>(n)) {
        throw ArgumentError("perplexity " + std::to_string(config.perplexity) +
                            " must be smaller than the number of points (" + std::to_string(n) + ")");
    }

    const bool reduce = config.pca_predim && vectors.cols() > *config.pca_predim;
    const Matrix reduced = reduce ? pca_reduce(vectors, *config.pca_predim) : Matrix();
    const Matrix& input = reduce ? reduced : vectors;

    const bool exact = config.theta == 0.0;
    Matrix p_dense;
    SparseMatrix p_sparse;
    if (exact) {
        p_dense = pairwise_affinities(input, config.perplexity);
    } else {
        const auto neighbors = static_cast<std::size_t>(std::floor(3.0 * config.perplexity));
        p_sparse = sparse_affinities(input, config.perplexity, std::max<std::size_t>(neighbors, 1));
    }

    Matrix& y = result.coords;
    Rng rng(config.seed);
    for (auto& v : y.data()) v = rng.normal(0.0, kInitSigma);

    Matrix velocity(n, 2);
    Matrix gains(n, 2, 1.0);

    for (int iter = 0; iter < config.n_iter; ++iter) {
        if (stop.stop_requested()) throw Cancelled("t-SNE cancelled at iteration " + std::to_string(iter));

        const double exaggeration = iter < config.early_exaggeration_iters ? config.early_exaggeration_factor : 1.0;
        const double momentum = iter < config.momentum_switch_iter ? config.momentum_initial : config.momentum_final;
        const Matrix grad = exact ? exact_gradient(p_dense, y, exaggeration)
                                  : barnes_hut_gradient(p_sparse, y, config.theta, exaggeration);

        auto g = grad.data();
        auto u = velocity.data();
        auto gain = gains.data();
        auto pos = y.data();
        for (std::size_t k = 0; k < g.size(); ++k) {
            gain[k] = sign(g[k]) != sign(u[k]) ? gain[k] + 0.2 : gain[k] * 0.8;
            gain[k] = std::max(gain[k], kMinGain);
            u[k] = momentum * u[k] - config.learning_rate * gain[k] * g[k];
            pos[k] += u[k];
        }
        center(y);

        const int done = iter + 1;
        if (done % kKlSampleInterval == 0 || done == config.n_iter) {
            const double kl = exact ? kl_divergence(p_dense, y) : bh_kl_divergence(p_sparse, y, config.theta);
            result.kl_trace.push_back({done, std::max(0.0, kl)});
        }
    }

    for (double v : y.data()) {
        if (!std::isfinite(v)) throw DegenerateInput("t-SNE diverged to non-finite coordinates");
    }
    return result;
}

} // namespace attrscope
