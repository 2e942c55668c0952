#include "attrscope/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>

#include "attrscope/error.hpp"
#include "attrscope/random.hpp"

namespace attrscope {

SparseMatrix SparseMatrix::from_dense(const Matrix& dense) {
    SparseMatrix s;
    s.rows = dense.rows();
    s.cols = dense.cols();
    s.offsets.assign(1, 0);
    for (std::size_t i = 0; i < dense.rows(); ++i) {
        for (std::size_t j = 0; j < dense.cols(); ++j) {
            if (dense(i, j) != 0.0) {
                s.indices.push_back(j);
                s.values.push_back(dense(i, j));
            }
        }
        s.offsets.push_back(s.indices.size());
    }
    return s;
}

Matrix SparseMatrix::to_dense() const {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) m(i, indices[k]) = values[k];
    }
    return m;
}

Matrix jittered(const Matrix& x) {
    Matrix out = x;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            const auto h = mix64((static_cast<std::uint64_t>(i) << 32) ^ static_cast<std::uint64_t>(j));
            const double unit = static_cast<double>(h >> 11) * 0x1.0p-53; // [0, 1)
            out(i, j) += kDuplicateJitter * (2.0 * unit - 1.0);
        }
    }
    return out;
}

double jitter_tie_tolerance(double max_sq_distance, std::size_t dims) {
    // |jitter_i - jitter_j| <= e, so each squared distance moves by at most
    // 2 * |x_i - x_j| * e + e^2; two equal distances differ by twice that.
    const double e = 2.0 * kDuplicateJitter * std::sqrt(static_cast<double>(dims));
    const double reach = std::sqrt(std::max(max_sq_distance, 0.0)) + e;
    return 2.0 * (2.0 * reach * e + e * e);
}

double calibrate_row(std::span<const double> sq_distances, double perplexity, std::span<double> out,
                     double tie_tolerance) {
    const std::size_t m = sq_distances.size();
    if (m == 0) return 1.0;

    const auto [min_it, max_it] = std::minmax_element(sq_distances.begin(), sq_distances.end());
    const double d_min = *min_it;
    double mean_shift = 0.0;
    for (double d : sq_distances) mean_shift += d - d_min;
    mean_shift /= static_cast<double>(m);
    if (!(mean_shift > 0.0) || *max_it - d_min <= tie_tolerance) {
        std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(m));
        return 1.0;
    }

    // Working on d - d_min keeps the largest weight at exp(0) = 1, so the
    // normaliser never underflows; the conditional is unchanged by the shift.
    const double target = std::log(perplexity);
    double beta = 1.0 / mean_shift;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (int iter = 0; iter < kBandwidthMaxIter; ++iter) {
        sum = 0.0;
        double weighted = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double s = sq_distances[j] - d_min;
            out[j] = std::exp(-beta * s);
            sum += out[j];
            weighted += s * out[j];
        }
        const double entropy = std::log(sum) + beta * weighted / sum;
        const double diff = entropy - target;
        if (std::fabs(diff) < kEntropyTolerance) break;
        if (diff > 0.0) {
            lo = beta;
            beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
        } else {
            hi = beta;
            beta = lo == 0.0 ? beta * 0.5 : 0.5 * (beta + lo);
        }
    }
    // The last loop pass may have updated beta after filling `out`; refill so
    // that `out` and the returned beta agree.
    sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        out[j] = std::exp(-beta * (sq_distances[j] - d_min));
        sum += out[j];
    }
    for (auto& p : out) p /= sum;
    return beta;
}

namespace {

void check_perplexity(std::size_t n, double perplexity) {
    if (n < 2) throw ArgumentError("affinities need at least 2 points");
    if (!(perplexity > 0.0) || !std::isfinite(perplexity)) throw ArgumentError("perplexity must be positive");
    if (perplexity >= static_cast<double>(n)) {
        throw ArgumentError("perplexity " + std::to_string(perplexity) + " must be smaller than the number of points (" +
                            std::to_string(n) + ")");
    }
}

[[noreturn]] void degenerate_row(std::size_t i) {
    throw DegenerateInput("point " + std::to_string(i) + " coincides with every other point; distances are all zero");
}

} // namespace

ConditionalAffinities conditional_affinities(const Matrix& x, double perplexity) {
    const std::size_t n = x.rows();
    check_perplexity(n, perplexity);
    const Matrix xj = jittered(x);

    ConditionalAffinities out{Matrix(n, n), std::vector<double>(n)};
    std::vector<double> dist(n - 1);
    std::vector<double> row(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        bool any_positive = false;
        for (std::size_t j = 0, c = 0; j < n; ++j) {
            if (j == i) continue;
            dist[c] = squared_distance(xj.row(i), xj.row(j));
            any_positive = any_positive || dist[c] > 0.0;
            ++c;
        }
        if (!any_positive) degenerate_row(i);
        const double d_max = *std::max_element(dist.begin(), dist.end());
        out.betas[i] = calibrate_row(dist, perplexity, row, jitter_tie_tolerance(d_max, x.cols()));
        for (std::size_t j = 0, c = 0; j < n; ++j) {
            if (j == i) continue;
            out.conditional(i, j) = row[c++];
        }
    }
    return out;
}

Matrix symmetrize(const Matrix& conditional) {
    const std::size_t n = conditional.rows();
    Matrix p(n, n);
    const double scale = 1.0 / (2.0 * static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = (conditional(i, j) + conditional(j, i)) * scale;
            p(i, j) = v;
            p(j, i) = v;
        }
    }
    return p;
}

Matrix pairwise_affinities(const Matrix& x, double perplexity) {
    return symmetrize(conditional_affinities(x, perplexity).conditional);
}

SparseMatrix sparse_affinities(const Matrix& x, double perplexity, std::size_t neighbors) {
    const std::size_t n = x.rows();
    check_perplexity(n, perplexity);
    const std::size_t k = std::clamp<std::size_t>(neighbors, 1, n - 1);
    const Matrix xj = jittered(x);

    // Conditional rows over each point's k nearest neighbours.
    std::vector<std::tuple<std::size_t, std::size_t, double>> triplets;
    triplets.reserve(2 * n * k);
    std::vector<std::pair<double, std::size_t>> cand(n - 1);
    std::vector<double> dist(k);
    std::vector<double> row(k);
    for (std::size_t i = 0; i < n; ++i) {
        bool any_positive = false;
        for (std::size_t j = 0, c = 0; j < n; ++j) {
            if (j == i) continue;
            cand[c] = {squared_distance(xj.row(i), xj.row(j)), j};
            any_positive = any_positive || cand[c].first > 0.0;
            ++c;
        }
        if (!any_positive) degenerate_row(i);
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
        for (std::size_t c = 0; c < k; ++c) dist[c] = cand[c].first;
        calibrate_row(dist, perplexity, row, jitter_tie_tolerance(dist[k - 1], x.cols()));
        for (std::size_t c = 0; c < k; ++c) {
            triplets.emplace_back(i, cand[c].second, row[c]);
            triplets.emplace_back(cand[c].second, i, row[c]);
        }
    }

    std::sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) {
        return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
    });

    SparseMatrix p;
    p.rows = n;
    p.cols = n;
    p.offsets.assign(n + 1, 0);
    const double scale = 1.0 / (2.0 * static_cast<double>(n));
    for (std::size_t t = 0; t < triplets.size();) {
        const auto [r, c, v0] = triplets[t];
        double v = v0;
        std::size_t u = t + 1;
        while (u < triplets.size() && std::get<0>(triplets[u]) == r && std::get<1>(triplets[u]) == c) {
            v += std::get<2>(triplets[u]);
            ++u;
        }
        p.indices.push_back(c);
        p.values.push_back(v * scale);
        ++p.offsets[r + 1];
        t = u;
    }
    for (std::size_t i = 0; i < n; ++i) p.offsets[i + 1] += p.offsets[i];
    return p;
}

} // namespace attrscope
