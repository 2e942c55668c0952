#include "attrscope/pca.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "attrscope/error.hpp"

namespace attrscope {

Matrix pca_reduce(const Matrix& x, std::size_t dims) {
    if (dims == 0) throw ArgumentError("pca dimension must be positive");
    const auto n = static_cast<Eigen::Index>(x.rows());
    const auto m = static_cast<Eigen::Index>(x.cols());
    Matrix out(x.rows(), dims);
    if (n == 0) return out;

    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMajor> data(x.data().data(), n, m);
    const Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();

    // Scores are U * S from the thin SVD of the centered data. Eigen-decompose
    // whichever Gram matrix is smaller.
    Eigen::MatrixXd scores;
    if (n <= m) {
        const Eigen::MatrixXd gram = centered * centered.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
        // Eigenvalues ascend; take from the back.
        scores = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(dims));
        const auto take = std::min<Eigen::Index>(static_cast<Eigen::Index>(dims), n);
        for (Eigen::Index c = 0; c < take; ++c) {
            const Eigen::Index src = n - 1 - c;
            const double lambda = std::max(0.0, eig.eigenvalues()(src));
            scores.col(c) = eig.eigenvectors().col(src) * std::sqrt(lambda);
        }
    } else {
        const Eigen::MatrixXd cov = centered.transpose() * centered;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
        scores = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(dims));
        const auto take = std::min<Eigen::Index>(static_cast<Eigen::Index>(dims), m);
        for (Eigen::Index c = 0; c < take; ++c) {
            scores.col(c) = centered * eig.eigenvectors().col(m - 1 - c);
        }
    }

    for (Eigen::Index c = 0; c < scores.cols(); ++c) {
        Eigen::Index arg = 0;
        scores.col(c).cwiseAbs().maxCoeff(&arg);
        if (scores(arg, c) < 0.0) scores.col(c) *= -1.0;
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index c = 0; c < scores.cols(); ++c) {
            out(static_cast<std::size_t>(i), static_cast<std::size_t>(c)) = scores(i, c);
        }
    }
    return out;
}

} // namespace attrscope
