#ifndef ATTRSCOPE_PCA_HPP
#define ATTRSCOPE_PCA_HPP

#include <cstddef>

#include "attrscope/matrix.hpp"

namespace attrscope {

/// Projects the centered rows of `x` onto their `dims` leading principal
/// components. Each component's sign is fixed so that its largest-magnitude
/// score is positive, which makes the output reproducible. Components beyond
/// the data rank come out as zero columns.
Matrix pca_reduce(const Matrix& x, std::size_t dims);

} // namespace attrscope

#endif
