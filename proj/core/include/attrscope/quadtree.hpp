#ifndef ATTRSCOPE_QUADTREE_HPP
#define ATTRSCOPE_QUADTREE_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "attrscope/matrix.hpp"

namespace attrscope {

/**
 * Region quadtree over 2-D points used for the Barnes-Hut approximation of
 * the t-SNE repulsive forces.
 *
 * Nodes live in one vector and refer to their four children by index. Each
 * node owns a contiguous range of a point permutation, so leaves can hold
 * several coincident points without unbounded subdivision.
 */
class QuadTree {
public:
    /// `points` must be n x 2. The tree keeps a reference; it must outlive the tree.
    explicit QuadTree(const Matrix& points);

    struct Repulsion {
        double fx = 0.0;
        double fy = 0.0;
        /// Sum over other points of 1 / (1 + |y_i - y_j|^2), approximated.
        double z = 0.0;
    };

    /**
     * Unnormalised repulsive force on point `i`: sum_j q_ij^2 (y_i - y_j),
     * with q_ij = 1 / (1 + |y_i - y_j|^2). A cell is summarised by its center
     * of mass when it does not contain y_i and width / distance < theta.
     * theta = 0 visits every point.
     */
    Repulsion repulsion(std::size_t i, double theta) const;

    std::size_t node_count() const noexcept { return nodes_.size(); }

private:
    struct Node {
        double cx = 0.0;
        double cy = 0.0;
        double half = 0.0;
        double com_x = 0.0;
        double com_y = 0.0;
        std::uint32_t begin = 0;
        std::uint32_t end = 0;
        std::int32_t first_child = -1;
    };

    void build(std::int32_t node, int depth);

    const Matrix& points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

} // namespace attrscope

#endif
