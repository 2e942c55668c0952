#include "attrscope/quadtree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace attrscope {

namespace {
constexpr int kMaxDepth = 48;
}

QuadTree::QuadTree(const Matrix& points) : points_(points) {
    const std::size_t n = points.rows();
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0U);
    if (n == 0) return;

    double min_x = points(0, 0), max_x = min_x, min_y = points(0, 1), max_y = min_y;
    for (std::size_t i = 1; i < n; ++i) {
        min_x = std::min(min_x, points(i, 0));
        max_x = std::max(max_x, points(i, 0));
        min_y = std::min(min_y, points(i, 1));
        max_y = std::max(max_y, points(i, 1));
    }
    Node root;
    root.cx = 0.5 * (min_x + max_x);
    root.cy = 0.5 * (min_y + max_y);
    // Slightly enlarged so points on the max edge fall strictly inside.
    root.half = 0.5 * std::max(max_x - min_x, max_y - min_y) * (1.0 + 1e-9) + 1e-12;
    root.begin = 0;
    root.end = static_cast<std::uint32_t>(n);
    nodes_.reserve(2 * n);
    nodes_.push_back(root);
    build(0, 0);
}

void QuadTree::build(std::int32_t index, int depth) {
    {
        Node& node = nodes_[static_cast<std::size_t>(index)];
        double sx = 0.0, sy = 0.0;
        for (auto k = node.begin; k < node.end; ++k) {
            sx += points_(order_[k], 0);
            sy += points_(order_[k], 1);
        }
        const double count = static_cast<double>(node.end - node.begin);
        node.com_x = sx / count;
        node.com_y = sy / count;
    }

    const Node node = nodes_[static_cast<std::size_t>(index)];
    const std::uint32_t count = node.end - node.begin;
    if (count <= 1 || depth >= kMaxDepth) return;

    bool coincident = true;
    const auto first = order_[node.begin];
    for (auto k = node.begin + 1; k < node.end && coincident; ++k) {
        coincident = points_(order_[k], 0) == points_(first, 0) && points_(order_[k], 1) == points_(first, 1);
    }
    if (coincident) return;

    // Partition the node's range into quadrants: SW, SE, NW, NE.
    auto* lo = order_.data() + node.begin;
    auto* hi = order_.data() + node.end;
    auto* mid_y = std::partition(lo, hi, [&](std::uint32_t p) { return points_(p, 1) < node.cy; });
    auto* mid_x_south = std::partition(lo, mid_y, [&](std::uint32_t p) { return points_(p, 0) < node.cx; });
    auto* mid_x_north = std::partition(mid_y, hi, [&](std::uint32_t p) { return points_(p, 0) < node.cx; });

    const std::array<std::uint32_t, 5> bounds = {
        node.begin,
        static_cast<std::uint32_t>(mid_x_south - order_.data()),
        static_cast<std::uint32_t>(mid_y - order_.data()),
        static_cast<std::uint32_t>(mid_x_north - order_.data()),
        node.end,
    };
    const double h = 0.5 * node.half;
    const std::array<double, 4> dx = {-h, h, -h, h};
    const std::array<double, 4> dy = {-h, -h, h, h};

    const auto first_child = static_cast<std::int32_t>(nodes_.size());
    nodes_[static_cast<std::size_t>(index)].first_child = first_child;
    for (std::size_t q = 0; q < 4; ++q) {
        Node child;
        child.cx = node.cx + dx[q];
        child.cy = node.cy + dy[q];
        child.half = h;
        child.begin = bounds[q];
        child.end = bounds[q + 1];
        nodes_.push_back(child);
    }
    for (std::int32_t q = 0; q < 4; ++q) {
        const auto& child = nodes_[static_cast<std::size_t>(first_child + q)];
        if (child.end > child.begin) build(first_child + q, depth + 1);
    }
}

QuadTree::Repulsion QuadTree::repulsion(std::size_t i, double theta) const {
    Repulsion out;
    if (nodes_.empty()) return out;
    const double yx = points_(i, 0);
    const double yy = points_(i, 1);
    const double theta_sq = theta * theta;

    std::vector<std::int32_t> stack;
    stack.reserve(64);
    stack.push_back(0);
    while (!stack.empty()) {
        const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
        stack.pop_back();
        const std::uint32_t count = node.end - node.begin;
        if (count == 0) continue;

        if (node.first_child < 0) {
            for (auto k = node.begin; k < node.end; ++k) {
                const auto j = order_[k];
                if (j == i) continue;
                const double ex = yx - points_(j, 0);
                const double ey = yy - points_(j, 1);
                const double q = 1.0 / (1.0 + ex * ex + ey * ey);
                out.z += q;
                out.fx += q * q * ex;
                out.fy += q * q * ey;
            }
            continue;
        }

        const double ex = yx - node.com_x;
        const double ey = yy - node.com_y;
        const double d2 = ex * ex + ey * ey;
        const bool contains = std::fabs(yx - node.cx) <= node.half && std::fabs(yy - node.cy) <= node.half;
        const double width = 2.0 * node.half;
        if (!contains && width * width < theta_sq * d2) {
            const double q = 1.0 / (1.0 + d2);
            const double mass = static_cast<double>(count);
            out.z += mass * q;
            out.fx += mass * q * q * ex;
            out.fy += mass * q * q * ey;
            continue;
        }
        // Push in reverse so children are visited SW, SE, NW, NE.
        for (std::int32_t q = 3; q >= 0; --q) stack.push_back(node.first_child + q);
    }
    return out;
}

} // namespace attrscope
