#include "attrscope/polygon.hpp"

#include <algorithm>

namespace attrscope {

namespace {

bool on_segment(Point2 p, Point2 a, Point2 b) {
    const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    if (cross != 0.0) return false;
    return p.x >= std::min(a.x, b.x) && p.x <= std::max(a.x, b.x) && p.y >= std::min(a.y, b.y) &&
           p.y <= std::max(a.y, b.y);
}

} // namespace

bool point_in_polygon(Point2 p, std::span<const Point2> polygon) {
    const std::size_t n = polygon.size();
    if (n < 3) return false;
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point2 a = polygon[i];
        const Point2 b = polygon[j];
        if (on_segment(p, a, b)) return true;
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

std::vector<std::size_t> points_in_polygon(const Matrix& coords, std::span<const Point2> polygon) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < coords.rows(); ++i) {
        if (point_in_polygon({coords(i, 0), coords(i, 1)}, polygon)) out.push_back(i);
    }
    return out;
}

} // namespace attrscope
