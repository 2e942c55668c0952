#ifndef ATTRSCOPE_POLYGON_HPP
#define ATTRSCOPE_POLYGON_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "attrscope/glyph.hpp"
#include "attrscope/matrix.hpp"

namespace attrscope {

/// Even-odd containment, with points on an edge or vertex counted as inside.
/// Polygons with fewer than three vertices contain nothing. Self-intersecting
/// polygons are fine; the even-odd rule decides their interior.
bool point_in_polygon(Point2 p, std::span<const Point2> polygon);

/// Indices of the rows of `coords` (n x 2) that lie in the polygon, ascending.
std::vector<std::size_t> points_in_polygon(const Matrix& coords, std::span<const Point2> polygon);

} // namespace attrscope

#endif
