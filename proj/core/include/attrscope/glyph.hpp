#ifndef ATTRSCOPE_GLYPH_HPP
#define ATTRSCOPE_GLYPH_HPP

#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "attrscope/dataset.hpp"
#include "attrscope/matrix.hpp"
#include "attrscope/metrics.hpp"

namespace attrscope {

enum class FlowerMode { ActOnly, PrdOnly, Joint };

std::string_view to_string(FlowerMode mode);
/// Accepts "act", "prd", "joint" (any case) as well as the enum spellings.
FlowerMode parse_flower_mode(std::string_view text);

// Geometry and styling constants of the attribute flower.
inline constexpr double kPetalGapDegrees = 4.0;
/// Petal 0 starts at 12 o'clock; later petals follow counter-clockwise.
inline constexpr double kFirstPetalAngle = std::numbers::pi / 2.0;
/// Inner radius of the annular petals, as a fraction of the glyph radius.
inline constexpr double kPetalInnerFraction = 0.3;
inline constexpr double kCenterDotFraction = 0.25;
inline constexpr std::string_view kBorderColor = "#000000";
inline constexpr std::string_view kPlaceholderColor = "#808080";
inline constexpr double kPlaceholderOpacity = 0.15;
inline constexpr double kDefaultGlyphRadius = 12.0;

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point2&, const Point2&) = default;
};

struct PetalSpec {
    std::size_t attribute_index = 0;
    /// Radians, counter-clockwise from the positive x axis; end > start.
    double start_angle = 0.0;
    double end_angle = 0.0;
    /// Fraction of the glyph radius, in (0, 1].
    double outer_radius = 1.0;
    std::optional<std::string> fill;
    double fill_opacity = 1.0;
    std::optional<std::string> border;
    double border_opacity = 1.0;
    /// Joint mode only.
    std::optional<Outcome> outcome;

    bool has_fill() const noexcept { return fill.has_value(); }
    /// True for the opaque black outline that marks a positive prediction.
    bool has_black_border() const noexcept { return border && *border == kBorderColor && border_opacity == 1.0; }

    friend bool operator==(const PetalSpec&, const PetalSpec&) = default;
};

struct CenterDot {
    double value = 0.0;
    /// value / max over the dataset; 0 when that max is 0.
    double normalized = 0.0;
    std::string color;
    friend bool operator==(const CenterDot&, const CenterDot&) = default;
};

struct FlowerGlyphSpec {
    std::string record_id;
    /// Embedding coordinates.
    Point2 center;
    /// Screen-space radius in pixels.
    double radius = kDefaultGlyphRadius;
    std::vector<PetalSpec> petals;
    /// Joint mode only.
    std::optional<CenterDot> center_dot;

    friend bool operator==(const FlowerGlyphSpec&, const FlowerGlyphSpec&) = default;
};

struct FlowerOptions {
    FlowerMode mode = FlowerMode::Joint;
    DistanceKind distance = DistanceKind::Euclidean;
    double threshold = kDefaultThreshold;
    double radius = kDefaultGlyphRadius;
};

/**
 * Lays out one attribute flower.
 *
 * The filter is sorted ascending; petal p covers
 * [90deg + p * 360/m, 90deg + (p + 1) * 360/m - gap) with gap = 4deg (capped at
 * half a sector for very large m). Joint mode encodes each attribute's
 * outcome:
 *
 *   TP  attribute-color fill, black border
 *   FN  attribute-color fill, no border
 *   FP  no fill, black border
 *   TN  no fill, faint gray outline
 *
 * and adds the ACT-PRD error distance as the center dot. ActOnly fills when
 * act = 1; PrdOnly fills when prd >= threshold with opacity prd. Neither draws
 * a border.
 *
 * Throws ArgumentError for an empty filter, an out-of-range or repeated index,
 * or a positive max_distance smaller than this record's distance.
 */
FlowerGlyphSpec layout_flower(const ImageRecord& record, const AttributeSchema& schema,
                              std::span<const std::size_t> filter, const FlowerOptions& options, double max_distance,
                              Point2 center = {});

/// Largest ACT-PRD distance of any record (0 for an empty dataset).
double max_error_distance(const Dataset& dataset, DistanceKind kind);

/// One glyph per record at its row of `coords` (n x 2).
std::vector<FlowerGlyphSpec> layout_flowers(const Dataset& dataset, const Matrix& coords,
                                            std::span<const std::size_t> filter, const FlowerOptions& options);

/// Color of the center dot for a normalized distance in [0, 1].
std::string center_dot_color(double normalized);

// SVG -----------------------------------------------------------------------

struct Canvas {
    double width = 800.0;
    double height = 800.0;
};

/// Data-space rectangle mapped onto the canvas (y grows upwards).
struct Viewport {
    double x_min = -1.0;
    double y_min = -1.0;
    double x_max = 1.0;
    double y_max = 1.0;

    /// Bounding box of the points padded by `margin` of its extent on each
    /// side; a unit box around the origin when there are no points.
    static Viewport fit(const Matrix& coords, double margin = 0.05);
};

/// Pixel position of a data-space point.
Point2 to_canvas(Point2 p, const Canvas& canvas, const Viewport& viewport);

/**
 * SVG 1.1 document with one <g id="glyph-<record id>"> per glyph, translated
 * to the glyph's canvas position; petals are annular-sector paths. Output is
 * byte-identical for identical input. Throws ArgumentError for a
 * non-positive canvas or a degenerate viewport.
 */
std::string render_svg(std::span<const FlowerGlyphSpec> glyphs, const Canvas& canvas, const Viewport& viewport);

/// SVG path data of an annular sector centered at the origin (SVG y-down).
std::string annular_sector_path(double inner_radius, double outer_radius, double start_angle, double end_angle);

// JSON ----------------------------------------------------------------------

/// {"id", "center": [x, y], "radius", "petals": [...], "dot": {...} | null}
void to_json(nlohmann::json& j, const FlowerGlyphSpec& glyph);
void to_json(nlohmann::json& j, const PetalSpec& petal);
FlowerGlyphSpec glyph_from_json(const nlohmann::json& j);

} // namespace attrscope

#endif
