#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <string>

#include "attrscope/error.hpp"
#include "attrscope/glyph.hpp"

namespace attrscope {

namespace {

void append_number(std::string& out, double v) {
    // Three decimals is sub-pixel at any sane canvas size.
    if (std::fabs(v) < 0.0005) v = 0.0;
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 3);
    out.append(buf, end);
}

std::string num(double v) {
    std::string s;
    append_number(s, v);
    return s;
}

std::string xml_escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace

Viewport Viewport::fit(const Matrix& coords, double margin) {
    if (coords.rows() == 0) return {};
    Viewport v{coords(0, 0), coords(0, 1), coords(0, 0), coords(0, 1)};
    for (std::size_t i = 1; i < coords.rows(); ++i) {
        v.x_min = std::min(v.x_min, coords(i, 0));
        v.x_max = std::max(v.x_max, coords(i, 0));
        v.y_min = std::min(v.y_min, coords(i, 1));
        v.y_max = std::max(v.y_max, coords(i, 1));
    }
    const double pad_x = std::max((v.x_max - v.x_min) * margin, 1e-9);
    const double pad_y = std::max((v.y_max - v.y_min) * margin, 1e-9);
    const double extra_x = v.x_max - v.x_min == 0.0 ? 1.0 : 0.0;
    const double extra_y = v.y_max - v.y_min == 0.0 ? 1.0 : 0.0;
    return {v.x_min - pad_x - extra_x, v.y_min - pad_y - extra_y, v.x_max + pad_x + extra_x, v.y_max + pad_y + extra_y};
}

Point2 to_canvas(Point2 p, const Canvas& canvas, const Viewport& vp) {
    return {(p.x - vp.x_min) / (vp.x_max - vp.x_min) * canvas.width,
            canvas.height - (p.y - vp.y_min) / (vp.y_max - vp.y_min) * canvas.height};
}

std::string annular_sector_path(double inner, double outer, double start, double end) {
    // Math angles (counter-clockwise, y up) drawn in SVG's y-down frame: a
    // visually counter-clockwise arc uses sweep-flag 0.
    const auto px = [](double r, double a) { return r * std::cos(a); };
    const auto py = [](double r, double a) { return -r * std::sin(a); };
    const char* large = (end - start) > std::numbers::pi ? "1" : "0";

    std::string d;
    d += "M";
    d += num(px(outer, start)) + "," + num(py(outer, start));
    d += "A" + num(outer) + "," + num(outer) + " 0 " + large + " 0 ";
    d += num(px(outer, end)) + "," + num(py(outer, end));
    d += "L" + num(px(inner, end)) + "," + num(py(inner, end));
    d += "A" + num(inner) + "," + num(inner) + " 0 " + large + " 1 ";
    d += num(px(inner, start)) + "," + num(py(inner, start));
    d += "Z";
    return d;
}

std::string render_svg(std::span<const FlowerGlyphSpec> glyphs, const Canvas& canvas, const Viewport& vp) {
    if (!(canvas.width > 0.0) || !(canvas.height > 0.0) || !std::isfinite(canvas.width) ||
        !std::isfinite(canvas.height)) {
        throw ArgumentError("canvas dimensions must be positive");
    }
    if (!(vp.x_max > vp.x_min) || !(vp.y_max > vp.y_min) || !std::isfinite(vp.x_max - vp.x_min) ||
        !std::isfinite(vp.y_max - vp.y_min)) {
        throw ArgumentError("viewport must have positive finite extent");
    }

    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(canvas.width) + "\" height=\"" +
           num(canvas.height) + "\" viewBox=\"0 0 " + num(canvas.width) + " " + num(canvas.height) + "\">\n";

    for (const auto& g : glyphs) {
        const auto pos = to_canvas(g.center, canvas, vp);
        out += "<g id=\"glyph-" + xml_escape(g.record_id) + "\" transform=\"translate(" + num(pos.x) + " " +
               num(pos.y) + ")\">\n";
        for (const auto& p : g.petals) {
            out += "<path d=\"" +
                   annular_sector_path(g.radius * kPetalInnerFraction, g.radius * p.outer_radius, p.start_angle,
                                       p.end_angle) +
                   "\"";
            if (p.fill) {
                out += " fill=\"" + xml_escape(*p.fill) + "\" fill-opacity=\"" + num(p.fill_opacity) + "\"";
            } else {
                out += " fill=\"none\"";
            }
            if (p.border) {
                out += " stroke=\"" + xml_escape(*p.border) + "\" stroke-opacity=\"" + num(p.border_opacity) +
                       "\" stroke-width=\"1.000\"";
            } else {
                out += " stroke=\"none\"";
            }
            out += " data-attribute=\"" + std::to_string(p.attribute_index) + "\"/>\n";
        }
        if (g.center_dot) {
            out += "<circle r=\"" + num(g.radius * kCenterDotFraction) + "\" fill=\"" +
                   xml_escape(g.center_dot->color) + "\" data-distance=\"" + num(g.center_dot->value) + "\"/>\n";
        }
        out += "</g>\n";
    }
    out += "</svg>\n";
    return out;
}

} // namespace attrscope
