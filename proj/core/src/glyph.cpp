#include "attrscope/glyph.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <string>

#include "attrscope/error.hpp"

namespace attrscope {

std::string_view to_string(FlowerMode mode) {
    switch (mode) {
    case FlowerMode::ActOnly: return "act";
    case FlowerMode::PrdOnly: return "prd";
    case FlowerMode::Joint: return "joint";
    }
    return "?";
}

FlowerMode parse_flower_mode(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "act" || lower == "actonly" || lower == "act_only") return FlowerMode::ActOnly;
    if (lower == "prd" || lower == "prdonly" || lower == "prd_only") return FlowerMode::PrdOnly;
    if (lower == "joint") return FlowerMode::Joint;
    throw ArgumentError("unknown flower mode '" + std::string(text) + "' (expected act, prd or joint)");
}

std::string center_dot_color(double normalized) {
    // Linear ramp from light gray (agreement) to dark red (largest error).
    const double t = std::clamp(normalized, 0.0, 1.0);
    const auto lerp = [t](int a, int b) { return static_cast<int>(std::lround(a + (b - a) * t)); };
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", lerp(0xe0, 0xb2), lerp(0xe0, 0x18), lerp(0xe0, 0x2b));
    return buf;
}

namespace {

void style_joint(PetalSpec& petal, Outcome outcome, const std::string& color) {
    petal.outcome = outcome;
    switch (outcome) {
    case Outcome::TP:
        petal.fill = color;
        petal.border = std::string(kBorderColor);
        break;
    case Outcome::FN:
        petal.fill = color;
        break;
    case Outcome::FP:
        petal.border = std::string(kBorderColor);
        break;
    case Outcome::TN:
        petal.border = std::string(kPlaceholderColor);
        petal.border_opacity = kPlaceholderOpacity;
        break;
    }
}

} // namespace

FlowerGlyphSpec layout_flower(const ImageRecord& record, const AttributeSchema& schema,
                              std::span<const std::size_t> filter, const FlowerOptions& options, double max_distance,
                              Point2 center) {
    if (filter.empty()) throw ArgumentError("attribute filter must not be empty");
    std::vector<std::size_t> attrs(filter.begin(), filter.end());
    std::sort(attrs.begin(), attrs.end());
    if (std::adjacent_find(attrs.begin(), attrs.end()) != attrs.end()) {
        throw ArgumentError("attribute filter contains a repeated index");
    }
    const std::size_t k = std::min({schema.size(), record.act.size(), record.prd.size()});
    if (attrs.back() >= k) throw ArgumentError("attribute index " + std::to_string(attrs.back()) + " out of range");
    if (!(options.radius > 0.0)) throw ArgumentError("glyph radius must be positive");

    FlowerGlyphSpec glyph;
    glyph.record_id = record.id;
    glyph.center = center;
    glyph.radius = options.radius;

    const double m = static_cast<double>(attrs.size());
    const double sector = 2.0 * std::numbers::pi / m;
    const double gap = std::min(kPetalGapDegrees * std::numbers::pi / 180.0, 0.5 * sector);

    glyph.petals.reserve(attrs.size());
    for (std::size_t p = 0; p < attrs.size(); ++p) {
        const std::size_t a = attrs[p];
        PetalSpec petal;
        petal.attribute_index = a;
        petal.start_angle = kFirstPetalAngle + static_cast<double>(p) * sector;
        petal.end_angle = petal.start_angle + sector - gap;
        const std::string& color = schema.colors[a];
        switch (options.mode) {
        case FlowerMode::Joint:
            style_joint(petal, classify_outcome(record.act[a], record.prd[a], options.threshold), color);
            break;
        case FlowerMode::ActOnly:
            if (record.act[a] == 1) petal.fill = color;
            break;
        case FlowerMode::PrdOnly:
            if (!(record.prd[a] >= 0.0 && record.prd[a] <= 1.0)) throw ArgumentError("prd must lie in [0, 1]");
            if (record.prd[a] >= options.threshold) {
                petal.fill = color;
                petal.fill_opacity = record.prd[a];
            }
            break;
        }
        glyph.petals.push_back(std::move(petal));
    }

    if (options.mode == FlowerMode::Joint) {
        const double value = error_distance(record.act, record.prd, options.distance);
        if (max_distance < 0.0) throw ArgumentError("max_distance must be non-negative");
        if (max_distance > 0.0 && value > max_distance * (1.0 + 1e-12)) {
            throw ArgumentError("record '" + record.id + "' distance exceeds max_distance");
        }
        const double normalized = max_distance > 0.0 ? std::clamp(value / max_distance, 0.0, 1.0) : 0.0;
        glyph.center_dot = CenterDot{value, normalized, center_dot_color(normalized)};
    }
    return glyph;
}

double max_error_distance(const Dataset& dataset, DistanceKind kind) {
    double max = 0.0;
    for (const auto& r : dataset.records()) max = std::max(max, error_distance(r.act, r.prd, kind));
    return max;
}

std::vector<FlowerGlyphSpec> layout_flowers(const Dataset& dataset, const Matrix& coords,
                                            std::span<const std::size_t> filter, const FlowerOptions& options) {
    if (coords.rows() != dataset.size() || (coords.rows() > 0 && coords.cols() != 2)) {
        throw ArgumentError("embedding has " + std::to_string(coords.rows()) + " rows but the dataset has " +
                            std::to_string(dataset.size()) + " records");
    }
    const double max_distance = options.mode == FlowerMode::Joint ? max_error_distance(dataset, options.distance) : 0.0;
    std::vector<FlowerGlyphSpec> out;
    out.reserve(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        out.push_back(
            layout_flower(dataset.record(i), dataset.schema(), filter, options, max_distance, {coords(i, 0), coords(i, 1)}));
    }
    return out;
}

// JSON ----------------------------------------------------------------------

namespace {
nlohmann::json opt_string(const std::optional<std::string>& s) {
    return s ? nlohmann::json(*s) : nlohmann::json(nullptr);
}
} // namespace

void to_json(nlohmann::json& j, const PetalSpec& p) {
    j = nlohmann::json{
        {"attribute", p.attribute_index},
        {"start_angle", p.start_angle},
        {"end_angle", p.end_angle},
        {"outer_radius", p.outer_radius},
        {"fill", opt_string(p.fill)},
        {"fill_opacity", p.fill_opacity},
        {"border", opt_string(p.border)},
        {"border_opacity", p.border_opacity},
        {"outcome", p.outcome ? nlohmann::json(to_string(*p.outcome)) : nlohmann::json(nullptr)},
    };
}

void to_json(nlohmann::json& j, const FlowerGlyphSpec& g) {
    j = nlohmann::json{
        {"id", g.record_id},
        {"center", {g.center.x, g.center.y}},
        {"radius", g.radius},
        {"petals", g.petals},
        {"dot", g.center_dot ? nlohmann::json{{"value", g.center_dot->value},
                                              {"normalized", g.center_dot->normalized},
                                              {"color", g.center_dot->color}}
                             : nlohmann::json(nullptr)},
    };
}

FlowerGlyphSpec glyph_from_json(const nlohmann::json& j) {
    try {
        FlowerGlyphSpec g;
        g.record_id = j.at("id").get<std::string>();
        g.center = {j.at("center").at(0).get<double>(), j.at("center").at(1).get<double>()};
        g.radius = j.at("radius").get<double>();
        for (const auto& pj : j.at("petals")) {
            PetalSpec p;
            p.attribute_index = pj.at("attribute").get<std::size_t>();
            p.start_angle = pj.at("start_angle").get<double>();
            p.end_angle = pj.at("end_angle").get<double>();
            p.outer_radius = pj.at("outer_radius").get<double>();
            if (!pj.at("fill").is_null()) p.fill = pj.at("fill").get<std::string>();
            p.fill_opacity = pj.at("fill_opacity").get<double>();
            if (!pj.at("border").is_null()) p.border = pj.at("border").get<std::string>();
            p.border_opacity = pj.at("border_opacity").get<double>();
            if (!pj.at("outcome").is_null()) {
                const auto s = pj.at("outcome").get<std::string>();
                for (auto o : {Outcome::TP, Outcome::TN, Outcome::FP, Outcome::FN}) {
                    if (s == to_string(o)) p.outcome = o;
                }
                if (!p.outcome) throw ParseError("unknown outcome '" + s + "'");
            }
            g.petals.push_back(std::move(p));
        }
        if (const auto& dot = j.at("dot"); !dot.is_null()) {
            g.center_dot = CenterDot{dot.at("value").get<double>(), dot.at("normalized").get<double>(),
                                     dot.at("color").get<std::string>()};
        }
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed glyph: ") + e.what());
    }
}

} // namespace attrscope
