#include "attrscope/metrics.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>

#include "attrscope/error.hpp"

namespace attrscope {

std::string_view to_string(Outcome outcome) {
    switch (outcome) {
    case Outcome::TP: return "TP";
    case Outcome::TN: return "TN";
    case Outcome::FP: return "FP";
    case Outcome::FN: return "FN";
    }
    return "?";
}

Outcome classify_outcome(int act, double prd, double threshold) {
    if (act != 0 && act != 1) throw ArgumentError("act must be 0 or 1");
    if (!(prd >= 0.0 && prd <= 1.0)) throw ArgumentError("prd must lie in [0, 1]");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ArgumentError("threshold must lie in [0, 1]");
    const bool predicted = prd >= threshold;
    if (act == 1) return predicted ? Outcome::TP : Outcome::FN;
    return predicted ? Outcome::FP : Outcome::TN;
}

void ConfusionSummary::add(Outcome o) noexcept {
    switch (o) {
    case Outcome::TP: ++tp; break;
    case Outcome::TN: ++tn; break;
    case Outcome::FP: ++fp; break;
    case Outcome::FN: ++fn; break;
    }
}

ConfusionSummary confusion(std::span<const ImageRecord> records, std::span<const std::size_t> attribute_indices,
                           double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ArgumentError("threshold must lie in [0, 1]");
    ConfusionSummary c;
    c.threshold = threshold;
    for (const auto& r : records) {
        for (auto a : attribute_indices) {
            if (a >= r.act.size() || a >= r.prd.size()) {
                throw ArgumentError("attribute index " + std::to_string(a) + " out of range for record '" + r.id + "'");
            }
            c.add(classify_outcome(r.act[a], r.prd[a], threshold));
        }
    }
    return c;
}

ConfusionSummary confusion(const Dataset& dataset, std::span<const std::size_t> record_indices,
                           std::span<const std::size_t> attribute_indices, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ArgumentError("threshold must lie in [0, 1]");
    for (auto a : attribute_indices) {
        if (a >= dataset.attribute_count()) throw ArgumentError("attribute index " + std::to_string(a) + " out of range");
    }
    ConfusionSummary c;
    c.threshold = threshold;
    for (auto i : record_indices) {
        if (i >= dataset.size()) throw ArgumentError("record index " + std::to_string(i) + " out of range");
        const auto& r = dataset.record(i);
        for (auto a : attribute_indices) c.add(classify_outcome(r.act[a], r.prd[a], threshold));
    }
    return c;
}

MetricsReport report(const ConfusionSummary& c) {
    MetricsReport r;
    const auto tp = static_cast<double>(c.tp);
    const auto tn = static_cast<double>(c.tn);
    const auto fp = static_cast<double>(c.fp);
    const auto fn = static_cast<double>(c.fn);
    if (c.total() > 0) r.accuracy = (tp + tn) / (tp + tn + fp + fn);
    if (c.tp + c.fp > 0) r.precision = tp / (tp + fp);
    if (c.tp + c.fn > 0) r.recall = tp / (tp + fn);
    if (r.precision && r.recall && *r.precision + *r.recall > 0.0) {
        r.f1 = 2.0 * (*r.precision * *r.recall) / (*r.precision + *r.recall);
    }
    return r;
}

std::string_view to_string(DistanceKind kind) { return kind == DistanceKind::Euclidean ? "euclidean" : "cosine"; }

DistanceKind parse_distance_kind(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (lower == "euclidean") return DistanceKind::Euclidean;
    if (lower == "cosine") return DistanceKind::Cosine;
    throw ArgumentError("unknown distance '" + std::string(text) + "' (expected euclidean or cosine)");
}

namespace {

template <class A>
double distance_impl(std::span<const A> act, std::span<const double> prd, DistanceKind kind) {
    if (act.size() != prd.size()) throw ArgumentError("act and prd must have equal length");
    if (kind == DistanceKind::Euclidean) {
        double sum = 0.0;
        for (std::size_t i = 0; i < act.size(); ++i) {
            const double d = static_cast<double>(act[i]) - prd[i];
            sum += d * d;
        }
        return std::sqrt(sum);
    }
    double dot = 0.0, na = 0.0, np = 0.0;
    for (std::size_t i = 0; i < act.size(); ++i) {
        const double a = static_cast<double>(act[i]);
        dot += a * prd[i];
        na += a * a;
        np += prd[i] * prd[i];
    }
    if (na == 0.0 && np == 0.0) return 0.0;
    if (na == 0.0 || np == 0.0) return 1.0;
    // sqrt(na * np) keeps cos exactly 1 when act == prd.
    const double cos = dot / std::sqrt(na * np);
    return std::clamp(1.0 - cos, 0.0, 2.0);
}

} // namespace

double error_distance(std::span<const std::uint8_t> act, std::span<const double> prd, DistanceKind kind) {
    return distance_impl(act, prd, kind);
}

double error_distance(std::span<const double> act, std::span<const double> prd, DistanceKind kind) {
    return distance_impl(act, prd, kind);
}

std::optional<double> average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw ArgumentError("scores and labels must have equal length");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (labels[order[rank]] != 0) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
        }
    }
    if (hits == 0) return std::nullopt;
    return sum / static_cast<double>(hits);
}

std::vector<std::optional<double>> per_attribute_ap(const Dataset& dataset) {
    const std::size_t k = dataset.attribute_count();
    std::vector<std::optional<double>> out(k);
    std::vector<double> scores(dataset.size());
    std::vector<std::uint8_t> labels(dataset.size());
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            scores[i] = dataset.record(i).prd[a];
            labels[i] = dataset.record(i).act[a];
        }
        out[a] = average_precision(scores, labels);
    }
    return out;
}

std::optional<double> mean_average_precision(const Dataset& dataset) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& ap : per_attribute_ap(dataset)) {
        if (ap) {
            sum += *ap;
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

std::vector<std::size_t> all_attributes(const Dataset& dataset) {
    std::vector<std::size_t> idx(dataset.attribute_count());
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

namespace {
nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> read_opt(const nlohmann::json& j, const char* key) {
    const auto& v = j.at(key);
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
}
} // namespace

void to_json(nlohmann::json& j, const ConfusionSummary& c) {
    j = nlohmann::json{{"tp", c.tp}, {"tn", c.tn}, {"fp", c.fp}, {"fn", c.fn}, {"threshold", c.threshold}};
}

void to_json(nlohmann::json& j, const MetricsReport& r) {
    j = nlohmann::json{
        {"accuracy", opt(r.accuracy)},
        {"precision", opt(r.precision)},
        {"recall", opt(r.recall)},
        {"f1", opt(r.f1)},
    };
}

ConfusionSummary confusion_from_json(const nlohmann::json& j) {
    try {
        ConfusionSummary c;
        c.tp = j.at("tp").get<std::uint64_t>();
        c.tn = j.at("tn").get<std::uint64_t>();
        c.fp = j.at("fp").get<std::uint64_t>();
        c.fn = j.at("fn").get<std::uint64_t>();
        c.threshold = j.at("threshold").get<double>();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed confusion summary: ") + e.what());
    }
}

MetricsReport report_from_json(const nlohmann::json& j) {
    try {
        return {read_opt(j, "accuracy"), read_opt(j, "precision"), read_opt(j, "recall"), read_opt(j, "f1")};
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed metrics report: ") + e.what());
    }
}

nlohmann::json metrics_summary(const Dataset& dataset, std::span<const std::size_t> attributes, double threshold) {
    const auto c = confusion(dataset.records(), attributes, threshold);
    const auto aps = per_attribute_ap(dataset);
    const auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };

    auto per_attribute = nlohmann::json::array();
    for (auto a : attributes) {
        const std::array<std::size_t, 1> one{a};
        const auto ca = confusion(dataset.records(), one, threshold);
        per_attribute.push_back({
            {"index", a},
            {"name", dataset.schema().names[a]},
            {"confusion", ca},
            {"report", report(ca)},
            {"ap", opt(aps[a])},
        });
    }
    return {
        {"record_count", dataset.size()},
        {"attributes", std::vector<std::size_t>(attributes.begin(), attributes.end())},
        {"confusion", c},
        {"report", report(c)},
        {"map", opt(mean_average_precision(dataset))},
        {"per_attribute", std::move(per_attribute)},
    };
}

} // namespace attrscope
