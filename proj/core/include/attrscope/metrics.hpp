#ifndef ATTRSCOPE_METRICS_HPP
#define ATTRSCOPE_METRICS_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "attrscope/dataset.hpp"

namespace attrscope {

/// Cut-off above which (inclusive) a probability counts as a positive prediction.
inline constexpr double kDefaultThreshold = 0.5;

enum class Outcome { TP, TN, FP, FN };

std::string_view to_string(Outcome outcome);

/**
 * Confusion outcome of one (record, attribute) pair. prd == threshold is a
 * positive prediction. Throws ArgumentError if act is not 0/1 or prd or
 * threshold lie outside [0, 1].
 */
Outcome classify_outcome(int act, double prd, double threshold = kDefaultThreshold);

struct ConfusionSummary {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    double threshold = kDefaultThreshold;

    std::uint64_t total() const noexcept { return tp + tn + fp + fn; }
    void add(Outcome o) noexcept;

    friend bool operator==(const ConfusionSummary&, const ConfusionSummary&) = default;
};

/// Each field is empty (Undefined) when its denominator is zero.
struct MetricsReport {
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/**
 * Micro-aggregated counts over records x attribute_indices. Throws
 * ArgumentError if an index is out of range for any record.
 */
ConfusionSummary confusion(std::span<const ImageRecord> records, std::span<const std::size_t> attribute_indices,
                           double threshold = kDefaultThreshold);

/// Counts over the records at `record_indices` of `dataset`.
ConfusionSummary confusion(const Dataset& dataset, std::span<const std::size_t> record_indices,
                           std::span<const std::size_t> attribute_indices, double threshold = kDefaultThreshold);

/// Accuracy, precision, recall and F1 from the counts.
MetricsReport report(const ConfusionSummary& c);

enum class DistanceKind { Euclidean, Cosine };

std::string_view to_string(DistanceKind kind);
DistanceKind parse_distance_kind(std::string_view text);

/**
 * Distance between a label vector and a prediction vector. Cosine distance is
 * 1 - cos; it is 0 when both vectors are zero and 1 when exactly one is.
 */
double error_distance(std::span<const std::uint8_t> act, std::span<const double> prd, DistanceKind kind);
double error_distance(std::span<const double> act, std::span<const double> prd, DistanceKind kind);

/**
 * Non-interpolated average precision: rank by score descending (ties by
 * original index), average precision@k over the ranks k of the positives.
 * Empty when there are no positives. Throws ArgumentError on length mismatch.
 */
std::optional<double> average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Per-attribute AP over the whole dataset (empty entries for attributes without positives).
std::vector<std::optional<double>> per_attribute_ap(const Dataset& dataset);

/// Mean of per-attribute AP over attributes with at least one positive.
std::optional<double> mean_average_precision(const Dataset& dataset);

/// All attribute indices of the dataset, in order.
std::vector<std::size_t> all_attributes(const Dataset& dataset);

void to_json(nlohmann::json& j, const ConfusionSummary& c);
/// Undefined metrics serialize as null.
void to_json(nlohmann::json& j, const MetricsReport& r);
ConfusionSummary confusion_from_json(const nlohmann::json& j);
MetricsReport report_from_json(const nlohmann::json& j);

/// Dataset-level summary: micro confusion and report over `attributes`, mAP,
/// and per-attribute confusion/report/AP.
nlohmann::json metrics_summary(const Dataset& dataset, std::span<const std::size_t> attributes, double threshold);

} // namespace attrscope

#endif
