#ifndef ATTRSCOPE_DATASET_HPP
#define ATTRSCOPE_DATASET_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace attrscope {

inline constexpr std::size_t kDefaultAttributeCount = 17;
inline constexpr std::size_t kDefaultFeatureDim = 2048;

/// Attribute names that appear in x-ray scattering annotation practice; the
/// default schema uses these first and pads with "attr<N>".
std::span<const std::string_view> known_attribute_names();

/// Default display color for attribute `index` (sRGB "#rrggbb").
std::string default_attribute_color(std::size_t index);

/**
 * Ordered attribute names with one display color each.
 *
 * Names are unique and non-empty, colors are "#rrggbb" strings and there is
 * exactly one per name. validate() enforces this; Dataset calls it on
 * construction.
 */
struct AttributeSchema {
    std::vector<std::string> names;
    std::vector<std::string> colors;

    std::size_t size() const noexcept { return names.size(); }
    std::optional<std::size_t> index_of(std::string_view name) const;
    void validate() const;

    static AttributeSchema with_defaults(std::size_t k = kDefaultAttributeCount);
    static AttributeSchema from_names(std::vector<std::string> names);

    friend bool operator==(const AttributeSchema&, const AttributeSchema&) = default;
};

/// Parses "0,3,5" or attribute names ("ring,halo"); sorted, duplicates dropped.
/// Throws ArgumentError on an empty list or an unknown entry.
std::vector<std::size_t> parse_attribute_list(const AttributeSchema& schema, std::string_view text);
/// Same for a JSON array of indices and/or names.
std::vector<std::size_t> attribute_list_from_json(const AttributeSchema& schema, const nlohmann::json& list);

/// One image: ground-truth labels (act), model probabilities (prd) and
/// feature activations (fea).
struct ImageRecord {
    std::string id;
    std::optional<std::string> image_path;
    std::vector<std::uint8_t> act;
    std::vector<double> prd;
    std::vector<float> fea;

    friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

/**
 * Immutable, validated collection of records sharing one schema and one
 * feature dimension. Safe to share across threads for reading.
 */
class Dataset {
public:
    /// Validates every invariant; throws SchemaError on the first violation.
    Dataset(AttributeSchema schema, std::vector<ImageRecord> records, std::size_t fea_dim,
            std::filesystem::path base_dir = {});

    const AttributeSchema& schema() const noexcept { return schema_; }
    std::span<const ImageRecord> records() const noexcept { return records_; }
    const ImageRecord& record(std::size_t i) const { return records_.at(i); }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    std::size_t attribute_count() const noexcept { return schema_.size(); }
    std::size_t fea_dim() const noexcept { return fea_dim_; }

    /// Directory that relative image paths resolve against (may be empty).
    const std::filesystem::path& base_dir() const noexcept { return base_dir_; }

    std::optional<std::size_t> index_of(std::string_view id) const;
    const ImageRecord* find(std::string_view id) const;

    /// SHA-256 over schema, fea_dim and every record field (FEA bitwise).
    const std::string& content_hash() const noexcept { return hash_; }

    /// Equality of content; base_dir is not part of a dataset's identity.
    friend bool operator==(const Dataset& a, const Dataset& b) {
        return a.fea_dim_ == b.fea_dim_ && a.schema_ == b.schema_ && a.records_ == b.records_;
    }

private:
    AttributeSchema schema_;
    std::vector<ImageRecord> records_;
    std::size_t fea_dim_;
    std::filesystem::path base_dir_;
    std::unordered_map<std::string, std::size_t> index_;
    std::string hash_;
};

// Manifest I/O --------------------------------------------------------------

enum class FeaStorage { Sidecar, Inline };

/// Reads a manifest and, if it names one, its little-endian float32 sidecar.
Dataset load_manifest(const std::filesystem::path& path);

/// Parses manifest JSON text; a relative fea_file resolves against base_dir.
Dataset parse_manifest(std::string_view text, const std::filesystem::path& base_dir);
Dataset dataset_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/**
 * Writes `dataset` as a manifest. With FeaStorage::Sidecar the features go to
 * "<manifest stem>.fea.bin" next to the manifest and the manifest references
 * it by file name.
 */
void save_manifest(const Dataset& dataset, const std::filesystem::path& path,
                   FeaStorage storage = FeaStorage::Sidecar);

/// Manifest document; `fea_file` set means features are left out of the JSON.
nlohmann::json manifest_json(const Dataset& dataset, const std::optional<std::string>& fea_file);

/// n x d little-endian float32, row-major, no header.
std::vector<float> read_fea_sidecar(const std::filesystem::path& path, std::size_t n, std::size_t d);
void write_fea_sidecar(const std::filesystem::path& path, std::span<const ImageRecord> records);

// Synthetic data ------------------------------------------------------------

struct SyntheticParams {
    std::size_t n = 200;
    std::size_t k = kDefaultAttributeCount;
    std::size_t d = kDefaultFeatureDim;
    std::size_t n_clusters = 4;
    double noise = 0.1;
    std::uint64_t seed = 0;
};

/**
 * Clustered synthetic dataset. Every cluster owns a random attribute pattern
 * (its members' ACT) and a Gaussian FEA center; PRD copies ACT except that
 * each entry is, with probability `noise`, replaced by a uniform draw in
 * [0, 1]. With noise == 0 PRD equals ACT exactly. Records are assigned to
 * clusters round-robin. ACT/PRD and FEA use separate random streams, so the
 * labels for a seed do not depend on d.
 *
 * Throws ArgumentError when n_clusters is outside [1, n] (n > 0), k < 1,
 * d < 2 or noise is outside [0, 1].
 */
Dataset generate_synthetic(const SyntheticParams& params);

/// Cluster index that generate_synthetic assigned to record i.
inline std::size_t synthetic_cluster_of(std::size_t i, std::size_t n_clusters) { return i % n_clusters; }

} // namespace attrscope

#endif
