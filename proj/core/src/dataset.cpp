#include "attrscope/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <unordered_set>

#include "attrscope/error.hpp"
#include "attrscope/hashing.hpp"

namespace attrscope {

namespace {

constexpr std::array<std::string_view, 9> kKnownNames = {
    "SAXS",
    "WAXS",
    "halo",
    "ring",
    "Circular Beamstop",
    "High Background",
    "linear beam stop",
    "beam off image",
    "diffuse scattering",
};

// Categorical palette (Tableau 20 ordering).
constexpr std::array<std::string_view, 20> kPalette = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
    "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78", "#98df8a", "#ff9896",
    "#c5b0d5", "#c49c94", "#f7b6d2", "#c7c7c7", "#dbdb8d", "#9edae5",
};

bool is_hex_color(std::string_view s) {
    if (s.size() != 7 || s[0] != '#') return false;
    for (char c : s.substr(1)) {
        const bool hex = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
        if (!hex) return false;
    }
    return true;
}

bool is_safe_relative_path(const std::string& p) {
    if (p.empty()) return false;
    const std::filesystem::path path(p);
    if (path.is_absolute() || path.has_root_name() || path.has_root_directory()) return false;
    for (const auto& part : path) {
        if (part == "..") return false;
    }
    return true;
}

std::string record_context(std::size_t index, const std::string& id) {
    return "image " + std::to_string(index) + (id.empty() ? std::string() : " ('" + id + "')");
}

bool is_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

std::size_t resolve_attribute(const AttributeSchema& schema, std::string_view token) {
    if (is_digits(token)) {
        const auto idx = static_cast<std::size_t>(std::stoull(std::string(token)));
        if (idx >= schema.size()) throw ArgumentError("attribute index " + std::string(token) + " out of range");
        return idx;
    }
    if (auto idx = schema.index_of(token)) return *idx;
    throw ArgumentError("unknown attribute '" + std::string(token) + "'");
}

std::vector<std::size_t> sorted_unique(std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

std::vector<std::size_t> parse_attribute_list(const AttributeSchema& schema, std::string_view text) {
    std::vector<std::size_t> out;
    std::size_t start = 0;
    const std::string all = trim(text);
    if (all.empty()) throw ArgumentError("attribute filter must not be empty");
    while (start <= all.size()) {
        const auto comma = all.find(',', start);
        const auto token = trim(std::string_view(all).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (token.empty()) throw ArgumentError("attribute filter has an empty entry");
        out.push_back(resolve_attribute(schema, token));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return sorted_unique(std::move(out));
}

std::vector<std::size_t> attribute_list_from_json(const AttributeSchema& schema, const nlohmann::json& list) {
    if (!list.is_array()) throw ArgumentError("attribute filter must be an array");
    if (list.empty()) throw ArgumentError("attribute filter must not be empty");
    std::vector<std::size_t> out;
    for (const auto& v : list) {
        if (v.is_number_integer()) {
            const auto idx = v.get<std::int64_t>();
            if (idx < 0 || static_cast<std::size_t>(idx) >= schema.size()) {
                throw ArgumentError("attribute index " + std::to_string(idx) + " out of range");
            }
            out.push_back(static_cast<std::size_t>(idx));
        } else if (v.is_string()) {
            out.push_back(resolve_attribute(schema, v.get<std::string>()));
        } else {
            throw ArgumentError("attribute filter entries must be indices or names");
        }
    }
    return sorted_unique(std::move(out));
}

std::span<const std::string_view> known_attribute_names() { return kKnownNames; }

std::string default_attribute_color(std::size_t index) { return std::string(kPalette[index % kPalette.size()]); }

std::optional<std::size_t> AttributeSchema::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return i;
    }
    return std::nullopt;
}

void AttributeSchema::validate() const {
    if (names.empty()) throw SchemaError("attribute schema must name at least one attribute");
    if (colors.size() != names.size()) {
        throw SchemaError("attribute schema has " + std::to_string(names.size()) + " names but " +
                          std::to_string(colors.size()) + " colors");
    }
    std::unordered_set<std::string_view> seen;
    for (const auto& name : names) {
        if (name.empty()) throw SchemaError("attribute names must be non-empty");
        if (!seen.insert(name).second) throw SchemaError("duplicate attribute name '" + name + "'");
    }
    for (const auto& color : colors) {
        if (!is_hex_color(color)) throw SchemaError("attribute color '" + color + "' is not #rrggbb");
    }
}

AttributeSchema AttributeSchema::with_defaults(std::size_t k) {
    std::vector<std::string> names;
    names.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        names.emplace_back(i < kKnownNames.size() ? std::string(kKnownNames[i]) : "attr" + std::to_string(i + 1));
    }
    return from_names(std::move(names));
}

AttributeSchema AttributeSchema::from_names(std::vector<std::string> names) {
    AttributeSchema schema;
    schema.colors.reserve(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) schema.colors.push_back(default_attribute_color(i));
    schema.names = std::move(names);
    return schema;
}

// Dataset ------------------------------------------------------------------

Dataset::Dataset(AttributeSchema schema, std::vector<ImageRecord> records, std::size_t fea_dim,
                 std::filesystem::path base_dir)
    : schema_(std::move(schema)), records_(std::move(records)), fea_dim_(fea_dim), base_dir_(std::move(base_dir)) {
    schema_.validate();
    if (fea_dim_ == 0) throw SchemaError("fea_dim must be positive");

    const std::size_t k = schema_.size();
    index_.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        const auto where = record_context(i, r.id);
        if (r.id.empty()) throw SchemaError(where + ": id must be non-empty");
        if (!index_.emplace(r.id, i).second) throw SchemaError(where + ": duplicate id");
        if (r.image_path && !is_safe_relative_path(*r.image_path)) {
            throw SchemaError(where + ": image path must be relative without '..'");
        }
        if (r.act.size() != k) {
            throw SchemaError(where + ": act has " + std::to_string(r.act.size()) + " entries, schema has " +
                              std::to_string(k));
        }
        if (r.prd.size() != k) {
            throw SchemaError(where + ": prd has " + std::to_string(r.prd.size()) + " entries, schema has " +
                              std::to_string(k));
        }
        if (r.fea.size() != fea_dim_) {
            throw SchemaError(where + ": fea has " + std::to_string(r.fea.size()) + " entries, fea_dim is " +
                              std::to_string(fea_dim_));
        }
        for (auto a : r.act) {
            if (a > 1) throw SchemaError(where + ": act entries must be 0 or 1");
        }
        for (double p : r.prd) {
            if (!(p >= 0.0 && p <= 1.0)) throw SchemaError(where + ": prd entries must lie in [0, 1]");
        }
        for (float f : r.fea) {
            if (!std::isfinite(f)) throw SchemaError(where + ": fea entries must be finite");
        }
    }

    Sha256 h;
    h.update("attrscope-dataset-v1");
    h.update_u64(k);
    for (std::size_t j = 0; j < k; ++j) h.update(schema_.names[j]).update(schema_.colors[j]);
    h.update_u64(fea_dim_).update_u64(records_.size());
    for (const auto& r : records_) {
        h.update(r.id);
        h.update_u64(r.image_path.has_value() ? 1 : 0);
        if (r.image_path) h.update(*r.image_path);
        h.update(std::as_bytes(std::span(r.act)));
        for (double p : r.prd) h.update_f64(p);
        for (float f : r.fea) h.update_f32(f);
    }
    hash_ = h.hex_digest();
}

std::optional<std::size_t> Dataset::index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

const ImageRecord* Dataset::find(std::string_view id) const {
    auto idx = index_of(id);
    return idx ? &records_[*idx] : nullptr;
}

// Manifest parsing ---------------------------------------------------------

namespace {

const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(where + ": missing \"" + key + "\"");
    return *it;
}

std::vector<std::uint8_t> parse_act(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array()) throw SchemaError(where + ": act must be an array");
    std::vector<std::uint8_t> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number_integer()) throw SchemaError(where + ": act entries must be integers 0 or 1");
        const auto x = v.get<std::int64_t>();
        if (x != 0 && x != 1) throw SchemaError(where + ": act entries must be 0 or 1");
        out.push_back(static_cast<std::uint8_t>(x));
    }
    return out;
}

std::vector<double> parse_prd(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array()) throw SchemaError(where + ": prd must be an array");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number()) throw SchemaError(where + ": prd entries must be numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

std::vector<float> parse_fea(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array()) throw SchemaError(where + ": fea must be an array");
    std::vector<float> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number()) throw SchemaError(where + ": fea entries must be numbers");
        const double x = v.get<double>();
        if (!std::isfinite(x) || std::fabs(x) > std::numeric_limits<float>::max()) {
            throw SchemaError(where + ": fea entries must be finite float32 values");
        }
        out.push_back(static_cast<float>(x));
    }
    return out;
}

} // namespace

Dataset dataset_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
    const std::string top = "manifest";
    if (!doc.is_object()) throw SchemaError("manifest must be a JSON object");

    const auto& fea_dim_j = require(doc, "fea_dim", top);
    if (!fea_dim_j.is_number_integer() || fea_dim_j.get<std::int64_t>() <= 0) {
        throw SchemaError("manifest: fea_dim must be a positive integer");
    }
    const auto fea_dim = static_cast<std::size_t>(fea_dim_j.get<std::int64_t>());

    const auto& attrs_j = require(doc, "attributes", top);
    if (!attrs_j.is_array()) throw SchemaError("manifest: attributes must be an array of strings");
    std::vector<std::string> names;
    for (const auto& a : attrs_j) {
        if (!a.is_string()) throw SchemaError("manifest: attributes must be an array of strings");
        names.push_back(a.get<std::string>());
    }
    AttributeSchema schema = AttributeSchema::from_names(std::move(names));
    if (auto it = doc.find("colors"); it != doc.end() && !it->is_null()) {
        if (!it->is_array()) throw SchemaError("manifest: colors must be an array of strings");
        schema.colors.clear();
        for (const auto& c : *it) {
            if (!c.is_string()) throw SchemaError("manifest: colors must be an array of strings");
            schema.colors.push_back(c.get<std::string>());
        }
    }
    schema.validate();

    const auto& images_j = require(doc, "images", top);
    if (!images_j.is_array()) throw SchemaError("manifest: images must be an array");

    std::optional<std::filesystem::path> fea_file;
    if (auto it = doc.find("fea_file"); it != doc.end() && !it->is_null()) {
        if (!it->is_string() || it->get<std::string>().empty()) {
            throw SchemaError("manifest: fea_file must be a non-empty string");
        }
        std::filesystem::path p(it->get<std::string>());
        fea_file = p.is_absolute() ? p : base_dir / p;
    }

    std::vector<ImageRecord> records;
    records.reserve(images_j.size());
    for (std::size_t i = 0; i < images_j.size(); ++i) {
        const auto& img = images_j[i];
        std::string where = "image " + std::to_string(i);
        if (!img.is_object()) throw SchemaError(where + ": must be an object");

        ImageRecord r;
        const auto& id_j = require(img, "id", where);
        if (!id_j.is_string()) throw SchemaError(where + ": id must be a string");
        r.id = id_j.get<std::string>();
        where = record_context(i, r.id);

        if (auto it = img.find("path"); it != img.end() && !it->is_null()) {
            if (!it->is_string()) throw SchemaError(where + ": path must be a string");
            r.image_path = it->get<std::string>();
        }
        r.act = parse_act(require(img, "act", where), where);
        r.prd = parse_prd(require(img, "prd", where), where);

        const auto fea_it = img.find("fea");
        const bool has_inline = fea_it != img.end() && !fea_it->is_null();
        if (fea_file && has_inline) {
            throw SchemaError(where + ": per-record fea is not allowed when fea_file is given");
        }
        if (!fea_file && !has_inline) {
            throw SchemaError(where + ": fea missing (give fea_file or per-record fea)");
        }
        if (has_inline) r.fea = parse_fea(*fea_it, where);
        records.push_back(std::move(r));
    }

    if (fea_file) {
        const auto flat = read_fea_sidecar(*fea_file, records.size(), fea_dim);
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto* row = flat.data() + i * fea_dim;
            records[i].fea.assign(row, row + fea_dim);
        }
    }

    return Dataset(std::move(schema), std::move(records), fea_dim, base_dir);
}

Dataset parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("manifest is not valid JSON: ") + e.what());
    }
    return dataset_from_json(doc, base_dir);
}

Dataset load_manifest(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) throw IoError("manifest not found: " + path.string());
    const auto text = read_file(path);
    return parse_manifest(text, path.parent_path());
}

std::vector<float> read_fea_sidecar(const std::filesystem::path& path, std::size_t n, std::size_t d) {
    if (!std::filesystem::is_regular_file(path)) throw IoError("feature file not found: " + path.string());
    const auto bytes = read_file(path);
    const std::size_t expected = n * d * 4;
    if (bytes.size() != expected) {
        throw SchemaError("feature file " + path.filename().string() + " has " + std::to_string(bytes.size()) +
                          " bytes, expected " + std::to_string(expected) + " (" + std::to_string(n) + " x " +
                          std::to_string(d) + " float32)");
    }
    std::vector<float> out(n * d);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint32_t bits = 0;
        for (std::size_t b = 0; b < 4; ++b) {
            bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + b])) << (8 * b);
        }
        out[i] = std::bit_cast<float>(bits);
    }
    return out;
}

void write_fea_sidecar(const std::filesystem::path& path, std::span<const ImageRecord> records) {
    std::string bytes;
    std::size_t total = 0;
    for (const auto& r : records) total += r.fea.size();
    bytes.reserve(total * 4);
    for (const auto& r : records) {
        for (float f : r.fea) {
            const auto bits = std::bit_cast<std::uint32_t>(f);
            for (std::size_t b = 0; b < 4; ++b) bytes.push_back(static_cast<char>((bits >> (8 * b)) & 0xffU));
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

nlohmann::json manifest_json(const Dataset& dataset, const std::optional<std::string>& fea_file) {
    nlohmann::json doc;
    doc["fea_dim"] = dataset.fea_dim();
    doc["attributes"] = dataset.schema().names;
    doc["colors"] = dataset.schema().colors;
    if (fea_file) doc["fea_file"] = *fea_file;
    auto images = nlohmann::json::array();
    for (const auto& r : dataset.records()) {
        nlohmann::json img;
        img["id"] = r.id;
        if (r.image_path) img["path"] = *r.image_path;
        auto act = nlohmann::json::array();
        for (auto a : r.act) act.push_back(static_cast<int>(a));
        img["act"] = std::move(act);
        img["prd"] = r.prd;
        if (!fea_file) {
            auto fea = nlohmann::json::array();
            for (float f : r.fea) fea.push_back(static_cast<double>(f));
            img["fea"] = std::move(fea);
        }
        images.push_back(std::move(img));
    }
    doc["images"] = std::move(images);
    return doc;
}

void save_manifest(const Dataset& dataset, const std::filesystem::path& path, FeaStorage storage) {
    std::optional<std::string> fea_file;
    if (storage == FeaStorage::Sidecar) {
        const auto sidecar_name = path.stem().string() + ".fea.bin";
        write_fea_sidecar(path.parent_path() / sidecar_name, dataset.records());
        fea_file = sidecar_name;
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << manifest_json(dataset, fea_file).dump(1) << '\n';
    if (!out) throw IoError("short write to " + path.string());
}

} // namespace attrscope
