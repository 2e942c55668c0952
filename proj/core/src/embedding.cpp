#include "attrscope/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <future>
#include <iterator>

#include "attrscope/error.hpp"
#include "attrscope/hashing.hpp"

namespace attrscope {

std::string_view to_string(Space space) {
    switch (space) {
    case Space::Act: return "ACT";
    case Space::Prd: return "PRD";
    case Space::Fea: return "FEA";
    }
    return "?";
}

Space parse_space(std::string_view text) {
    std::string upper(text);
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    for (auto s : kAllSpaces) {
        if (upper == to_string(s)) return s;
    }
    throw ArgumentError("unknown space '" + std::string(text) + "' (expected ACT, PRD or FEA)");
}

Matrix space_vectors(const Dataset& dataset, Space space) {
    const std::size_t n = dataset.size();
    const std::size_t cols = space == Space::Fea ? dataset.fea_dim() : dataset.attribute_count();
    Matrix m(n, cols);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = dataset.record(i);
        auto row = m.row(i);
        switch (space) {
        case Space::Act: std::copy(r.act.begin(), r.act.end(), row.begin()); break;
        case Space::Prd: std::copy(r.prd.begin(), r.prd.end(), row.begin()); break;
        case Space::Fea: std::copy(r.fea.begin(), r.fea.end(), row.begin()); break;
        }
    }
    return m;
}

TsneConfig default_config(const Dataset& dataset, Space space) {
    auto c = TsneConfig::defaults_for(dataset.size());
    if (space == Space::Fea && dataset.fea_dim() > 50) c.pca_predim = 50;
    return c;
}

EmbeddingResult embed_space(const Dataset& dataset, Space space, const TsneConfig& config, std::stop_token stop) {
    try {
        auto run = tsne_embed(space_vectors(dataset, space), config, stop);
        return EmbeddingResult{space, std::move(run.coords), config, std::move(run.kl_trace)};
    } catch (const Error& e) {
        rethrow_with_context(e, to_string(space));
    }
}

SpaceConfigs SpaceConfigs::defaults_for(const Dataset& dataset) {
    return {default_config(dataset, Space::Act), default_config(dataset, Space::Prd),
            default_config(dataset, Space::Fea)};
}

const TsneConfig& SpaceConfigs::operator[](Space space) const {
    switch (space) {
    case Space::Act: return act;
    case Space::Prd: return prd;
    case Space::Fea: return fea;
    }
    return act;
}

std::array<EmbeddingResult, 3> embed_all_spaces(const Dataset& dataset, const SpaceConfigs& configs) {
    if (dataset.empty()) throw ArgumentError("cannot embed an empty dataset");
    std::array<std::future<EmbeddingResult>, 3> jobs;
    for (std::size_t s = 0; s < 3; ++s) {
        jobs[s] = std::async(std::launch::async, [&dataset, &configs, s] {
            return embed_space(dataset, kAllSpaces[s], configs[kAllSpaces[s]]);
        });
    }
    // get() in order so the first failing space (ACT, PRD, FEA) is reported.
    return {jobs[0].get(), jobs[1].get(), jobs[2].get()};
}

// JSON ----------------------------------------------------------------------

void to_json(nlohmann::json& j, const TsneConfig& c) {
    j = nlohmann::json{
        {"perplexity", c.perplexity},
        {"n_iter", c.n_iter},
        {"learning_rate", c.learning_rate},
        {"early_exaggeration_factor", c.early_exaggeration_factor},
        {"early_exaggeration_iters", c.early_exaggeration_iters},
        {"momentum_initial", c.momentum_initial},
        {"momentum_final", c.momentum_final},
        {"momentum_switch_iter", c.momentum_switch_iter},
        {"theta", c.theta},
        {"seed", c.seed},
        {"pca_predim", c.pca_predim ? nlohmann::json(*c.pca_predim) : nlohmann::json(nullptr)},
    };
}

namespace {

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return;
    try {
        if constexpr (std::is_integral_v<T>) {
            if (!it->is_number_integer()) throw ArgumentError(std::string("config field '") + key + "' must be an integer");
        } else {
            if (!it->is_number()) throw ArgumentError(std::string("config field '") + key + "' must be a number");
        }
        out = it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ArgumentError(std::string("config field '") + key + "' has the wrong type");
    }
}

} // namespace

TsneConfig tsne_config_from_json(const nlohmann::json& j, TsneConfig c) {
    if (j.is_null()) return c;
    if (!j.is_object()) throw ArgumentError("t-SNE config must be a JSON object");
    read_field(j, "perplexity", c.perplexity);
    read_field(j, "n_iter", c.n_iter);
    read_field(j, "learning_rate", c.learning_rate);
    read_field(j, "early_exaggeration_factor", c.early_exaggeration_factor);
    read_field(j, "early_exaggeration_iters", c.early_exaggeration_iters);
    read_field(j, "momentum_initial", c.momentum_initial);
    read_field(j, "momentum_final", c.momentum_final);
    read_field(j, "momentum_switch_iter", c.momentum_switch_iter);
    read_field(j, "theta", c.theta);
    read_field(j, "seed", c.seed);
    if (auto it = j.find("pca_predim"); it != j.end()) {
        if (it->is_null()) {
            c.pca_predim.reset();
        } else {
            if (!it->is_number_integer() || it->get<std::int64_t>() < 1) {
                throw ArgumentError("config field 'pca_predim' must be a positive integer or null");
            }
            c.pca_predim = it->get<std::size_t>();
        }
    }
    c.validate();
    return c;
}

void to_json(nlohmann::json& j, const EmbeddingResult& r) {
    auto coords = nlohmann::json::array();
    for (std::size_t i = 0; i < r.coords.rows(); ++i) coords.push_back({r.coords(i, 0), r.coords(i, 1)});
    auto trace = nlohmann::json::array();
    for (const auto& s : r.kl_trace) trace.push_back({s.iteration, s.kl});
    j = nlohmann::json{
        {"space", to_string(r.space)},
        {"coords", std::move(coords)},
        {"config", r.config},
        {"kl_trace", std::move(trace)},
    };
}

EmbeddingResult embedding_from_json(const nlohmann::json& j) {
    try {
        EmbeddingResult r;
        r.space = parse_space(j.at("space").get<std::string>());
        const auto& coords = j.at("coords");
        r.coords = Matrix(coords.size(), 2);
        for (std::size_t i = 0; i < coords.size(); ++i) {
            if (coords[i].size() != 2) throw ParseError("coords rows must have two entries");
            r.coords(i, 0) = coords[i][0].get<double>();
            r.coords(i, 1) = coords[i][1].get<double>();
        }
        r.config = tsne_config_from_json(j.at("config"));
        for (const auto& s : j.at("kl_trace")) r.kl_trace.push_back({s.at(0).get<int>(), s.at(1).get<double>()});
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed embedding document: ") + e.what());
    } catch (const ArgumentError& e) {
        throw ParseError(std::string("malformed embedding document: ") + e.what());
    }
}

// Cache ---------------------------------------------------------------------

std::string embedding_cache_key(const Dataset& dataset, Space space, const TsneConfig& config) {
    Sha256 h;
    h.update("attrscope-embedding-v1");
    h.update(dataset.content_hash());
    h.update(to_string(space));
    h.update(nlohmann::json(config).dump());
    return h.hex_digest();
}

EmbeddingCache::EmbeddingCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create cache directory " + dir_.string() + ": " + ec.message());
}

std::optional<EmbeddingResult> EmbeddingCache::load(const std::string& key) const {
    const auto path = dir_ / (key + ".json");
    std::ifstream in(path);
    if (!in) return std::nullopt;
    try {
        return embedding_from_json(nlohmann::json::parse(in));
    } catch (const std::exception&) {
        // A corrupt entry is treated as a miss and will be overwritten.
        return std::nullopt;
    }
}

void EmbeddingCache::store(const std::string& key, const EmbeddingResult& result) const {
    const auto path = dir_ / (key + ".json");
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << nlohmann::json(result).dump();
        if (!out) throw IoError("short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move cache entry into place: " + ec.message());
}

} // namespace attrscope
