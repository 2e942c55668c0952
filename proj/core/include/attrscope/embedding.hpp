#ifndef ATTRSCOPE_EMBEDDING_HPP
#define ATTRSCOPE_EMBEDDING_HPP

#include <array>
#include <filesystem>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "attrscope/dataset.hpp"
#include "attrscope/matrix.hpp"
#include "attrscope/tsne.hpp"

namespace attrscope {

/// The three vector spaces an image lives in.
enum class Space { Act, Prd, Fea };

inline constexpr std::array<Space, 3> kAllSpaces = {Space::Act, Space::Prd, Space::Fea};

/// "ACT", "PRD", "FEA".
std::string_view to_string(Space space);
/// Case-insensitive inverse of to_string; throws ArgumentError.
Space parse_space(std::string_view text);

/// Rows of the dataset in the given space as doubles. ACT is the 0/1 labels
/// taken as reals, PRD the raw probabilities (not thresholded).
Matrix space_vectors(const Dataset& dataset, Space space);

/// Library defaults for one space: TsneConfig::defaults_for(n), plus PCA to
/// 50 dimensions for FEA when fea_dim exceeds 50.
TsneConfig default_config(const Dataset& dataset, Space space);

struct EmbeddingResult {
    Space space = Space::Act;
    Matrix coords;
    TsneConfig config;
    std::vector<KlSample> kl_trace;
};

/// Embeds one space. Errors are rethrown with the space name prepended.
EmbeddingResult embed_space(const Dataset& dataset, Space space, const TsneConfig& config,
                            std::stop_token stop = {});

struct SpaceConfigs {
    TsneConfig act;
    TsneConfig prd;
    TsneConfig fea;

    static SpaceConfigs defaults_for(const Dataset& dataset);
    const TsneConfig& operator[](Space space) const;
};

/// ACT, PRD and FEA embeddings (in that order), computed concurrently.
/// Throws ArgumentError for an empty dataset.
std::array<EmbeddingResult, 3> embed_all_spaces(const Dataset& dataset, const SpaceConfigs& configs);

// JSON ----------------------------------------------------------------------

void to_json(nlohmann::json& j, const TsneConfig& config);
/// Reads a possibly partial config; absent keys keep the values of `base`.
TsneConfig tsne_config_from_json(const nlohmann::json& j, TsneConfig base = {});

/// {"space", "coords": [[x, y]...], "config": {...}, "kl_trace": [[iter, kl]...]}
void to_json(nlohmann::json& j, const EmbeddingResult& result);
/// Throws ParseError on a malformed document.
EmbeddingResult embedding_from_json(const nlohmann::json& j);

// Cache ---------------------------------------------------------------------

/// Hex key identifying (dataset content, space, config).
std::string embedding_cache_key(const Dataset& dataset, Space space, const TsneConfig& config);

/// Directory of "<key>.json" EmbeddingResult files.
class EmbeddingCache {
public:
    explicit EmbeddingCache(std::filesystem::path dir);

    std::optional<EmbeddingResult> load(const std::string& key) const;
    /// Writes atomically (temp file + rename).
    void store(const std::string& key, const EmbeddingResult& result) const;
    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
};

} // namespace attrscope

#endif
