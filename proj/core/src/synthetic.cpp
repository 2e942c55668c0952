#include <algorithm>
#include <cmath>
#include <cstdio>

#include "attrscope/dataset.hpp"
#include "attrscope/error.hpp"
#include "attrscope/random.hpp"

namespace attrscope {

namespace {

// Probability that a cluster pattern carries a given attribute.
constexpr double kPatternDensity = 0.35;
// FEA cluster centers are uniform in [0, kCenterSpread)^d, members scatter
// around them with standard deviation kMemberSigma.
constexpr double kCenterSpread = 4.0;
constexpr double kMemberSigma = 0.5;

std::string synthetic_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "img%05zu", i);
    return buf;
}

} // namespace

Dataset generate_synthetic(const SyntheticParams& p) {
    if (p.k < 1) throw ArgumentError("k must be at least 1");
    if (p.d < 2) throw ArgumentError("d must be at least 2");
    if (!(p.noise >= 0.0 && p.noise <= 1.0)) throw ArgumentError("noise must lie in [0, 1]");
    if (p.n > 0 && (p.n_clusters < 1 || p.n_clusters > p.n)) {
        throw ArgumentError("n_clusters must lie in [1, n]");
    }

    auto schema = AttributeSchema::with_defaults(p.k);
    if (p.n == 0) return Dataset(std::move(schema), {}, p.d);

    Rng label_rng(mix64(p.seed ^ 0x4c4142454c53ULL));
    Rng feature_rng(mix64(p.seed ^ 0x464541545552ULL));

    std::vector<std::vector<std::uint8_t>> patterns(p.n_clusters, std::vector<std::uint8_t>(p.k));
    for (auto& pattern : patterns) {
        for (auto& bit : pattern) bit = label_rng.bernoulli(kPatternDensity) ? 1 : 0;
    }
    std::vector<std::vector<double>> centers(p.n_clusters, std::vector<double>(p.d));
    for (auto& center : centers) {
        for (auto& c : center) c = kCenterSpread * feature_rng.uniform();
    }

    std::vector<ImageRecord> records;
    records.reserve(p.n);
    for (std::size_t i = 0; i < p.n; ++i) {
        const auto cluster = synthetic_cluster_of(i, p.n_clusters);
        ImageRecord r;
        r.id = synthetic_id(i);
        r.act = patterns[cluster];
        r.prd.resize(p.k);
        for (std::size_t j = 0; j < p.k; ++j) {
            // Both draws are always consumed so the stream layout does not depend on noise.
            const bool corrupt = label_rng.uniform() < p.noise;
            const double replacement = label_rng.uniform();
            r.prd[j] = corrupt ? replacement : static_cast<double>(r.act[j]);
        }
        r.fea.resize(p.d);
        for (std::size_t j = 0; j < p.d; ++j) {
            r.fea[j] = static_cast<float>(std::max(0.0, feature_rng.normal(centers[cluster][j], kMemberSigma)));
        }
        records.push_back(std::move(r));
    }
    return Dataset(std::move(schema), std::move(records), p.d);
}

} // namespace attrscope
