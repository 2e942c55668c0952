#ifndef ATTRSCOPE_TESTS_HELPERS_HPP
#define ATTRSCOPE_TESTS_HELPERS_HPP

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "attrscope/dataset.hpp"
#include "attrscope/matrix.hpp"
#include "oracles.hpp"

namespace testing {

// Unique directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::mt19937_64 gen(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() / ("attrscope-test-" + std::to_string(gen()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

inline oracle::Rows to_rows(const attrscope::Matrix& m) {
    oracle::Rows r(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) r[i][j] = m(i, j);
    return r;
}

inline attrscope::Matrix to_matrix(const oracle::Rows& r) {
    attrscope::Matrix m(r.size(), r.empty() ? 0 : r[0].size());
    for (std::size_t i = 0; i < r.size(); ++i)
        for (std::size_t j = 0; j < r[i].size(); ++j) m(i, j) = r[i][j];
    return m;
}

// Small random dataset; prd values are drawn from a grid that includes the
// threshold itself so inclusive comparisons and score ties get exercised.
inline attrscope::Dataset random_dataset(std::mt19937& gen, std::size_t n, std::size_t k, std::size_t d = 2) {
    std::uniform_int_distribution<int> bit(0, 1);
    std::uniform_int_distribution<int> grid(0, 20);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<attrscope::ImageRecord> records;
    for (std::size_t i = 0; i < n; ++i) {
        attrscope::ImageRecord r;
        r.id = "r" + std::to_string(i);
        for (std::size_t a = 0; a < k; ++a) {
            r.act.push_back(static_cast<std::uint8_t>(bit(gen)));
            r.prd.push_back(bit(gen) ? grid(gen) / 20.0 : unit(gen));
        }
        for (std::size_t j = 0; j < d; ++j) r.fea.push_back(static_cast<float>(unit(gen)));
        records.push_back(std::move(r));
    }
    return attrscope::Dataset(attrscope::AttributeSchema::with_defaults(k), std::move(records), d);
}

inline std::vector<std::vector<int>> act_rows(const attrscope::Dataset& ds) {
    std::vector<std::vector<int>> out;
    for (const auto& r : ds.records()) out.emplace_back(r.act.begin(), r.act.end());
    return out;
}

inline oracle::Rows prd_rows(const attrscope::Dataset& ds) {
    oracle::Rows out;
    for (const auto& r : ds.records()) out.emplace_back(r.prd.begin(), r.prd.end());
    return out;
}

} // namespace testing

#endif
