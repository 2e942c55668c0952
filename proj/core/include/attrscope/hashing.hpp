#ifndef ATTRSCOPE_HASHING_HPP
#define ATTRSCOPE_HASHING_HPP

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace attrscope {

/// Incremental SHA-256 (OpenSSL EVP) producing lowercase hex digests.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    Sha256& update(std::span<const std::byte> bytes);
    Sha256& update(std::string_view text);
    Sha256& update_u64(std::uint64_t value);
    Sha256& update_f64(double value);
    Sha256& update_f32(float value);

    std::string hex_digest();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::string sha256_hex(std::string_view text);

} // namespace attrscope

#endif
