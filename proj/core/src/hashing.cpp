#include "attrscope/hashing.hpp"

#include <array>
#include <bit>
#include <stdexcept>

#include <openssl/evp.h>

namespace attrscope {

struct Sha256::Impl {
    EVP_MD_CTX* ctx = nullptr;
    bool finished = false;
};

Sha256::Sha256() : impl_(std::make_unique<Impl>()) {
    impl_->ctx = EVP_MD_CTX_new();
    if (impl_->ctx == nullptr || EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("EVP sha256 init failed");
    }
}

Sha256::~Sha256() { EVP_MD_CTX_free(impl_->ctx); }

Sha256& Sha256::update(std::span<const std::byte> bytes) {
    EVP_DigestUpdate(impl_->ctx, bytes.data(), bytes.size());
    return *this;
}

Sha256& Sha256::update(std::string_view text) {
    // Length prefix keeps concatenated fields unambiguous.
    update_u64(text.size());
    return update(std::as_bytes(std::span(text.data(), text.size())));
}

Sha256& Sha256::update_u64(std::uint64_t value) {
    std::array<std::byte, 8> le{};
    for (std::size_t i = 0; i < 8; ++i) le[i] = static_cast<std::byte>((value >> (8 * i)) & 0xffU);
    return update(le);
}

Sha256& Sha256::update_f64(double value) { return update_u64(std::bit_cast<std::uint64_t>(value)); }

Sha256& Sha256::update_f32(float value) { return update_u64(std::bit_cast<std::uint32_t>(value)); }

std::string Sha256::hex_digest() {
    if (impl_->finished) throw std::logic_error("Sha256::hex_digest called twice");
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(impl_->ctx, digest.data(), &len);
    impl_->finished = true;

    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0x0f]);
    }
    return out;
}

std::string sha256_hex(std::string_view text) {
    Sha256 h;
    h.update(std::as_bytes(std::span(text.data(), text.size())));
    return h.hex_digest();
}

} // namespace attrscope
