#include <array>
#include <memory>

#include <openssl/evp.h>

#include "gap/core.hpp"

namespace gap {

Digest content_digest(std::span<const std::uint8_t> blob) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), blob.data(), blob.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1)
        fail(Errc::StorageError, "sha256 computation failed");

    static constexpr char hex[] = "0123456789abcdef";
    Digest out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0x0f]);
    }
    return out;
}

Digest content_digest(std::string_view blob) {
    return content_digest(std::span(reinterpret_cast<const std::uint8_t*>(blob.data()), blob.size()));
}

}  // namespace gap
