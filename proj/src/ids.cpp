#include "tmem/ids.hpp"

#include <openssl/evp.h>

#include "tmem/errors.hpp"

namespace tmem {

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorCode::io_error, "SHA-256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

std::string hashed_id(const char* prefix, const std::vector<std::string>& parts) {
    std::string joined;
    for (const auto& p : parts) {
        joined += p;
        joined.push_back('\x1f'); // unit separator, keeps parts unambiguous
    }
    return prefix + sha256_hex(joined).substr(0, 12);
}

} // namespace

std::string tip_id(const std::vector<std::string>& parts) { return hashed_id("t-", parts); }

std::string cluster_id(const std::vector<std::string>& parts) { return hashed_id("c-", parts); }

} // namespace tmem
