#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tmem {

// Hex SHA-256; scripted-provider fixtures key on this.
std::string sha256_hex(std::string_view data);

// 64-bit FNV-1a, used by the deterministic hashing embedder.
std::uint64_t fnv1a64(std::string_view data);

// Content-addressed ids: deterministic across runs so pipeline output is
// byte-stable. "t-" prefix for tips, "c-" for clusters.
std::string tip_id(const std::vector<std::string>& parts);
std::string cluster_id(const std::vector<std::string>& parts);

} // namespace tmem
