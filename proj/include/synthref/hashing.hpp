#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace synthref {

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

/// Per-item seed: first 8 bytes (big-endian) of SHA-256("<seed>:<key>").
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit word. Used
/// instead of std::uniform_real_distribution, whose output is not pinned
/// across standard library implementations.
inline double unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace synthref
