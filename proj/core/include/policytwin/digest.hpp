#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace policytwin {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// First 16 hex characters of sha256_hex; used where a short stable tag suffices.
std::string short_digest(std::string_view data);

/// SplitMix64 finalizer; used to derive independent seeds from a base seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Uniform double in [0, 1) from a 64-bit word (53 high bits).
inline double unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace policytwin
