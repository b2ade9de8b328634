#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace kgfuzz {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// 64-bit FNV-1a. Used for feature hashing where a stable, cheap hash is enough.
constexpr std::uint64_t fnv1a64(std::string_view data) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// `prefix` followed by the first `hex_chars` of sha256(data).
std::string short_id(std::string_view prefix, std::string_view data, std::size_t hex_chars = 16);

}  // namespace kgfuzz
