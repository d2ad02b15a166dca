#include "fidstore/bytes.hpp"

#include <algorithm>

#include <zlib.h>

namespace fidstore {

std::uint32_t crc32(ByteView data) noexcept {
  uLong c = ::crc32(0L, Z_NULL, 0);
  return static_cast<std::uint32_t>(
      ::crc32(c, data.data(), static_cast<uInt>(data.size())));
}

std::uint64_t fnv1a64(ByteView data, std::uint64_t seed) noexcept {
  std::uint64_t h = seed;
  for (auto b : data) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool contains_subsequence(ByteView haystack, ByteView needle) noexcept {
  if (needle.empty()) return true;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
         haystack.end();
}

}  // namespace fidstore
