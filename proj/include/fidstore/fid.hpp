#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>

#include "fidstore/error.hpp"

namespace fidstore {

// Layout of a 64-bit field identifier: the high `prefix_bits` carry the
// partition number, the remaining bits the offset inside that partition.
// Fixed for the lifetime of a store; recorded in every partition superblock.
class FidConfig {
 public:
  static constexpr unsigned kTotalBits = 64;
  static constexpr unsigned kDefaultPrefixBits = 16;

  constexpr FidConfig() = default;
  explicit FidConfig(unsigned prefix_bits) : prefix_bits_(prefix_bits) {
    if (prefix_bits < 1 || prefix_bits > 32)
      fail(Errc::InvalidArgument, "prefix_bits must be in [1, 32]");
  }

  constexpr unsigned prefix_bits() const noexcept { return prefix_bits_; }
  constexpr unsigned offset_bits() const noexcept { return kTotalBits - prefix_bits_; }
  constexpr std::uint64_t partition_limit() const noexcept { return 1ULL << prefix_bits_; }
  constexpr std::uint64_t offset_limit() const noexcept { return 1ULL << offset_bits(); }

  friend constexpr bool operator==(const FidConfig&, const FidConfig&) = default;

 private:
  unsigned prefix_bits_ = kDefaultPrefixBits;
};

struct Fid {
  std::uint64_t raw = 0;

  friend constexpr auto operator<=>(const Fid&, const Fid&) = default;
};

struct FidParts {
  std::uint64_t partition = 0;
  std::uint64_t offset = 0;

  friend constexpr bool operator==(const FidParts&, const FidParts&) = default;
};

inline Fid encode_fid(const FidConfig& cfg, std::uint64_t partition, std::uint64_t offset) {
  if (partition >= cfg.partition_limit())
    fail(Errc::OutOfRange, "partition " + std::to_string(partition) + " exceeds prefix width");
  if (offset >= cfg.offset_limit())
    fail(Errc::OutOfRange, "offset " + std::to_string(offset) + " exceeds offset width");
  return Fid{(partition << cfg.offset_bits()) | offset};
}

inline constexpr FidParts decode_fid(const FidConfig& cfg, Fid fid) noexcept {
  return FidParts{fid.raw >> cfg.offset_bits(), fid.raw & (cfg.offset_limit() - 1)};
}

std::string to_string(Fid fid);

}  // namespace fidstore

template <>
struct std::hash<fidstore::Fid> {
  std::size_t operator()(const fidstore::Fid& f) const noexcept {
    return std::hash<std::uint64_t>{}(f.raw);
  }
};
