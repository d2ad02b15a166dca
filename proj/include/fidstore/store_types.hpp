#pragma once

#include <cstdint>

namespace fidstore {

enum class PartitionKind : std::uint8_t { Temporary = 0, Permanent = 1 };

enum class SlotState : std::uint8_t { Unused = 0, Live = 1, LogicallyDeleted = 2 };

struct ValueLayout {
  enum class Kind : std::uint8_t { FixedWidth = 0, VarLen = 1 };

  Kind kind = Kind::VarLen;
  std::uint32_t width = 0;  // bytes per slot; zero for VarLen

  static constexpr ValueLayout fixed(std::uint32_t w) noexcept { return {Kind::FixedWidth, w}; }
  static constexpr ValueLayout varlen() noexcept { return {Kind::VarLen, 0}; }

  constexpr bool is_fixed() const noexcept { return kind == Kind::FixedWidth; }

  friend constexpr bool operator==(const ValueLayout&, const ValueLayout&) = default;
};

}  // namespace fidstore
