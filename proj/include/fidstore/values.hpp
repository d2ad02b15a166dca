#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "fidstore/bytes.hpp"

namespace fidstore {

enum class ValueType : std::uint8_t { Int64 = 0, Float64 = 1, Bytes = 2 };

inline constexpr std::size_t kScalarBytes = 8;

inline Bytes encode_int64(std::int64_t v) {
  Bytes out(kScalarBytes);
  store_le64(out.data(), static_cast<std::uint64_t>(v));
  return out;
}

inline Bytes encode_float64(double v) {
  Bytes out;
  ByteWriter(out).f64(v);
  return out;
}

inline std::optional<std::int64_t> decode_int64(ByteView b) {
  if (b.size() != kScalarBytes) return std::nullopt;
  return static_cast<std::int64_t>(load_le64(b.data()));
}

inline std::optional<double> decode_float64(ByteView b) {
  if (b.size() != kScalarBytes) return std::nullopt;
  return ByteReader(b).f64();
}

// Fixed-width padding for variable-length sensitive values: the value, one
// 0x80 marker byte, then zeros up to `width`. Values must be shorter than
// `width`.
inline Bytes pad_value(ByteView v, std::size_t width) {
  if (v.size() >= width) fail(Errc::ValueTooLarge, "value does not fit padded width");
  Bytes out(v.begin(), v.end());
  out.push_back(0x80);
  out.resize(width, 0);
  return out;
}

inline Bytes unpad_value(ByteView v) {
  std::size_t n = v.size();
  while (n > 0 && v[n - 1] == 0) --n;
  if (n == 0 || v[n - 1] != 0x80) fail(Errc::InvalidArgument, "malformed padding");
  return Bytes(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n - 1));
}

}  // namespace fidstore
