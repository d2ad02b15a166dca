#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fidstore/error.hpp"

namespace fidstore {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }
inline std::string to_string(ByteView b) { return std::string(b.begin(), b.end()); }

inline void store_le64(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
inline std::uint64_t load_le64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}
inline void store_le32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
inline std::uint32_t load_le32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

// Little-endian append-only encoder.
class ByteWriter {
 public:
  explicit ByteWriter(Bytes& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v));
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    const auto n = out_.size();
    out_.resize(n + 4);
    store_le32(out_.data() + n, v);
  }
  void u64(std::uint64_t v) {
    const auto n = out_.size();
    out_.resize(n + 8);
    store_le64(out_.data() + n, v);
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
  }
  void raw(ByteView b) { out_.insert(out_.end(), b.begin(), b.end()); }
  // u32 length prefix followed by the bytes.
  void blob(ByteView b) {
    u32(static_cast<std::uint32_t>(b.size()));
    raw(b);
  }
  void str(std::string_view s) {
    blob(ByteView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  }

 private:
  Bytes& out_;
};

// Bounds-checked little-endian decoder. Underflow raises the configured code.
class ByteReader {
 public:
  explicit ByteReader(ByteView in, Errc on_short = Errc::ProtocolError)
      : in_(in), on_short_(on_short) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint16_t u16() {
    auto p = take(2);
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }
  std::uint32_t u32() { return load_le32(take(4).data()); }
  std::uint64_t u64() { return load_le64(take(8).data()); }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  ByteView raw(std::size_t n) { return take(n); }
  Bytes blob() {
    const auto n = u32();
    auto v = take(n);
    return Bytes(v.begin(), v.end());
  }
  std::string str() {
    const auto n = u32();
    auto v = take(n);
    return std::string(v.begin(), v.end());
  }

  std::size_t remaining() const noexcept { return in_.size() - pos_; }
  bool done() const noexcept { return pos_ == in_.size(); }
  std::size_t position() const noexcept { return pos_; }

 private:
  ByteView take(std::size_t n) {
    if (n > remaining()) fail(on_short_, "short read");
    auto v = in_.subspan(pos_, n);
    pos_ += n;
    return v;
  }

  ByteView in_;
  std::size_t pos_ = 0;
  Errc on_short_;
};

std::uint32_t crc32(ByteView data) noexcept;

// FNV-1a, used for stable digests of traces and reports.
std::uint64_t fnv1a64(ByteView data, std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;

bool contains_subsequence(ByteView haystack, ByteView needle) noexcept;

}  // namespace fidstore
