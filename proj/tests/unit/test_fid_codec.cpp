#include "doctest.h"

#include <random>
#include <set>

#include "fidstore/fid.hpp"

using namespace fidstore;

TEST_CASE("encode: zero and shift-or layout") {
  const FidConfig cfg;
  CHECK(encode_fid(cfg, 0, 0).raw == 0);
  CHECK(encode_fid(cfg, 3, 7).raw == 0x0003000000000007ULL);
  CHECK(cfg.offset_bits() == 48);
}

TEST_CASE("encode: out of range fields") {
  const FidConfig cfg;
  CHECK_THROWS_AS(encode_fid(cfg, 0, 1ULL << 48), Error);
  CHECK_THROWS_AS(encode_fid(cfg, 1ULL << 16, 0), Error);
  try {
    encode_fid(cfg, 0, 1ULL << 48);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::OutOfRange);
  }
  CHECK(encode_fid(cfg, 0xFFFF, (1ULL << 48) - 1).raw == ~0ULL);
}

TEST_CASE("decode: inverse of encode") {
  const FidConfig cfg;
  CHECK(decode_fid(cfg, Fid{0}) == FidParts{0, 0});
  CHECK(decode_fid(cfg, Fid{0x0003000000000007ULL}) == FidParts{3, 7});
}

TEST_CASE("config bounds") {
  CHECK_THROWS_AS(FidConfig(0), Error);
  CHECK_THROWS_AS(FidConfig(33), Error);
  CHECK(FidConfig(32).offset_limit() == (1ULL << 32));
  CHECK(FidConfig(1).partition_limit() == 2);
}

TEST_CASE("round trip over random pairs and prefix widths") {
  std::mt19937_64 rng(11);
  for (unsigned bits : {1u, 8u, 16u, 24u, 32u}) {
    const FidConfig cfg(bits);
    for (int i = 0; i < 100000 / 5; ++i) {
      const std::uint64_t p = rng() & (cfg.partition_limit() - 1);
      const std::uint64_t o = rng() & (cfg.offset_limit() - 1);
      const auto f = encode_fid(cfg, p, o);
      CHECK(f.raw == ((p << (64 - bits)) | o));
      REQUIRE(decode_fid(cfg, f) == FidParts{p, o});
    }
  }
}

TEST_CASE("distinct partitions never collide") {
  const FidConfig cfg;
  std::set<std::uint64_t> seen;
  for (std::uint64_t p = 0; p < 64; ++p)
    for (std::uint64_t o = 0; o < 64; ++o) seen.insert(encode_fid(cfg, p, o).raw);
  CHECK(seen.size() == 64 * 64);
}
