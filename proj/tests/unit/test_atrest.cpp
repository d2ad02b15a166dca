#include "doctest.h"

#include "fidstore/atrest.hpp"
#include "fidstore/error.hpp"

using namespace fidstore;

namespace {

Bytes page(std::uint8_t fill) { return Bytes(kBlockSize, fill); }

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return Errc::ProtocolError;
}

}  // namespace

TEST_CASE("seal twice: consecutive counters, distinct ciphertexts") {
  BlockSealer s(derive_key("t", 1));
  const BlockId id{1, 3};
  const auto a = s.seal_block(id, page(9));
  const auto b = s.seal_block(id, page(9));
  CHECK(b.counter == a.counter + 1);
  CHECK(a.ciphertext != b.ciphertext);
  CHECK(a.ciphertext.size() == kBlockSize);
  CHECK(s.open_block(id, b) == page(9));
}

TEST_CASE("superseded block is stale") {
  BlockSealer s(derive_key("t", 1));
  const BlockId id{0, 0};
  const auto old = s.seal_block(id, page(1));
  s.seal_block(id, page(2));
  CHECK(code_of([&] { s.open_block(id, old); }) == Errc::StaleBlock);
}

TEST_CASE("tampering fails authentication") {
  BlockSealer s(derive_key("t", 1));
  const BlockId id{2, 5};
  const auto sealed = s.seal_block(id, page(3));
  auto bad = sealed;
  bad.ciphertext[100] ^= 1;
  CHECK(code_of([&] { s.open_block(id, bad); }) == Errc::AuthFailure);
  bad = sealed;
  bad.tag[0] ^= 1;
  CHECK(code_of([&] { s.open_block(id, bad); }) == Errc::AuthFailure);
  // Moved to another address.
  CHECK(code_of([&] { s.open_block(BlockId{2, 6}, sealed); }) == Errc::AuthFailure);
  bad = sealed;
  bad.ciphertext.pop_back();
  CHECK(code_of([&] { s.open_block(id, bad); }) == Errc::AuthFailure);
  CHECK(s.open_block(id, sealed) == page(3));
}

TEST_CASE("wire format round trip") {
  BlockSealer s(derive_key("t", 2));
  const auto sealed = s.seal_block(BlockId{0, 1}, page(4));
  const auto wire = sealed.serialize();
  CHECK(wire.size() == SealedBlock::kWireSize);
  CHECK(SealedBlock::kOverhead == 36);
  CHECK(SealedBlock::parse(wire) == sealed);
  Bytes shorter(wire.begin(), wire.end() - 1);
  CHECK(code_of([&] { SealedBlock::parse(shorter); }) == Errc::AuthFailure);
}

TEST_CASE("freshness table floor and serialization") {
  FreshnessTable t;
  CHECK_FALSE(t.get(BlockId{0, 0}));
  CHECK(t.bump(BlockId{0, 0}) == 1);
  CHECK(t.bump(BlockId{0, 0}) == 2);
  t.set_floor(100);
  CHECK(t.bump(BlockId{0, 1}) == 100);
  CHECK(t.bump(BlockId{0, 0}) == 100);
  t.observe(BlockId{3, 7}, 42);
  const auto copy = FreshnessTable::parse(t.serialize());
  CHECK(copy.entries() == t.entries());
  CHECK(copy.floor() == t.floor());
}

TEST_CASE("page cache evicts least recently used") {
  PageCache c(2);
  CHECK_FALSE(c.touch(BlockId{0, 1}, false).hit);
  c.touch(BlockId{0, 2}, true);
  CHECK(c.touch(BlockId{0, 1}, false).hit);
  const auto t = c.touch(BlockId{0, 3}, false);
  REQUIRE(t.evicted);
  CHECK(t.evicted->id == BlockId{0, 2});
  CHECK(t.evicted->dirty);
  CHECK(c.size() == 2);
  const auto ev = c.set_capacity(1);
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].id == BlockId{0, 1});
  c.erase_partition(0);
  CHECK(c.size() == 0);
}

TEST_CASE("untrusted device images") {
  BlockSealer s(derive_key("t", 3));
  UntrustedBlockDevice dev;
  dev.put(BlockId{1, 1}, s.seal_block(BlockId{1, 1}, page(1)));
  dev.put(BlockId{1, 0}, s.seal_block(BlockId{1, 0}, page(2)));
  dev.put(BlockId{2, 0}, s.seal_block(BlockId{2, 0}, page(3)));
  CHECK(dev.partition_image(1).size() == 2 * SealedBlock::kWireSize);
  CHECK(s.open_block(BlockId{1, 0}, *dev.get(BlockId{1, 0})) == page(2));
  dev.erase_partition(1);
  CHECK(dev.size() == 1);
  CHECK_FALSE(dev.get(BlockId{1, 0}));
  CHECK_FALSE(contains_subsequence(dev.all_bytes(), page(3)));
}
