#include "doctest.h"

#include <array>
#include <random>
#include <set>
#include <string>
#include <thread>

#include "fidstore/mapping_store.hpp"
#include "fidstore/vfs.hpp"
#include "model_store.hpp"

using namespace fidstore;

namespace {

Bytes b(const std::string& s) { return Bytes(s.begin(), s.end()); }

Bytes encode_le32(std::uint32_t v) {
  Bytes out(4);
  store_le32(out.data(), v);
  return out;
}

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::ProtocolError;
}

}  // namespace

TEST_CASE("put: offsets from zero, duplicates get distinct fids") {
  SimVfs disk;
  MappingStore s(disk);
  const auto tmp = s.create_partition(PartitionKind::Temporary, ValueLayout::fixed(4));
  const Bytes v = encode_le32(42);
  const auto a = s.put(tmp, v);
  const auto c = s.put(tmp, v);
  CHECK(a != c);
  CHECK(decode_fid(s.fid_config(), a).offset == 0);
  CHECK(decode_fid(s.fid_config(), c).offset == 1);
  CHECK(decode_fid(s.fid_config(), a).partition == tmp);
}

TEST_CASE("put: errors") {
  SimVfs disk;
  MappingStore s(disk);
  const auto p = s.create_partition(PartitionKind::Permanent, ValueLayout::fixed(4));
  CHECK(code_of([&] { s.put(99, b("abcd")); }) == Errc::UnknownPartition);
  CHECK(code_of([&] { s.put(p, b("abc")); }) == Errc::WidthMismatch);
  const auto v = s.create_partition(PartitionKind::Permanent, ValueLayout::varlen());
  CHECK(code_of([&] { s.put(v, Bytes(5000, 1)); }) == Errc::ValueTooLarge);
  CHECK(code_of([&] { s.put(v, Bytes{}); }) == Errc::InvalidArgument);
}

TEST_CASE("put: partition full at the offset cap") {
  SimVfs disk;
  StoreConfig cfg;
  cfg.offset_cap = 3;
  MappingStore s(disk, cfg);
  const auto p = s.create_partition(PartitionKind::Temporary, ValueLayout::varlen());
  for (int i = 0; i < 3; ++i) s.put(p, b("x"));
  CHECK(code_of([&] { s.put(p, b("x")); }) == Errc::PartitionFull);
}

TEST_CASE("get/delete: read your write, absent, double delete") {
  SimVfs disk;
  MappingStore s(disk);
  const auto p = s.create_partition(PartitionKind::Permanent, ValueLayout::varlen());
  CHECK_FALSE(s.get(encode_fid(s.fid_config(), p, 5)));
  CHECK_FALSE(s.get(encode_fid(s.fid_config(), 77, 0)));
  const auto f = s.put(p, b("abc"));
  CHECK(*s.get(f) == b("abc"));
  s.remove(f);
  CHECK_FALSE(s.get(f));
  CHECK(code_of([&] { s.remove(f); }) == Errc::NotLive);
}

TEST_CASE("delete then put reuses the slot; data bytes do not grow") {
  SimVfs disk;
  MappingStore s(disk);
  for (auto layout : {ValueLayout::fixed(8), ValueLayout::varlen()}) {
    const auto p = s.create_partition(PartitionKind::Permanent, layout);
    const auto f1 = s.put(p, b("value-01"));
    s.put(p, b("value-02"));
    const auto before = s.stats();
    const auto alloc = s.partition_info(p)->alloc_counter;
    s.remove(f1);
    const auto f2 = s.put(p, b("value-03"));
    CHECK(f2 == f1);
    CHECK(s.partition_info(p)->alloc_counter == alloc);
    CHECK(s.stats().bytes_data <= before.bytes_data);
    CHECK(*s.get(f2) == b("value-03"));
  }
  const auto st = s.stats();
  CHECK(st.reused_slots + st.fresh_allocations == st.puts);
  CHECK(st.reused_slots == 2);
}

TEST_CASE("varlen: size classes and bucket occupancy") {
  const auto classes = size_classes(4096);
  CHECK(classes.front() == 16);
  CHECK(classes.back() == 4096);
  for (std::size_t i = 1; i < classes.size(); ++i) CHECK(classes[i] == 2 * classes[i - 1]);

  SimVfs disk;
  MappingStore s(disk);
  const auto p = s.create_partition(PartitionKind::Permanent, ValueLayout::varlen());
  const auto small = s.put(p, Bytes(10, 1));
  s.put(p, Bytes(100, 2));
  const auto bytes = s.stats().bytes_data;
  CHECK(bytes == 16 + 128);
  s.remove(small);
  s.put(p, Bytes(12, 3));
  CHECK(s.stats().bytes_data == bytes);
  s.put(p, Bytes(4096, 4));
  CHECK(s.stats().bytes_data == bytes + 4096);
}

TEST_CASE("promote: copy semantics and kind checks") {
  SimVfs disk;
  MappingStore s(disk);
  const auto tmp = s.create_partition(PartitionKind::Temporary, ValueLayout::varlen());
  const auto perm = s.create_partition(PartitionKind::Permanent, ValueLayout::varlen());
  const auto t = s.put(tmp, b("secret"));
  const auto f = s.promote(t, perm);
  CHECK(*s.get(f) == *s.get(t));
  CHECK(decode_fid(s.fid_config(), f).partition == perm);
  CHECK(code_of([&] { s.promote(f, perm); }) == Errc::WrongPartitionKind);
  CHECK(code_of([&] { s.promote(t, tmp); }) == Errc::WrongPartitionKind);
  s.remove(t);
  CHECK(code_of([&] { s.promote(t, perm); }) == Errc::NotLive);
}

TEST_CASE("promote: one permanent slot per field on the insert path") {
  SimVfs disk;
  MappingStore s(disk);
  const auto tmp = s.create_partition(PartitionKind::Temporary, ValueLayout::varlen());
  const auto perm = s.create_partition(PartitionKind::Permanent, ValueLayout::varlen());
  for (int i = 0; i < 10; ++i) s.promote(s.put(tmp, b("f" + std::to_string(i))), perm);
  s.drop_temporary(tmp);
  CHECK(s.stats().live_count == 10);
  CHECK(s.live_fids(perm).size() == 10);
}

TEST_CASE("drop_temporary: counts, resets, refuses permanent") {
  SimVfs disk;
  MappingStore s(disk);
  const auto tmp = s.create_partition(PartitionKind::Temporary, ValueLayout::varlen());
  CHECK(s.drop_temporary(tmp) == 0);
  std::vector<Fid> fids;
  for (int i = 0; i < 5; ++i) fids.push_back(s.put(tmp, b("t")));
  CHECK(s.drop_temporary(tmp) == 5);
  for (auto f : fids) CHECK_FALSE(s.get(f));
  CHECK(s.partition_info(tmp)->alloc_counter == 0);
  const auto perm = s.create_partition(PartitionKind::Permanent, ValueLayout::varlen());
  CHECK(code_of([&] { s.drop_temporary(perm); }) == Errc::WrongPartitionKind);
  const auto before = disk.size("store.wal");
  s.put(tmp, b("volatile"));
  s.flush_log();
  CHECK(disk.size("store.wal") == before);
}

TEST_CASE("create_partition: ids and exhaustion") {
  SimVfs disk;
  StoreConfig cfg;
  cfg.fid = FidConfig(4);
  MappingStore s(disk, cfg);
  for (std::uint32_t i = 0; i < 16; ++i) CHECK(s.create_partition(PartitionKind::Temporary, ValueLayout::varlen()) == i);
  CHECK(code_of([&] { s.create_partition(PartitionKind::Temporary, ValueLayout::varlen()); }) ==
        Errc::PartitionSpaceExhausted);
  s.release_partition(3);
  CHECK(s.create_partition(PartitionKind::Temporary, ValueLayout::varlen()) == 3);
}

TEST_CASE("recovery keeps permanent partition ids") {
  SimVfs disk;
  std::vector<std::uint32_t> ids;
  {
    MappingStore s(disk);
    s.create_partition(PartitionKind::Temporary, ValueLayout::varlen());
    ids.push_back(s.create_partition(PartitionKind::Permanent, ValueLayout::fixed(4)));
    ids.push_back(s.create_partition(PartitionKind::Permanent, ValueLayout::varlen()));
  }
  disk.crash();
  MappingStore r(disk);
  std::vector<std::uint32_t> got;
  for (const auto& p : r.partitions())
    if (p.kind == PartitionKind::Permanent) got.push_back(p.id);
  CHECK(got == ids);
}

TEST_CASE("fids do not depend on secret bytes") {
  auto run = [](char fill) {
    SimVfs disk;
    MappingStore s(disk);
    const auto p = s.create_partition(PartitionKind::Permanent, ValueLayout::varlen());
    std::mt19937_64 rng(5);
    std::vector<Fid> live, out;
    for (int i = 0; i < 2000; ++i) {
      if (!live.empty() && rng() % 3 == 0) {
        const auto k = rng() % live.size();
        s.remove(live[k]);
        live.erase(live.begin() + static_cast<long>(k));
      } else {
        const auto f = s.put(p, Bytes(1 + rng() % 200, static_cast<std::uint8_t>(fill)));
        live.push_back(f);
        out.push_back(f);
      }
    }
    return out;
  };
  CHECK(run('a') == run('z'));
}

TEST_CASE("random sequences match the reference model") {
  SimVfs disk;
  MappingStore s(disk);
  oracle::ModelStore m;
  const auto t = s.create_partition(PartitionKind::Temporary, ValueLayout::varlen());
  const auto p = s.create_partition(PartitionKind::Permanent, ValueLayout::varlen());
  const auto w = s.create_partition(PartitionKind::Permanent, ValueLayout::fixed(4));
  REQUIRE(m.create(false, 0) == t);
  REQUIRE(m.create(true, 0) == p);
  REQUIRE(m.create(true, 4) == w);
  std::mt19937_64 rng(3);
  std::vector<std::uint64_t> known;
  for (int i = 0; i < 100000; ++i) {
    const auto op = rng() % 10;
    if (op < 4) {
      const std::uint32_t part = std::array<std::uint32_t, 3>{t, p, w}[rng() % 3];
      const auto len = part == w ? 4 : 1 + rng() % 64;
      std::string v(len, static_cast<char>('a' + rng() % 26));
      const auto f = s.put(part, Bytes(v.begin(), v.end()));
      REQUIRE(m.put(part, v).fid == f.raw);
      known.push_back(f.raw);
    } else if (op < 7 && !known.empty()) {
      const auto f = known[rng() % known.size()];
      const auto got = s.get(Fid{f});
      const auto want = m.get(f);
      REQUIRE(got.has_value() == want.has_value());
      if (want) REQUIRE(std::string(got->begin(), got->end()) == *want);
    } else if (op < 9 && !known.empty()) {
      const auto f = known[rng() % known.size()];
      const auto want = m.remove(f);
      std::string err;
      try {
        s.remove(Fid{f});
      } catch (const Error& e) {
        err = std::string(errc_name(e.code()));
      }
      REQUIRE(err == want.error);
    } else if (rng() % 20 == 0) {
      REQUIRE(s.drop_temporary(t) == m.drop(t).count);
    }
  }
  CHECK(s.stats().live_count == m.live());
}

TEST_CASE("prefetch warms the cache; cold touches fault once per block") {
  SimVfs disk;
  StoreConfig cfg;
  cfg.cache_pages = 64;
  MappingStore s(disk, cfg);
  const auto p = s.create_partition(PartitionKind::Permanent, ValueLayout::fixed(8));
  std::vector<Fid> fids;
  for (int i = 0; i < 4096; ++i) fids.push_back(s.put(p, Bytes(8, static_cast<std::uint8_t>(i))));
  s.flush_log();
  s.evict_all();
  s.set_cache_pages(64);
  s.reset_cache_stats();
  // 8 blocks of 512 slots each.
  for (auto f : fids) s.get(f);
  CHECK(s.stats().cache_misses == 8);

  s.evict_all();
  s.reset_cache_stats();
  s.prefetch_partition(p);
  const auto before = s.stats().cache_misses;
  for (auto f : fids) s.get(f);
  CHECK(s.stats().cache_misses == before);
  CHECK(code_of([&] { s.prefetch_partition(55); }) == Errc::UnknownPartition);
}

TEST_CASE("cached gets do no crypto") {
  SimVfs disk;
  MappingStore s(disk);
  const auto p = s.create_partition(PartitionKind::Permanent, ValueLayout::fixed(4));
  std::vector<Fid> fids;
  for (int i = 0; i < 1000; ++i) fids.push_back(s.put(p, encode_le32(static_cast<std::uint32_t>(i))));
  const auto before = s.crypto_invocations();
  for (auto f : fids) s.get(f);
  CHECK(s.crypto_invocations() == before);
}

TEST_CASE("concurrent writers on distinct partitions and readers") {
  SimVfs disk;
  MappingStore s(disk);
  constexpr int kThreads = 4, kPuts = 5000;
  std::vector<std::uint32_t> parts;
  for (int i = 0; i < kThreads; ++i) parts.push_back(s.create_partition(PartitionKind::Temporary, ValueLayout::fixed(4)));
  std::vector<std::vector<Fid>> got(kThreads);
  std::vector<std::thread> ts;
  for (int i = 0; i < kThreads; ++i)
    ts.emplace_back([&, i] {
      for (int j = 0; j < kPuts; ++j) {
        got[i].push_back(s.put(parts[i], encode_le32(static_cast<std::uint32_t>(j))));
        auto v = s.get(got[i].back());
        if (!v || *v != encode_le32(static_cast<std::uint32_t>(j))) FAIL("read mismatch");
      }
    });
  for (auto& t : ts) t.join();
  std::set<Fid> all;
  for (auto& v : got) all.insert(v.begin(), v.end());
  CHECK(all.size() == kThreads * kPuts);
  CHECK(s.stats().puts == kThreads * kPuts);
}

TEST_CASE("partition image superblock layout") {
  SimVfs disk;
  {
    MappingStore s(disk);
    const auto p = s.create_partition(PartitionKind::Permanent, ValueLayout::fixed(4));
    s.put(p, encode_le32(1));
    s.put(p, encode_le32(2));
    s.checkpoint_truncate();
  }
  std::string image;
  for (const auto& n : disk.list(""))
    if (n.size() > 4 && n.substr(n.size() - 4) == ".fid") image = n;
  REQUIRE_FALSE(image.empty());
  const auto data = *disk.read(image);
  REQUIRE(data.size() >= kSuperblockBytes + 8);
  CHECK(std::string(data.begin(), data.begin() + 8) == "FIDSTOR1");
  CHECK(data[8] == 16);
  CHECK(data[9] == 1);
  CHECK(data[10] == 0);
  CHECK(load_le32(data.data() + 11) == 4);
  CHECK(load_le64(data.data() + 15) == 2);
  CHECK(load_le32(data.data() + kSuperblockBytes) == 1);
  const auto state = *disk.read(image.substr(0, image.size() - 4) + ".state");
  CHECK(state.size() == 1);
  CHECK(state[0] == 0b0101);
}
