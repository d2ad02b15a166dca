#include "doctest.h"

#include "fidstore/mapping_store.hpp"
#include "fidstore/vfs.hpp"
#include "fidstore/wal.hpp"

using namespace fidstore;

namespace {

Bytes b(const std::string& s) { return Bytes(s.begin(), s.end()); }

}  // namespace

TEST_CASE("append assigns lsns from one") {
  SimVfs disk;
  FramedLog log(disk, "t.wal");
  log.open();
  CHECK(log.append(1, b("a")) == 1);
  CHECK(log.append(1, b("b")) == 2);
  CHECK(log.append(1, b("c")) == 3);
}

TEST_CASE("append on a closed log") {
  SimVfs disk;
  FramedLog log(disk, "t.wal");
  CHECK_THROWS_AS(log.append(1, b("a")), Error);
}

TEST_CASE("flush: empty buffer writes nothing") {
  SimVfs disk;
  FramedLog log(disk, "t.wal");
  log.open();
  log.append(1, b("a"));
  CHECK(log.flush() == 1);
  const auto bytes = disk.synced_bytes();
  const auto flushes = log.flushes();
  CHECK(log.flush() == 1);
  CHECK(disk.synced_bytes() == bytes);
  CHECK(log.flushes() == flushes);
}

TEST_CASE("crash keeps flushed records and drops buffered ones") {
  SimVfs disk;
  {
    FramedLog log(disk, "t.wal");
    log.open();
    log.append(1, b("durable"));
    log.append(1, b("durable2"));
    log.flush();
    log.append(1, b("lost"));
  }
  disk.crash();
  FramedLog log(disk, "t.wal");
  const auto scan = log.open();
  REQUIRE(scan.records.size() == 2);
  CHECK(scan.records[1].payload == b("durable2"));
  CHECK(log.append(1, b("next")) == 3);
}

TEST_CASE("torn tail is cut; damage before a good record is corruption") {
  SimVfs disk;
  {
    FramedLog log(disk, "t.wal");
    log.open();
    for (int i = 0; i < 3; ++i) log.append(1, b("record-" + std::to_string(i)));
    log.flush();
  }
  const auto full = disk.size("t.wal");
  disk.truncate_durable("t.wal", full - 3);
  disk.crash();
  {
    FramedLog log(disk, "t.wal");
    const auto scan = log.open();
    CHECK(scan.torn_tail);
    CHECK(scan.records.size() == 2);
  }
  SimVfs disk2;
  {
    FramedLog log(disk2, "t.wal");
    log.open();
    for (int i = 0; i < 3; ++i) log.append(1, b("record-" + std::to_string(i)));
    log.flush();
  }
  disk2.corrupt_durable("t.wal", kFrameHeader + kBodyHeader + 2, 0x40);
  disk2.crash();
  FramedLog log(disk2, "t.wal");
  try {
    log.open();
    FAIL("expected CorruptLog");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::CorruptLog);
  }
}

TEST_CASE("frame layout") {
  const auto f = frame_record(5, 2, b("xy"));
  REQUIRE(f.size() == kFrameHeader + kBodyHeader + 2);
  CHECK(load_le32(f.data()) == kBodyHeader + 2);
  CHECK(load_le32(f.data() + 4) == crc32(ByteView(f).subspan(kFrameHeader)));
  CHECK(load_le64(f.data() + 8) == 5);
  CHECK(f[16] == 2);
}

TEST_CASE("store recovery: empty log, k puts, idempotence") {
  SimVfs disk;
  {
    MappingStore s(disk);
    CHECK(s.recover() == 0);
    CHECK(s.snapshot().empty());
  }
  std::uint32_t p;
  {
    MappingStore s(disk);
    p = s.create_partition(PartitionKind::Permanent, ValueLayout::varlen());
    for (int i = 0; i < 10; ++i) s.put(p, b("v" + std::to_string(i)));
    s.flush_log();
  }
  disk.crash();
  MappingStore s(disk);
  CHECK(s.partition_info(p)->live == 10);
  const auto once = s.snapshot();
  s.recover();
  CHECK(s.snapshot() == once);
  s.recover();
  CHECK(s.snapshot() == once);
}

TEST_CASE("checkpoint: image plus empty log equals the state before") {
  SimVfs disk;
  StoreSnapshot before;
  {
    MappingStore s(disk);
    const auto p = s.create_partition(PartitionKind::Permanent, ValueLayout::varlen());
    const auto w = s.create_partition(PartitionKind::Permanent, ValueLayout::fixed(8));
    std::vector<Fid> fids;
    for (int i = 0; i < 300; ++i) fids.push_back(s.put(i % 2 ? p : w, Bytes(8, static_cast<std::uint8_t>(i))));
    for (int i = 0; i < 300; i += 7) s.remove(fids[i]);
    s.checkpoint_truncate();
    before = s.snapshot();
    const auto lsn = s.checkpoint_lsn();
    s.checkpoint_truncate();
    CHECK(s.checkpoint_lsn() == lsn);
  }
  disk.crash();
  MappingStore s(disk);
  CHECK(s.snapshot() == before);
}

TEST_CASE("size bound triggers truncation") {
  SimVfs disk;
  StoreConfig cfg;
  cfg.wal_size_bound = 1 << 20;
  MappingStore s(disk, cfg);
  const auto p = s.create_partition(PartitionKind::Permanent, ValueLayout::varlen());
  const Bytes v(1000, 7);
  for (int i = 0; i < 2100; ++i) {
    s.put(p, v);
    s.flush_log();
  }
  CHECK(s.stats().checkpoints >= 1);
  CHECK(disk.size("store.wal") < cfg.wal_size_bound + v.size() + 64);
}

TEST_CASE("recovered next lsn follows the durable log") {
  SimVfs disk;
  std::uint64_t last;
  {
    MappingStore s(disk);
    const auto p = s.create_partition(PartitionKind::Permanent, ValueLayout::varlen());
    s.put(p, b("x"));
    s.flush_log();
    last = s.wal().last_lsn();
  }
  disk.crash();
  MappingStore s(disk);
  CHECK(s.wal().next_lsn() > last);
}
