#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include "fidstore/bytes.hpp"
#include "fidstore/vfs.hpp"

namespace fidstore {

// Framing shared by store.wal and db.wal:
//   {u32 body_len, u32 crc32(body), body = {u64 lsn, u8 kind, payload}}
struct LogRecord {
  std::uint64_t lsn = 0;
  std::uint8_t kind = 0;
  Bytes payload;

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

inline constexpr std::size_t kFrameHeader = 8;
inline constexpr std::size_t kBodyHeader = 9;

Bytes frame_record(std::uint64_t lsn, std::uint8_t kind, ByteView payload);

struct LogScan {
  std::vector<LogRecord> records;
  std::uint64_t valid_bytes = 0;  // length of the well-formed prefix
  bool torn_tail = false;
};

// A damaged record that is followed by a well-formed one can not be a torn
// write and raises CorruptLog. Anything else at the end is a torn tail.
LogScan scan_log(ByteView file);

class FramedLog {
 public:
  FramedLog(Vfs& vfs, std::string name) : vfs_(vfs), name_(std::move(name)) {}

  // Reads the durable log, cuts a torn tail and positions the next lsn after
  // max(last record, min_lsn).
  LogScan open(std::uint64_t min_lsn = 0);
  void close();
  bool is_open() const;

  // Buffers a record; not durable until flush().
  std::uint64_t append(std::uint8_t kind, ByteView payload);
  // Blocking group flush of everything buffered so far. Returns the durable lsn.
  std::uint64_t flush();
  // Atomically replaces the log with `records` (write aside, sync, rename).
  void rewrite(const std::vector<LogRecord>& records);

  std::uint64_t next_lsn() const;
  std::uint64_t durable_lsn() const;
  std::uint64_t last_lsn() const;
  std::uint64_t buffered_bytes() const;
  std::uint64_t file_bytes() const;
  std::uint64_t flushes() const;
  const std::string& name() const noexcept { return name_; }

 private:
  mutable std::mutex mu_;
  Vfs& vfs_;
  std::string name_;
  bool open_ = false;
  bool unsynced_ = false;
  std::uint64_t next_lsn_ = 1;
  std::uint64_t durable_lsn_ = 0;
  std::uint64_t pending_lsn_ = 0;
  std::uint64_t file_bytes_ = 0;
  std::uint64_t flushes_ = 0;
  Bytes buffer_;
};

// Store log record kinds.
enum class WalKind : std::uint8_t {
  Put = 1,
  Delete = 2,
  CreatePartition = 3,
  Checkpoint = 4,
  Seal = 5,
  Epoch = 6,
};

}  // namespace fidstore
