#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "fidstore/fid.hpp"

namespace fidstore {

// What an observer outside both trusted zones can see. The vocabulary is
// closed: access pattern (FIDs, blocks), message sizes, result sizes,
// comparison outcomes and operator kinds. No event carries payload bytes.
enum class EventKind : std::uint8_t {
  FidObserved,
  BlockRead,
  BlockWrite,
  MsgBytes,
  ResultSize,
  CmpBool,
  OpKindObserved,
};

std::string_view event_kind_name(EventKind k) noexcept;

struct TraceEvent {
  std::uint64_t t = 0;  // logical clock: event index
  EventKind kind = EventKind::MsgBytes;
  std::uint64_t value = 0;  // fid raw, block index, length, size, bool or op code
  std::string device;       // block events only

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

class AdversaryTrace {
 public:
  void fid(Fid f) { push(EventKind::FidObserved, f.raw); }
  void block_read(std::string_view device, std::uint64_t block) {
    push(EventKind::BlockRead, block, device);
  }
  void block_write(std::string_view device, std::uint64_t block) {
    push(EventKind::BlockWrite, block, device);
  }
  void msg_bytes(std::size_t n) { push(EventKind::MsgBytes, n); }
  void result_size(std::size_t n) { push(EventKind::ResultSize, n); }
  void cmp_bool(bool b) { push(EventKind::CmpBool, b ? 1 : 0); }
  void op_kind(std::uint8_t op) { push(EventKind::OpKindObserved, op); }

  std::vector<TraceEvent> events() const;
  std::size_t size() const;
  void clear();
  void set_enabled(bool on);

  std::string to_jsonl() const;
  std::uint64_t digest() const;

 private:
  void push(EventKind kind, std::uint64_t value, std::string_view device = {});

  mutable std::mutex mu_;
  std::vector<TraceEvent> events_;
  bool enabled_ = true;
};

}  // namespace fidstore
