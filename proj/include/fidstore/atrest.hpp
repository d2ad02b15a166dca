#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <list>
#include <map>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "fidstore/aead.hpp"
#include "fidstore/bytes.hpp"

namespace fidstore {

class AdversaryTrace;

inline constexpr std::size_t kBlockSize = 4096;

struct BlockId {
  std::uint32_t partition = 0;
  std::uint64_t index = 0;

  friend constexpr auto operator<=>(const BlockId&, const BlockId&) = default;
};

struct BlockIdHash {
  std::size_t operator()(const BlockId& b) const noexcept {
    return std::hash<std::uint64_t>{}(b.index * 0x9e3779b97f4a7c15ULL ^ b.partition);
  }
};

// One evicted page under authenticated encryption. On-medium layout:
// {u64 counter, 12-byte nonce, 16-byte tag, 4096-byte ciphertext}.
struct SealedBlock {
  static constexpr std::size_t kOverhead = 8 + kNonceBytes + kTagBytes;  // 36
  static constexpr std::size_t kWireSize = kOverhead + kBlockSize;

  std::uint64_t counter = 0;
  Nonce nonce{};
  Tag tag{};
  Bytes ciphertext;  // kBlockSize bytes

  Bytes serialize() const;
  static SealedBlock parse(ByteView wire);

  friend bool operator==(const SealedBlock&, const SealedBlock&) = default;
};

// Latest accepted counter per block. Lives in trusted memory; persisted with
// the store checkpoint and replayed from the store WAL.
class FreshnessTable {
 public:
  std::optional<std::uint64_t> get(BlockId id) const;
  // Next counter: one past the last, and never below the floor.
  std::uint64_t bump(BlockId id);
  // Raise the counter to at least `counter` (replay).
  void observe(BlockId id, std::uint64_t counter);
  const std::map<BlockId, std::uint64_t>& entries() const noexcept { return counters_; }
  void clear() {
    counters_.clear();
    floor_ = 0;
  }

  // Counters issued after a restart start at the floor, so a block sealed
  // before the crash but never logged can not share a counter with a later one.
  std::uint64_t floor() const noexcept { return floor_; }
  void set_floor(std::uint64_t f) { floor_ = std::max(floor_, f); }

  Bytes serialize() const;
  static FreshnessTable parse(ByteView b);

 private:
  std::map<BlockId, std::uint64_t> counters_;
  std::uint64_t floor_ = 0;
};

class BlockSealer {
 public:
  explicit BlockSealer(const AeadKey& key) : aead_(key) {}

  // plaintext must be exactly one block.
  SealedBlock seal_block(BlockId id, ByteView plaintext);
  // AuthFailure on any corruption; StaleBlock when an authentic block carries
  // an older counter than the freshness table.
  Bytes open_block(BlockId id, const SealedBlock& sealed);

  FreshnessTable& freshness() noexcept { return table_; }
  const FreshnessTable& freshness() const noexcept { return table_; }

  std::uint64_t seals() const noexcept { return seals_; }
  std::uint64_t opens() const noexcept { return opens_; }

 private:
  std::mutex mu_;
  AesGcm aead_;
  FreshnessTable table_;
  std::uint64_t seals_ = 0;
  std::uint64_t opens_ = 0;
};

// Untrusted storage for sealed blocks. Every access is visible to the
// adversary and recorded in the trace.
class UntrustedBlockDevice {
 public:
  explicit UntrustedBlockDevice(AdversaryTrace* trace = nullptr) : trace_(trace) {}

  void put(BlockId id, const SealedBlock& block);
  std::optional<SealedBlock> get(BlockId id) const;
  bool contains(BlockId id) const;
  void erase_partition(std::uint32_t partition);
  void clear();
  std::size_t size() const;

  // Per-partition file image: sealed blocks in ascending block order.
  Bytes partition_image(std::uint32_t partition) const;
  // Test hooks for active attacks.
  Bytes* raw(BlockId id);
  void overwrite(BlockId id, Bytes wire);
  Bytes all_bytes() const;

 private:
  mutable std::mutex mu_;
  AdversaryTrace* trace_;
  std::map<BlockId, Bytes> blocks_;
};

// LRU set of resident pages. Capacity is in pages.
class PageCache {
 public:
  struct Evicted {
    BlockId id;
    bool dirty;
  };
  struct Touch {
    bool hit = false;
    std::optional<Evicted> evicted;
  };

  explicit PageCache(std::size_t capacity_pages = SIZE_MAX) : capacity_(capacity_pages) {}

  Touch touch(BlockId id, bool dirty);
  bool contains(BlockId id) const { return index_.count(id) != 0; }
  void mark_clean(BlockId id);
  void erase_partition(std::uint32_t partition);
  void clear();
  // Shrinking evicts from the cold end; evictions are returned.
  std::vector<Evicted> set_capacity(std::size_t pages);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return index_.size(); }

 private:
  struct Entry {
    BlockId id;
    bool dirty;
  };

  std::size_t capacity_;
  std::list<Entry> lru_;  // front = most recent
  std::unordered_map<BlockId, std::list<Entry>::iterator, BlockIdHash> index_;
};

}  // namespace fidstore
