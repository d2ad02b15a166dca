#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <unordered_set>
#include <vector>

#include "fidstore/aead.hpp"
#include "fidstore/atrest.hpp"
#include "fidstore/bytes.hpp"
#include "fidstore/fid.hpp"
#include "fidstore/rw_spin.hpp"
#include "fidstore/store_types.hpp"
#include "fidstore/vfs.hpp"
#include "fidstore/wal.hpp"

namespace fidstore {

class AdversaryTrace;

struct StoreConfig {
  FidConfig fid{};
  std::uint32_t max_value_len = 4096;
  std::uint64_t wal_size_bound = 64ULL << 20;
  // Page-cache capacity. A nonzero page count wins; otherwise the capacity
  // tracks `cache_fraction` of the permanent partition pages as they grow.
  std::size_t cache_pages = 0;
  double cache_fraction = 0.25;
  AeadKey atrest_key = derive_key("fidstore.atrest", 0);
  // Largest offset handed out per partition (0 = the full offset width).
  std::uint64_t offset_cap = 0;
};

struct StoreStats {
  std::uint64_t live_count = 0;
  std::uint64_t deleted_count = 0;
  std::uint64_t fresh_allocations = 0;
  std::uint64_t reused_slots = 0;
  std::uint64_t bytes_data = 0;
  std::uint64_t bytes_metadata = 0;
  std::uint64_t page_faults_simulated = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;

  std::uint64_t puts = 0;
  std::uint64_t gets = 0;
  std::uint64_t deletes = 0;
  std::uint64_t promotes = 0;
  std::uint64_t seals = 0;
  std::uint64_t opens = 0;
  std::uint64_t evictions = 0;
  std::uint64_t prefetched_pages = 0;
  std::uint64_t checkpoints = 0;
};

struct PartitionInfo {
  std::uint32_t id = 0;
  PartitionKind kind = PartitionKind::Temporary;
  ValueLayout layout;
  std::uint64_t alloc_counter = 0;
  std::uint64_t live = 0;
  std::uint64_t deleted = 0;
};

struct PartitionSnapshot {
  PartitionKind kind = PartitionKind::Temporary;
  ValueLayout layout;
  std::uint64_t alloc_counter = 0;
  std::map<std::uint64_t, Bytes> live;

  friend bool operator==(const PartitionSnapshot&, const PartitionSnapshot&) = default;
};
using StoreSnapshot = std::map<std::uint32_t, PartitionSnapshot>;

// Size classes of the VarLen arena: powers of two from 16 B up to the
// smallest power of two holding max_value_len.
std::vector<std::uint32_t> size_classes(std::uint32_t max_value_len);

// Partition image file: 32-byte superblock, slot data, and a ".state" sidecar.
inline constexpr std::size_t kSuperblockBytes = 32;
inline constexpr char kPartitionMagic[8] = {'F', 'I', 'D', 'S', 'T', 'O', 'R', '1'};

class MappingStore {
 public:
  // Opens the store found on `disk` (recovering it), or creates an empty one.
  MappingStore(Vfs& disk, StoreConfig cfg = {}, AdversaryTrace* trace = nullptr);
  ~MappingStore();
  MappingStore(const MappingStore&) = delete;
  MappingStore& operator=(const MappingStore&) = delete;

  const FidConfig& fid_config() const noexcept { return cfg_.fid; }
  const StoreConfig& config() const noexcept { return cfg_; }

  std::uint32_t create_partition(PartitionKind kind, ValueLayout layout);
  Fid put(std::uint32_t partition, ByteView secret);
  std::optional<Bytes> get(Fid fid);
  // Allocation-free variant of get; returns false when absent.
  bool get_into(Fid fid, Bytes& out);
  bool is_live(Fid fid) const;
  void remove(Fid fid);
  Fid promote(Fid temp_fid, std::uint32_t perm_partition);
  std::uint64_t drop_temporary(std::uint32_t partition);
  // Drops a temporary partition and returns its id to the allocator.
  void release_partition(std::uint32_t partition);

  std::uint64_t flush_log();
  // Discards volatile state and rebuilds it from the checkpoint image and the
  // durable log. Returns the number of records replayed.
  std::uint64_t recover();
  void checkpoint_truncate();
  void prefetch_partition(std::uint32_t partition);

  // Forget all volatile state, as a process crash would.
  void crash();

  std::vector<Fid> live_fids(std::uint32_t partition) const;
  std::vector<Fid> live_permanent_fids() const;
  std::vector<PartitionInfo> partitions() const;
  std::optional<PartitionInfo> partition_info(std::uint32_t partition) const;
  StoreSnapshot snapshot(bool permanent_only = true) const;

  StoreStats stats() const;
  void reset_cache_stats();
  std::uint64_t crypto_invocations() const;

  void set_cache_pages(std::size_t pages);
  void set_cache_fraction(double fraction);
  std::size_t cache_capacity() const;
  std::uint64_t permanent_pages() const;
  // Seals every resident page that the untrusted copy does not reflect.
  void evict_all();

  UntrustedBlockDevice& block_device() noexcept { return device_; }
  BlockSealer& sealer() noexcept { return sealer_; }
  const FramedLog& wal() const noexcept { return wal_; }
  std::uint64_t wal_bytes() const { return wal_.file_bytes() + wal_.buffered_bytes(); }
  std::uint64_t checkpoint_lsn() const;

 private:
  struct Bucket {
    Bytes data;
    std::uint64_t slots = 0;
    std::vector<std::uint64_t> free_slots;
    std::uint64_t occupied = 0;
  };
  struct Loc {
    std::uint8_t cls = 0;
    std::uint32_t len = 0;
    std::uint64_t slot = 0;
  };
  struct Partition {
    std::uint32_t id = 0;
    PartitionKind kind = PartitionKind::Temporary;
    ValueLayout layout;
    mutable RwSpinLock mu;
    std::uint64_t alloc_counter = 0;
    std::vector<SlotState> state;
    std::vector<std::uint64_t> free_list;  // back is reused first
    std::uint64_t live = 0;
    std::uint64_t deleted = 0;
    std::uint64_t fresh = 0;   // allocation counters, folded into the store totals on retirement
    std::uint64_t reused = 0;
    Bytes data;                // FixedWidth slots
    std::vector<Loc> index;    // VarLen offset index
    std::vector<Bucket> buckets;
  };

  void retire(const Partition* p);
  Partition* find(std::uint32_t id) const;
  Partition& must_find(std::uint32_t id) const;
  bool permanent(const Partition& p) const { return p.kind == PartitionKind::Permanent; }
  std::uint64_t offset_cap() const;
  std::uint8_t class_for(std::uint32_t len) const;
  std::uint64_t pages_of(const Partition& p) const;

  void validate_value(const Partition& p, ByteView v) const;
  std::uint64_t choose_offset(Partition& p, bool& reused);
  void claim_offset(Partition& p, std::uint64_t off);
  void write_slot(Partition& p, std::uint64_t off, ByteView v);
  void read_slot(const Partition& p, std::uint64_t off, Bytes& out) const;
  void clear_slot(Partition& p, std::uint64_t off);
  std::vector<BlockId> slot_pages(const Partition& p, std::uint64_t off) const;
  std::vector<BlockId> partition_pages(const Partition& p) const;

  // Page cache, under cache_mu_.
  void touch_locked(BlockId id, bool dirty);
  void evict_locked(const PageCache::Evicted& e);
  Bytes page_bytes_locked(BlockId id) const;
  void grow_cache_locked();

  void log_put(Fid fid, ByteView v);
  void maybe_checkpoint();
  void checkpoint_locked();
  void apply(const LogRecord& rec);
  Bytes encode_image(const Partition& p) const;
  Bytes encode_state(const Partition& p) const;
  std::unique_ptr<Partition> decode_image(std::uint32_t id, ByteView image, ByteView state);
  std::uint32_t allocate_id();
  void reset_volatile();

  StoreConfig cfg_;
  Vfs& disk_;
  AdversaryTrace* trace_;
  std::vector<std::uint32_t> classes_;

  mutable RwSpinLock table_mu_;
  std::vector<std::unique_ptr<Partition>> parts_;
  std::uint64_t next_fresh_id_ = 0;
  std::deque<std::uint32_t> released_ids_;

  FramedLog wal_;
  std::uint64_t ckpt_lsn_ = 0;
  std::uint64_t quiet_lsn_ = ~0ULL;  // log end when memory equals the image

  mutable std::mutex cache_mu_;
  PageCache cache_;
  std::unordered_set<BlockId, BlockIdHash> sealed_current_;
  BlockSealer sealer_;
  UntrustedBlockDevice device_;
  std::uint64_t perm_pages_ = 0;
  std::uint64_t faults_ = 0;
  std::uint64_t hits_ = 0;
  std::uint64_t evictions_ = 0;
  std::uint64_t prefetched_ = 0;
  std::uint64_t checkpoints_ = 0;

  std::atomic<std::uint64_t> fresh_{0};   // retired partitions only
  std::atomic<std::uint64_t> reused_{0};
  std::atomic<std::uint64_t> gets_{0};
  std::atomic<std::uint64_t> deletes_{0};
  std::atomic<std::uint64_t> promotes_{0};
};

}  // namespace fidstore
