#include "fidstore/mapping_store.hpp"

#include <algorithm>
#include <cstring>
#include <cmath>
#include <string>

#include "fidstore/trace.hpp"

namespace fidstore {

namespace {

constexpr const char* kMarker = "store.ckpt";
constexpr const char* kLogName = "store.wal";
constexpr unsigned kClassShift = 40;

std::string image_dir(std::uint64_t lsn) { return "img." + std::to_string(lsn) + "/"; }

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

}  // namespace

std::vector<std::uint32_t> size_classes(std::uint32_t max_value_len) {
  std::vector<std::uint32_t> out;
  std::uint32_t c = 16;
  out.push_back(c);
  while (c < max_value_len) {
    c *= 2;
    out.push_back(c);
  }
  return out;
}

MappingStore::MappingStore(Vfs& disk, StoreConfig cfg, AdversaryTrace* trace)
    : cfg_(std::move(cfg)),
      disk_(disk),
      trace_(trace),
      classes_(size_classes(cfg_.max_value_len)),
      wal_(disk, kLogName),
      cache_(1),
      sealer_(cfg_.atrest_key),
      device_(trace) {
  if (cfg_.max_value_len == 0) fail(Errc::InvalidArgument, "max_value_len must be positive");
  recover();
}

MappingStore::~MappingStore() = default;

// ------------------------------------------------------------------ helpers

MappingStore::Partition* MappingStore::find(std::uint32_t id) const {
  return id < parts_.size() ? parts_[id].get() : nullptr;
}

MappingStore::Partition& MappingStore::must_find(std::uint32_t id) const {
  Partition* p = find(id);
  if (!p) fail(Errc::UnknownPartition, "partition " + std::to_string(id));
  return *p;
}

std::uint64_t MappingStore::offset_cap() const {
  const auto limit = cfg_.fid.offset_limit();
  return cfg_.offset_cap == 0 ? limit : std::min(cfg_.offset_cap, limit);
}

std::uint8_t MappingStore::class_for(std::uint32_t len) const {
  auto it = std::lower_bound(classes_.begin(), classes_.end(), len);
  return static_cast<std::uint8_t>(it - classes_.begin());
}

std::uint64_t MappingStore::pages_of(const Partition& p) const {
  if (p.layout.is_fixed()) return ceil_div(p.alloc_counter * p.layout.width, kBlockSize);
  std::uint64_t n = 0;
  for (std::size_t c = 0; c < p.buckets.size(); ++c)
    n += ceil_div(p.buckets[c].slots * classes_[c], kBlockSize);
  return n;
}

void MappingStore::validate_value(const Partition& p, ByteView v) const {
  if (v.empty()) fail(Errc::InvalidArgument, "empty secret");
  if (v.size() > cfg_.max_value_len) fail(Errc::ValueTooLarge, std::to_string(v.size()) + " bytes");
  if (p.layout.is_fixed() && v.size() != p.layout.width)
    fail(Errc::WidthMismatch,
         std::to_string(v.size()) + " bytes into width " + std::to_string(p.layout.width));
}

std::uint64_t MappingStore::choose_offset(Partition& p, bool& reused) {
  if (!p.free_list.empty()) {
    reused = true;
    const auto off = p.free_list.back();
    p.free_list.pop_back();
    return off;
  }
  reused = false;
  if (p.alloc_counter >= offset_cap()) fail(Errc::PartitionFull, "partition " + std::to_string(p.id));
  return p.alloc_counter;
}

void MappingStore::claim_offset(Partition& p, std::uint64_t off) {
  if (off < p.alloc_counter) {
    if (p.state[off] == SlotState::Live) fail(Errc::CorruptLog, "put over a live slot");
    if (p.state[off] == SlotState::LogicallyDeleted) {
      auto it = std::find(p.free_list.rbegin(), p.free_list.rend(), off);
      if (it != p.free_list.rend()) p.free_list.erase(std::next(it).base());
    }
    return;
  }
  if (off >= offset_cap()) fail(Errc::PartitionFull, "partition " + std::to_string(p.id));
  p.alloc_counter = off + 1;
  // Backing vectors grow geometrically and may run ahead of alloc_counter.
  if (p.alloc_counter > p.state.size()) {
    const auto cap = std::max<std::uint64_t>({p.alloc_counter, 2 * p.state.size(), 64});
    p.state.resize(cap, SlotState::Unused);
    if (p.layout.is_fixed())
      p.data.resize(cap * p.layout.width, 0);
    else
      p.index.resize(cap);
  }
}

void MappingStore::write_slot(Partition& p, std::uint64_t off, ByteView v) {
  claim_offset(p, off);
  if (p.layout.is_fixed()) {
    std::copy(v.begin(), v.end(), p.data.begin() + static_cast<std::ptrdiff_t>(off * p.layout.width));
  } else {
    const auto cls = class_for(static_cast<std::uint32_t>(v.size()));
    auto& b = p.buckets[cls];
    std::uint64_t slot;
    if (!b.free_slots.empty()) {
      slot = b.free_slots.back();
      b.free_slots.pop_back();
    } else {
      slot = b.slots++;
      b.data.resize(b.slots * classes_[cls], 0);
    }
    ++b.occupied;
    std::copy(v.begin(), v.end(), b.data.begin() + static_cast<std::ptrdiff_t>(slot * classes_[cls]));
    p.index[off] = Loc{cls, static_cast<std::uint32_t>(v.size()), slot};
  }
  if (p.state[off] == SlotState::LogicallyDeleted) --p.deleted;
  p.state[off] = SlotState::Live;
  ++p.live;
}

void MappingStore::read_slot(const Partition& p, std::uint64_t off, Bytes& out) const {
  if (p.layout.is_fixed()) {
    const auto* src = p.data.data() + off * p.layout.width;
    out.assign(src, src + p.layout.width);
  } else {
    const Loc& loc = p.index[off];
    const auto* src = p.buckets[loc.cls].data.data() + loc.slot * classes_[loc.cls];
    out.assign(src, src + loc.len);
  }
}

void MappingStore::clear_slot(Partition& p, std::uint64_t off) {
  if (p.layout.is_fixed()) {
    auto first = p.data.begin() + static_cast<std::ptrdiff_t>(off * p.layout.width);
    std::fill(first, first + p.layout.width, 0);
  } else {
    Loc& loc = p.index[off];
    auto& b = p.buckets[loc.cls];
    auto first = b.data.begin() + static_cast<std::ptrdiff_t>(loc.slot * classes_[loc.cls]);
    std::fill(first, first + classes_[loc.cls], 0);
    b.free_slots.push_back(loc.slot);
    --b.occupied;
    loc = Loc{};
  }
  p.state[off] = SlotState::LogicallyDeleted;
  p.free_list.push_back(off);
  --p.live;
  ++p.deleted;
}

std::vector<BlockId> MappingStore::slot_pages(const Partition& p, std::uint64_t off) const {
  std::vector<BlockId> out;
  std::uint64_t first, last, tag = 0;
  if (p.layout.is_fixed()) {
    first = off * p.layout.width / kBlockSize;
    last = (off * p.layout.width + p.layout.width - 1) / kBlockSize;
  } else {
    const Loc& loc = p.index[off];
    const std::uint64_t size = classes_[loc.cls];
    first = loc.slot * size / kBlockSize;
    last = (loc.slot * size + size - 1) / kBlockSize;
    tag = (static_cast<std::uint64_t>(loc.cls) + 1) << kClassShift;
  }
  for (auto i = first; i <= last; ++i) out.push_back(BlockId{p.id, tag | i});
  return out;
}

std::vector<BlockId> MappingStore::partition_pages(const Partition& p) const {
  std::vector<BlockId> out;
  if (p.layout.is_fixed()) {
    const auto n = pages_of(p);
    for (std::uint64_t i = 0; i < n; ++i) out.push_back(BlockId{p.id, i});
    return out;
  }
  for (std::size_t c = 0; c < p.buckets.size(); ++c) {
    const auto n = ceil_div(p.buckets[c].slots * classes_[c], kBlockSize);
    const std::uint64_t tag = (static_cast<std::uint64_t>(c) + 1) << kClassShift;
    for (std::uint64_t i = 0; i < n; ++i) out.push_back(BlockId{p.id, tag | i});
  }
  return out;
}

// --------------------------------------------------------------- page cache

Bytes MappingStore::page_bytes_locked(BlockId id) const {
  Bytes page(kBlockSize, 0);
  const Partition* p = find(id.partition);
  if (!p) return page;
  const Bytes* src;
  std::uint64_t index = id.index;
  if (p->layout.is_fixed()) {
    src = &p->data;
  } else {
    const auto cls = (index >> kClassShift) - 1;
    if (cls >= p->buckets.size()) return page;
    src = &p->buckets[cls].data;
    index &= (1ULL << kClassShift) - 1;
  }
  const std::uint64_t begin = index * kBlockSize;
  if (begin < src->size()) {
    const auto n = std::min<std::uint64_t>(kBlockSize, src->size() - begin);
    std::copy_n(src->begin() + static_cast<std::ptrdiff_t>(begin), n, page.begin());
  }
  return page;
}

void MappingStore::touch_locked(BlockId id, bool dirty) {
  const auto t = cache_.touch(id, dirty);
  if (t.hit) {
    ++hits_;
  } else {
    ++faults_;
    if (sealed_current_.count(id)) {
      // Memory stays authoritative; a write may already have changed it.
      auto sealed = device_.get(id);
      if (!sealed) fail(Errc::AuthFailure, "sealed page missing from untrusted storage");
      const Bytes plain = sealer_.open_block(id, *sealed);
      if (!dirty && plain != page_bytes_locked(id)) fail(Errc::AuthFailure, "sealed page content diverged");
    }
  }
  if (dirty) sealed_current_.erase(id);
  if (t.evicted) evict_locked(*t.evicted);
}

void MappingStore::evict_locked(const PageCache::Evicted& e) {
  ++evictions_;
  if (sealed_current_.count(e.id)) return;
  const SealedBlock sealed = sealer_.seal_block(e.id, page_bytes_locked(e.id));
  device_.put(e.id, sealed);
  sealed_current_.insert(e.id);
  if (wal_.is_open()) {
    Bytes payload;
    ByteWriter w(payload);
    w.u32(e.id.partition);
    w.u64(e.id.index);
    w.u64(sealed.counter);
    wal_.append(static_cast<std::uint8_t>(WalKind::Seal), payload);
  }
}

void MappingStore::grow_cache_locked() {
  if (cfg_.cache_pages != 0) return;
  const auto want = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(std::ceil(cfg_.cache_fraction * static_cast<double>(perm_pages_))));
  if (want > cache_.capacity()) cache_.set_capacity(want);
}

// --------------------------------------------------------------- operations

std::uint32_t MappingStore::allocate_id() {
  std::uint32_t id;
  if (next_fresh_id_ < cfg_.fid.partition_limit()) {
    id = static_cast<std::uint32_t>(next_fresh_id_++);
  } else if (!released_ids_.empty()) {
    id = released_ids_.front();
    released_ids_.pop_front();
  } else {
    fail(Errc::PartitionSpaceExhausted,
         "all " + std::to_string(cfg_.fid.partition_limit()) + " partition ids in use");
  }
  if (id >= parts_.size()) parts_.resize(static_cast<std::size_t>(id) + 1);
  return id;
}

std::uint32_t MappingStore::create_partition(PartitionKind kind, ValueLayout layout) {
  if (layout.is_fixed() && (layout.width == 0 || layout.width > cfg_.max_value_len))
    fail(Errc::InvalidArgument, "fixed width must be in [1, max_value_len]");
  if (!layout.is_fixed()) layout.width = 0;
  std::uint32_t id;
  {
    std::unique_lock lock(table_mu_);
    if (kind == PartitionKind::Permanent && !wal_.is_open()) fail(Errc::LogClosed, kLogName);
    id = allocate_id();
    auto p = std::make_unique<Partition>();
    p->id = id;
    p->kind = kind;
    p->layout = layout;
    if (!layout.is_fixed()) p->buckets.resize(classes_.size());
    parts_[id] = std::move(p);
    if (kind == PartitionKind::Permanent) {
      Bytes payload;
      ByteWriter w(payload);
      w.u32(id);
      w.u8(static_cast<std::uint8_t>(kind));
      w.u8(static_cast<std::uint8_t>(layout.kind));
      w.u32(layout.width);
      wal_.append(static_cast<std::uint8_t>(WalKind::CreatePartition), payload);
      wal_.flush();
    }
  }
  maybe_checkpoint();
  return id;
}

void MappingStore::log_put(Fid fid, ByteView v) {
  Bytes payload;
  payload.reserve(8 + v.size());
  ByteWriter w(payload);
  w.u64(fid.raw);
  w.raw(v);
  wal_.append(static_cast<std::uint8_t>(WalKind::Put), payload);
}

Fid MappingStore::put(std::uint32_t partition, ByteView secret) {
  Fid fid;
  bool perm;
  {
    std::shared_lock table(table_mu_);
    Partition& p = must_find(partition);
    std::unique_lock lock(p.mu);
    validate_value(p, secret);
    perm = permanent(p);
    if (perm && !wal_.is_open()) fail(Errc::LogClosed, kLogName);
    bool reused = false;
    const auto off = choose_offset(p, reused);
    fid = encode_fid(cfg_.fid, partition, off);
    if (perm) {
      log_put(fid, secret);
      std::lock_guard cache(cache_mu_);
      const auto before = pages_of(p);
      write_slot(p, off, secret);
      perm_pages_ += pages_of(p) - before;
      grow_cache_locked();
      for (const auto& b : slot_pages(p, off)) touch_locked(b, true);
    } else {
      write_slot(p, off, secret);
    }
    ++(reused ? p.reused : p.fresh);
  }
  if (perm) maybe_checkpoint();
  return fid;
}

bool MappingStore::get_into(Fid fid, Bytes& out) {
  const auto parts = decode_fid(cfg_.fid, fid);
  gets_.fetch_add(1, std::memory_order_relaxed);
  bool perm;
  {
    std::shared_lock table(table_mu_);
    if (parts.partition >= parts_.size()) return false;
    const Partition* p = parts_[parts.partition].get();
    if (!p) return false;
    std::shared_lock lock(p->mu);
    if (parts.offset >= p->alloc_counter || p->state[parts.offset] != SlotState::Live) return false;
    perm = permanent(*p);
    if (!perm) {
      read_slot(*p, parts.offset, out);
      return true;
    }
    std::lock_guard cache(cache_mu_);
    for (const auto& b : slot_pages(*p, parts.offset)) touch_locked(b, false);
    read_slot(*p, parts.offset, out);
  }
  maybe_checkpoint();
  return true;
}

std::optional<Bytes> MappingStore::get(Fid fid) {
  Bytes out;
  if (!get_into(fid, out)) return std::nullopt;
  return out;
}

bool MappingStore::is_live(Fid fid) const {
  const auto parts = decode_fid(cfg_.fid, fid);
  std::shared_lock table(table_mu_);
  if (parts.partition >= parts_.size()) return false;
  const Partition* p = parts_[parts.partition].get();
  if (!p) return false;
  std::shared_lock lock(p->mu);
  return parts.offset < p->alloc_counter && p->state[parts.offset] == SlotState::Live;
}

void MappingStore::remove(Fid fid) {
  const auto parts = decode_fid(cfg_.fid, fid);
  bool perm;
  {
    std::shared_lock table(table_mu_);
    Partition* p = parts.partition < parts_.size() ? parts_[parts.partition].get() : nullptr;
    if (!p) fail(Errc::NotLive, to_string(fid));
    std::unique_lock lock(p->mu);
    if (parts.offset >= p->alloc_counter || p->state[parts.offset] != SlotState::Live)
      fail(Errc::NotLive, to_string(fid));
    perm = permanent(*p);
    if (perm) {
      if (!wal_.is_open()) fail(Errc::LogClosed, kLogName);
      Bytes payload;
      ByteWriter(payload).u64(fid.raw);
      wal_.append(static_cast<std::uint8_t>(WalKind::Delete), payload);
      std::lock_guard cache(cache_mu_);
      for (const auto& b : slot_pages(*p, parts.offset)) touch_locked(b, true);
      clear_slot(*p, parts.offset);
    } else {
      clear_slot(*p, parts.offset);
    }
    deletes_.fetch_add(1, std::memory_order_relaxed);
  }
  if (perm) maybe_checkpoint();
}

Fid MappingStore::promote(Fid temp_fid, std::uint32_t perm_partition) {
  const auto parts = decode_fid(cfg_.fid, temp_fid);
  Bytes value;
  {
    std::shared_lock table(table_mu_);
    const Partition* src = find(static_cast<std::uint32_t>(parts.partition));
    if (!src) fail(Errc::NotLive, to_string(temp_fid));
    if (src->kind != PartitionKind::Temporary)
      fail(Errc::WrongPartitionKind, "promote source must be temporary");
    const Partition& dst = must_find(perm_partition);
    if (dst.kind != PartitionKind::Permanent)
      fail(Errc::WrongPartitionKind, "promote target must be permanent");
    std::shared_lock lock(src->mu);
    if (parts.offset >= src->alloc_counter || src->state[parts.offset] != SlotState::Live)
      fail(Errc::NotLive, to_string(temp_fid));
    read_slot(*src, parts.offset, value);
  }
  promotes_.fetch_add(1, std::memory_order_relaxed);
  return put(perm_partition, value);
}

std::uint64_t MappingStore::drop_temporary(std::uint32_t partition) {
  std::shared_lock table(table_mu_);
  Partition& p = must_find(partition);
  if (p.kind != PartitionKind::Temporary)
    fail(Errc::WrongPartitionKind, "drop_temporary on a permanent partition");
  std::unique_lock lock(p.mu);
  const auto discarded = p.live;
  p.alloc_counter = 0;
  p.state.clear();
  p.free_list.clear();
  p.data.clear();
  p.index.clear();
  for (auto& b : p.buckets) {
    b.data.clear();
    b.slots = 0;
    b.free_slots.clear();
    b.occupied = 0;
  }
  p.live = 0;
  p.deleted = 0;
  return discarded;
}

void MappingStore::release_partition(std::uint32_t partition) {
  std::unique_lock table(table_mu_);
  Partition& p = must_find(partition);
  if (p.kind != PartitionKind::Temporary)
    fail(Errc::WrongPartitionKind, "only temporary partitions are released");
  retire(parts_[partition].get());
  parts_[partition].reset();
  released_ids_.push_back(partition);
}

std::uint64_t MappingStore::flush_log() { return wal_.flush(); }

void MappingStore::prefetch_partition(std::uint32_t partition) {
  std::shared_lock table(table_mu_);
  const Partition& p = must_find(partition);
  if (!permanent(p)) return;
  std::shared_lock lock(p.mu);
  std::lock_guard cache(cache_mu_);
  for (const auto& id : partition_pages(p)) {
    if (cache_.contains(id)) continue;
    const auto t = cache_.touch(id, false);
    ++prefetched_;
    if (sealed_current_.count(id)) {
      auto sealed = device_.get(id);
      if (!sealed) fail(Errc::AuthFailure, "sealed page missing from untrusted storage");
      if (sealer_.open_block(id, *sealed) != page_bytes_locked(id))
        fail(Errc::AuthFailure, "sealed page content diverged");
    }
    if (t.evicted) evict_locked(*t.evicted);
  }
}

void MappingStore::evict_all() {
  std::shared_lock table(table_mu_);
  std::lock_guard cache(cache_mu_);
  const auto cap = cache_.capacity();
  for (const auto& e : cache_.set_capacity(0)) evict_locked(e);
  cache_.set_capacity(cap);
}

void MappingStore::set_cache_pages(std::size_t pages) {
  std::shared_lock table(table_mu_);
  std::lock_guard cache(cache_mu_);
  cfg_.cache_pages = std::max<std::size_t>(1, pages);
  for (const auto& e : cache_.set_capacity(cfg_.cache_pages)) evict_locked(e);
}

void MappingStore::set_cache_fraction(double fraction) {
  if (!(fraction > 0.0)) fail(Errc::InvalidArgument, "cache fraction must be positive");
  std::shared_lock table(table_mu_);
  std::lock_guard cache(cache_mu_);
  cfg_.cache_pages = 0;
  cfg_.cache_fraction = fraction;
  const auto want = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(std::ceil(fraction * static_cast<double>(perm_pages_))));
  for (const auto& e : cache_.set_capacity(want)) evict_locked(e);
}

std::size_t MappingStore::cache_capacity() const {
  std::lock_guard cache(cache_mu_);
  return cache_.capacity();
}

std::uint64_t MappingStore::permanent_pages() const {
  std::lock_guard cache(cache_mu_);
  return perm_pages_;
}

// ------------------------------------------------------------- inspection

std::vector<Fid> MappingStore::live_fids(std::uint32_t partition) const {
  std::shared_lock table(table_mu_);
  const Partition& p = must_find(partition);
  std::shared_lock lock(p.mu);
  std::vector<Fid> out;
  for (std::uint64_t off = 0; off < p.alloc_counter; ++off)
    if (p.state[off] == SlotState::Live) out.push_back(encode_fid(cfg_.fid, partition, off));
  return out;
}

std::vector<Fid> MappingStore::live_permanent_fids() const {
  std::vector<Fid> out;
  std::shared_lock table(table_mu_);
  for (const auto& p : parts_) {
    if (!p || !permanent(*p)) continue;
    std::shared_lock lock(p->mu);
    for (std::uint64_t off = 0; off < p->alloc_counter; ++off)
      if (p->state[off] == SlotState::Live) out.push_back(encode_fid(cfg_.fid, p->id, off));
  }
  return out;
}

std::vector<PartitionInfo> MappingStore::partitions() const {
  std::vector<PartitionInfo> out;
  std::shared_lock table(table_mu_);
  for (const auto& p : parts_) {
    if (!p) continue;
    std::shared_lock lock(p->mu);
    out.push_back(PartitionInfo{p->id, p->kind, p->layout, p->alloc_counter, p->live, p->deleted});
  }
  return out;
}

std::optional<PartitionInfo> MappingStore::partition_info(std::uint32_t partition) const {
  std::shared_lock table(table_mu_);
  const Partition* p = find(partition);
  if (!p) return std::nullopt;
  std::shared_lock lock(p->mu);
  return PartitionInfo{p->id, p->kind, p->layout, p->alloc_counter, p->live, p->deleted};
}

StoreSnapshot MappingStore::snapshot(bool permanent_only) const {
  StoreSnapshot out;
  std::shared_lock table(table_mu_);
  for (const auto& p : parts_) {
    if (!p || (permanent_only && !permanent(*p))) continue;
    std::shared_lock lock(p->mu);
    auto& s = out[p->id];
    s.kind = p->kind;
    s.layout = p->layout;
    s.alloc_counter = p->alloc_counter;
    for (std::uint64_t off = 0; off < p->alloc_counter; ++off) {
      if (p->state[off] != SlotState::Live) continue;
      Bytes v;
      read_slot(*p, off, v);
      s.live.emplace(off, std::move(v));
    }
  }
  return out;
}

StoreStats MappingStore::stats() const {
  StoreStats s;
  {
    std::shared_lock table(table_mu_);
    for (const auto& p : parts_) {
      if (!p) continue;
      std::shared_lock lock(p->mu);
      s.live_count += p->live;
      s.deleted_count += p->deleted;
      s.fresh_allocations += p->fresh;
      s.reused_slots += p->reused;
      if (p->layout.is_fixed()) {
        s.bytes_data += p->alloc_counter * p->layout.width;
      } else {
        for (std::size_t c = 0; c < p->buckets.size(); ++c)
          s.bytes_data += p->buckets[c].slots * classes_[c];
      }
    }
  }
  s.bytes_metadata = 8 * s.live_count;
  s.fresh_allocations += fresh_.load(std::memory_order_relaxed);
  s.reused_slots += reused_.load(std::memory_order_relaxed);
  s.puts = s.fresh_allocations + s.reused_slots;
  s.gets = gets_.load(std::memory_order_relaxed);
  s.deletes = deletes_.load(std::memory_order_relaxed);
  s.promotes = promotes_.load(std::memory_order_relaxed);
  std::lock_guard cache(cache_mu_);
  s.page_faults_simulated = faults_;
  s.cache_misses = faults_;
  s.cache_hits = hits_;
  s.seals = sealer_.seals();
  s.opens = sealer_.opens();
  s.evictions = evictions_;
  s.prefetched_pages = prefetched_;
  s.checkpoints = checkpoints_;
  return s;
}

void MappingStore::reset_cache_stats() {
  std::lock_guard cache(cache_mu_);
  faults_ = 0;
  hits_ = 0;
  evictions_ = 0;
  prefetched_ = 0;
}

std::uint64_t MappingStore::crypto_invocations() const {
  return sealer_.seals() + sealer_.opens();
}

std::uint64_t MappingStore::checkpoint_lsn() const {
  std::shared_lock table(table_mu_);
  return ckpt_lsn_;
}

// ------------------------------------------------------------ images

Bytes MappingStore::encode_image(const Partition& p) const {
  Bytes out(kSuperblockBytes, 0);
  std::copy(std::begin(kPartitionMagic), std::end(kPartitionMagic), out.begin());
  out[8] = static_cast<std::uint8_t>(cfg_.fid.prefix_bits());
  out[9] = static_cast<std::uint8_t>(p.kind);
  out[10] = static_cast<std::uint8_t>(p.layout.kind);
  store_le32(out.data() + 11, p.layout.width);
  store_le64(out.data() + 15, p.alloc_counter);
  if (p.layout.is_fixed()) {
    const auto n = p.alloc_counter * p.layout.width;
    out.resize(kSuperblockBytes + n);
    if (n) std::memcpy(out.data() + kSuperblockBytes, p.data.data(), n);
    return out;
  }
  ByteWriter w(out);
  Bytes v;
  for (std::uint64_t off = 0; off < p.alloc_counter; ++off) {
    if (p.state[off] != SlotState::Live) {
      w.u32(0);
      continue;
    }
    read_slot(p, off, v);
    w.blob(v);
  }
  return out;
}

Bytes MappingStore::encode_state(const Partition& p) const {
  Bytes out(ceil_div(p.alloc_counter, 4), 0);
  for (std::uint64_t off = 0; off < p.alloc_counter; ++off)
    out[off / 4] |= static_cast<std::uint8_t>(static_cast<unsigned>(p.state[off]) << ((off % 4) * 2));
  return out;
}

std::unique_ptr<MappingStore::Partition> MappingStore::decode_image(std::uint32_t id, ByteView image,
                                                                    ByteView state) {
  if (image.size() < kSuperblockBytes ||
      !std::equal(std::begin(kPartitionMagic), std::end(kPartitionMagic), image.begin()))
    fail(Errc::CorruptLog, "bad partition superblock for p" + std::to_string(id));
  if (image[8] != cfg_.fid.prefix_bits())
    fail(Errc::InvalidArgument, "store was created with prefix_bits " + std::to_string(image[8]));
  auto p = std::make_unique<Partition>();
  p->id = id;
  p->kind = static_cast<PartitionKind>(image[9]);
  p->layout.kind = static_cast<ValueLayout::Kind>(image[10]);
  p->layout.width = load_le32(image.data() + 11);
  const auto alloc = load_le64(image.data() + 15);
  if (state.size() != ceil_div(alloc, 4)) fail(Errc::CorruptLog, "state sidecar size mismatch");
  if (!p->layout.is_fixed()) p->buckets.resize(classes_.size());

  std::vector<SlotState> states(alloc);
  for (std::uint64_t off = 0; off < alloc; ++off) {
    const auto s = (state[off / 4] >> ((off % 4) * 2)) & 3;
    if (s > 2) fail(Errc::CorruptLog, "bad slot state");
    states[off] = static_cast<SlotState>(s);
  }

  ByteReader r(image.subspan(kSuperblockBytes), Errc::CorruptLog);
  if (p->layout.is_fixed()) {
    auto data = r.raw(alloc * p->layout.width);
    p->alloc_counter = alloc;
    p->state = states;
    p->data.assign(data.begin(), data.end());
    for (std::uint64_t off = 0; off < alloc; ++off) {
      if (states[off] == SlotState::Live) ++p->live;
      if (states[off] == SlotState::LogicallyDeleted) ++p->deleted;
    }
  } else {
    p->alloc_counter = 0;
    for (std::uint64_t off = 0; off < alloc; ++off) {
      const auto len = r.u32();
      auto v = r.raw(len);
      if (states[off] == SlotState::Live) {
        if (len == 0) fail(Errc::CorruptLog, "live slot without a value");
        write_slot(*p, off, v);
      }
    }
    p->alloc_counter = alloc;
    p->state.resize(alloc, SlotState::Unused);
    p->index.resize(alloc);
    for (std::uint64_t off = 0; off < alloc; ++off) {
      if (states[off] == SlotState::LogicallyDeleted) {
        p->state[off] = SlotState::LogicallyDeleted;
        ++p->deleted;
      }
    }
  }
  if (!r.done()) fail(Errc::CorruptLog, "trailing bytes in partition image");
  // Lowest deleted offset is reused first.
  for (std::uint64_t off = alloc; off-- > 0;)
    if (states[off] == SlotState::LogicallyDeleted) p->free_list.push_back(off);
  return p;
}

// ------------------------------------------------------ durability

void MappingStore::maybe_checkpoint() {
  if (wal_bytes() <= cfg_.wal_size_bound) return;
  checkpoint_truncate();
}

void MappingStore::checkpoint_truncate() {
  std::unique_lock table(table_mu_);
  checkpoint_locked();
}

void MappingStore::checkpoint_locked() {
  if (!wal_.is_open()) fail(Errc::LogClosed, kLogName);
  const std::uint64_t durable = wal_.flush();
  if (durable == ckpt_lsn_ || wal_.last_lsn() == quiet_lsn_) return;

  const std::string dir = image_dir(durable);
  std::map<std::uint32_t, std::pair<Bytes, Bytes>> images;
  for (const auto& p : parts_) {
    if (!p || !permanent(*p)) continue;
    auto& [img, st] = images[p->id];
    {
      std::lock_guard cache(cache_mu_);
      img = encode_image(*p);
      st = encode_state(*p);
    }
    const std::string base = dir + "p" + std::to_string(p->id);
    disk_.write(base + ".fid", img);
    disk_.sync(base + ".fid");
    disk_.write(base + ".state", st);
    disk_.sync(base + ".state");
  }
  disk_.write(dir + "fresh", sealer_.freshness().serialize());
  disk_.sync(dir + "fresh");

  Bytes marker(8);
  store_le64(marker.data(), durable);
  disk_.write(std::string(kMarker) + ".tmp", marker);
  disk_.sync(std::string(kMarker) + ".tmp");
  disk_.rename(std::string(kMarker) + ".tmp", kMarker);

  Bytes payload(8);
  store_le64(payload.data(), durable);
  wal_.rewrite({LogRecord{durable + 1, static_cast<std::uint8_t>(WalKind::Checkpoint), payload}});

  if (ckpt_lsn_ != 0)
    for (const auto& name : disk_.list(image_dir(ckpt_lsn_))) disk_.remove(name);
  ckpt_lsn_ = durable;

  // Continue from the image so live and recovered stores evolve identically.
  std::lock_guard cache(cache_mu_);
  for (auto& [id, files] : images) {
    retire(parts_[id].get());
    parts_[id] = decode_image(id, files.first, files.second);
  }
  cache_.clear();
  sealed_current_.clear();
  perm_pages_ = 0;
  for (const auto& p : parts_)
    if (p && permanent(*p)) perm_pages_ += pages_of(*p);
  grow_cache_locked();
  quiet_lsn_ = wal_.last_lsn();
  ++checkpoints_;
}

void MappingStore::apply(const LogRecord& rec) {
  ByteReader r(rec.payload, Errc::CorruptLog);
  switch (static_cast<WalKind>(rec.kind)) {
    case WalKind::Put: {
      const Fid fid{r.u64()};
      const auto v = r.raw(r.remaining());
      const auto parts = decode_fid(cfg_.fid, fid);
      Partition* p = find(static_cast<std::uint32_t>(parts.partition));
      if (!p) fail(Errc::CorruptLog, "put into unknown partition");
      write_slot(*p, parts.offset, v);
      break;
    }
    case WalKind::Delete: {
      const Fid fid{r.u64()};
      const auto parts = decode_fid(cfg_.fid, fid);
      Partition* p = find(static_cast<std::uint32_t>(parts.partition));
      if (!p || parts.offset >= p->alloc_counter || p->state[parts.offset] != SlotState::Live)
        fail(Errc::CorruptLog, "delete of a slot that is not live");
      clear_slot(*p, parts.offset);
      break;
    }
    case WalKind::CreatePartition: {
      const auto id = r.u32();
      auto p = std::make_unique<Partition>();
      p->id = id;
      p->kind = static_cast<PartitionKind>(r.u8());
      p->layout.kind = static_cast<ValueLayout::Kind>(r.u8());
      p->layout.width = r.u32();
      if (id >= cfg_.fid.partition_limit()) fail(Errc::CorruptLog, "partition id out of range");
      if (id >= parts_.size()) parts_.resize(static_cast<std::size_t>(id) + 1);
      if (parts_[id]) fail(Errc::CorruptLog, "partition created twice");
      if (!p->layout.is_fixed()) p->buckets.resize(classes_.size());
      parts_[id] = std::move(p);
      break;
    }
    case WalKind::Seal: {
      BlockId id;
      id.partition = r.u32();
      id.index = r.u64();
      sealer_.freshness().observe(id, r.u64());
      break;
    }
    case WalKind::Epoch:
      sealer_.freshness().set_floor(r.u64());
      break;
    case WalKind::Checkpoint:
      break;
    default:
      fail(Errc::CorruptLog, "unknown record kind " + std::to_string(rec.kind));
  }
}

void MappingStore::retire(const Partition* p) {
  if (!p) return;
  fresh_.fetch_add(p->fresh, std::memory_order_relaxed);
  reused_.fetch_add(p->reused, std::memory_order_relaxed);
}

void MappingStore::reset_volatile() {
  for (const auto& p : parts_) retire(p.get());
  parts_.clear();
  next_fresh_id_ = 0;
  released_ids_.clear();
  wal_.close();
  std::lock_guard cache(cache_mu_);
  cache_.clear();
  sealed_current_.clear();
  sealer_.freshness().clear();
  perm_pages_ = 0;
  ckpt_lsn_ = 0;
  quiet_lsn_ = ~0ULL;
}

void MappingStore::crash() {
  std::unique_lock table(table_mu_);
  reset_volatile();
}

std::uint64_t MappingStore::recover() {
  std::unique_lock table(table_mu_);
  reset_volatile();

  std::uint64_t marker_lsn = 0;
  bool have_marker = false;
  if (auto m = disk_.read(kMarker)) {
    if (m->size() != 8) fail(Errc::CorruptLog, "checkpoint marker has wrong size");
    marker_lsn = load_le64(m->data());
    have_marker = true;
  }
  const std::string dir = image_dir(marker_lsn);
  if (have_marker) {
    auto fresh = disk_.read(dir + "fresh");
    if (!fresh) fail(Errc::CorruptLog, "checkpoint image missing");
    sealer_.freshness() = FreshnessTable::parse(*fresh);
    for (const auto& name : disk_.list(dir + "p")) {
      if (name.size() < 4 || name.compare(name.size() - 4, 4, ".fid") != 0) continue;
      const auto id_text = name.substr(dir.size() + 1, name.size() - dir.size() - 5);
      const auto id = static_cast<std::uint32_t>(std::stoul(id_text));
      auto image = disk_.read(name);
      auto state = disk_.read(dir + "p" + id_text + ".state");
      if (!image || !state) fail(Errc::CorruptLog, "partition image incomplete");
      if (id >= parts_.size()) parts_.resize(static_cast<std::size_t>(id) + 1);
      parts_[id] = decode_image(id, *image, *state);
    }
  }
  ckpt_lsn_ = marker_lsn;

  const LogScan scan = wal_.open(marker_lsn);
  std::uint64_t replayed = 0;
  for (const auto& rec : scan.records) {
    if (rec.lsn <= marker_lsn || rec.kind == static_cast<std::uint8_t>(WalKind::Checkpoint)) continue;
    apply(rec);
    ++replayed;
  }

  for (const auto& name : disk_.list("img.")) {
    if (!have_marker || name.compare(0, dir.size(), dir) != 0) disk_.remove(name);
  }
  disk_.remove(std::string(kMarker) + ".tmp");

  for (const auto& p : parts_)
    if (p) next_fresh_id_ = std::max<std::uint64_t>(next_fresh_id_, p->id + 1ULL);

  auto& fresh = sealer_.freshness();
  if (!fresh.entries().empty() || fresh.floor() != 0) {
    std::uint64_t top = fresh.floor();
    for (const auto& [id, c] : fresh.entries()) top = std::max(top, c);
    const std::uint64_t floor = ((top >> 32) + 1) << 32;
    fresh.set_floor(floor);
    Bytes payload(8);
    store_le64(payload.data(), floor);
    wal_.append(static_cast<std::uint8_t>(WalKind::Epoch), payload);
    wal_.flush();
  }

  std::lock_guard cache(cache_mu_);
  for (const auto& p : parts_)
    if (p && permanent(*p)) perm_pages_ += pages_of(*p);
  cache_.set_capacity(cfg_.cache_pages != 0 ? cfg_.cache_pages : 1);
  grow_cache_locked();
  quiet_lsn_ = replayed == 0 ? wal_.last_lsn() : ~0ULL;
  return replayed;
}

}  // namespace fidstore
