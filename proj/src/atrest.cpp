#include "fidstore/atrest.hpp"

#include <algorithm>
#include <string>

#include "fidstore/trace.hpp"

namespace fidstore {

namespace {

std::array<std::uint8_t, 20> block_aad(BlockId id, std::uint64_t counter) {
  std::array<std::uint8_t, 20> aad{};
  store_le32(aad.data(), id.partition);
  store_le64(aad.data() + 4, id.index);
  store_le64(aad.data() + 12, counter);
  return aad;
}

std::string device_name(std::uint32_t partition) { return "atrest:p" + std::to_string(partition); }

}  // namespace

Bytes SealedBlock::serialize() const {
  Bytes out;
  out.reserve(kWireSize);
  ByteWriter w(out);
  w.u64(counter);
  w.raw(nonce);
  w.raw(tag);
  w.raw(ciphertext);
  return out;
}

SealedBlock SealedBlock::parse(ByteView wire) {
  if (wire.size() != kWireSize) fail(Errc::AuthFailure, "sealed block has wrong size");
  ByteReader r(wire, Errc::AuthFailure);
  SealedBlock b;
  b.counter = r.u64();
  auto n = r.raw(kNonceBytes);
  std::copy(n.begin(), n.end(), b.nonce.begin());
  auto t = r.raw(kTagBytes);
  std::copy(t.begin(), t.end(), b.tag.begin());
  auto c = r.raw(kBlockSize);
  b.ciphertext.assign(c.begin(), c.end());
  return b;
}

// ---------------------------------------------------------- FreshnessTable

std::optional<std::uint64_t> FreshnessTable::get(BlockId id) const {
  auto it = counters_.find(id);
  if (it == counters_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t FreshnessTable::bump(BlockId id) {
  auto& c = counters_[id];
  c = std::max(c + 1, floor_);
  return c;
}

void FreshnessTable::observe(BlockId id, std::uint64_t counter) {
  auto& c = counters_[id];
  c = std::max(c, counter);
}

Bytes FreshnessTable::serialize() const {
  Bytes out;
  ByteWriter w(out);
  w.u64(floor_);
  for (const auto& [id, counter] : counters_) {
    w.u32(id.partition);
    w.u64(id.index);
    w.u64(counter);
  }
  return out;
}

FreshnessTable FreshnessTable::parse(ByteView b) {
  FreshnessTable t;
  ByteReader r(b, Errc::CorruptLog);
  t.floor_ = r.u64();
  while (!r.done()) {
    BlockId id;
    id.partition = r.u32();
    id.index = r.u64();
    t.counters_[id] = r.u64();
  }
  return t;
}

// ------------------------------------------------------------- BlockSealer

SealedBlock BlockSealer::seal_block(BlockId id, ByteView plaintext) {
  if (plaintext.size() != kBlockSize) fail(Errc::InvalidArgument, "seal_block needs one block");
  SealedBlock out;
  random_bytes(out.nonce);
  out.ciphertext.resize(kBlockSize);
  std::lock_guard lock(mu_);
  out.counter = table_.bump(id);
  const auto aad = block_aad(id, out.counter);
  aead_.seal(out.nonce, aad, plaintext, out.ciphertext, out.tag);
  ++seals_;
  return out;
}

Bytes BlockSealer::open_block(BlockId id, const SealedBlock& sealed) {
  if (sealed.ciphertext.size() != kBlockSize) fail(Errc::AuthFailure, "truncated block");
  Bytes plain(kBlockSize);
  std::lock_guard lock(mu_);
  ++opens_;
  const auto aad = block_aad(id, sealed.counter);
  if (!aead_.open(sealed.nonce, aad, sealed.ciphertext, sealed.tag, plain))
    fail(Errc::AuthFailure, "block tag mismatch");
  const auto expected = table_.get(id);
  if (!expected || sealed.counter < *expected) fail(Errc::StaleBlock, "block counter is behind");
  if (sealed.counter > *expected) fail(Errc::AuthFailure, "block counter from the future");
  return plain;
}

// --------------------------------------------------- UntrustedBlockDevice

void UntrustedBlockDevice::put(BlockId id, const SealedBlock& block) {
  std::lock_guard lock(mu_);
  blocks_[id] = block.serialize();
  if (trace_) trace_->block_write(device_name(id.partition), id.index);
}

std::optional<SealedBlock> UntrustedBlockDevice::get(BlockId id) const {
  std::lock_guard lock(mu_);
  auto it = blocks_.find(id);
  if (it == blocks_.end()) return std::nullopt;
  if (trace_) trace_->block_read(device_name(id.partition), id.index);
  return SealedBlock::parse(it->second);
}

bool UntrustedBlockDevice::contains(BlockId id) const {
  std::lock_guard lock(mu_);
  return blocks_.count(id) != 0;
}

void UntrustedBlockDevice::erase_partition(std::uint32_t partition) {
  std::lock_guard lock(mu_);
  auto lo = blocks_.lower_bound(BlockId{partition, 0});
  auto hi = blocks_.lower_bound(BlockId{partition + 1, 0});
  if (partition == UINT32_MAX) hi = blocks_.end();
  blocks_.erase(lo, hi);
}

void UntrustedBlockDevice::clear() {
  std::lock_guard lock(mu_);
  blocks_.clear();
}

std::size_t UntrustedBlockDevice::size() const {
  std::lock_guard lock(mu_);
  return blocks_.size();
}

Bytes UntrustedBlockDevice::partition_image(std::uint32_t partition) const {
  std::lock_guard lock(mu_);
  Bytes out;
  for (const auto& [id, wire] : blocks_)
    if (id.partition == partition) out.insert(out.end(), wire.begin(), wire.end());
  return out;
}

Bytes* UntrustedBlockDevice::raw(BlockId id) {
  std::lock_guard lock(mu_);
  auto it = blocks_.find(id);
  return it == blocks_.end() ? nullptr : &it->second;
}

void UntrustedBlockDevice::overwrite(BlockId id, Bytes wire) {
  std::lock_guard lock(mu_);
  blocks_[id] = std::move(wire);
}

Bytes UntrustedBlockDevice::all_bytes() const {
  std::lock_guard lock(mu_);
  Bytes out;
  for (const auto& [id, wire] : blocks_) out.insert(out.end(), wire.begin(), wire.end());
  return out;
}

// --------------------------------------------------------------- PageCache

PageCache::Touch PageCache::touch(BlockId id, bool dirty) {
  Touch result;
  auto it = index_.find(id);
  if (it != index_.end()) {
    it->second->dirty = it->second->dirty || dirty;
    lru_.splice(lru_.begin(), lru_, it->second);
    result.hit = true;
    return result;
  }
  if (capacity_ == 0) return result;
  if (index_.size() >= capacity_) {
    const Entry victim = lru_.back();
    index_.erase(victim.id);
    lru_.pop_back();
    result.evicted = Evicted{victim.id, victim.dirty};
  }
  lru_.push_front(Entry{id, dirty});
  index_.emplace(id, lru_.begin());
  return result;
}

void PageCache::mark_clean(BlockId id) {
  auto it = index_.find(id);
  if (it != index_.end()) it->second->dirty = false;
}

void PageCache::erase_partition(std::uint32_t partition) {
  for (auto it = lru_.begin(); it != lru_.end();) {
    if (it->id.partition == partition) {
      index_.erase(it->id);
      it = lru_.erase(it);
    } else {
      ++it;
    }
  }
}

void PageCache::clear() {
  lru_.clear();
  index_.clear();
}

std::vector<PageCache::Evicted> PageCache::set_capacity(std::size_t pages) {
  capacity_ = pages;
  std::vector<Evicted> out;
  while (index_.size() > capacity_) {
    const Entry victim = lru_.back();
    index_.erase(victim.id);
    lru_.pop_back();
    out.push_back(Evicted{victim.id, victim.dirty});
  }
  return out;
}

}  // namespace fidstore
