#pragma once

// Naive reference model of the mapping store: an associative map per
// partition plus the allocation rules (LIFO reuse of deleted offsets, fresh
// offsets from a counter, temporaries wiped by a drop). Shares no code with
// the library; identifiers are plain integers built by shift-or.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace oracle {

struct ModelResult {
  std::string error;  // empty on success
  std::uint64_t fid = 0;
  std::uint64_t count = 0;
};

class ModelStore {
 public:
  explicit ModelStore(unsigned prefix_bits = 16, std::size_t max_value_len = 4096)
      : offset_bits_(64 - prefix_bits), max_len_(max_value_len) {}

  std::uint32_t create(bool permanent, std::uint32_t width) {
    const auto id = next_id_++;
    Part p;
    p.permanent = permanent;
    p.width = width;
    parts_[id] = p;
    return id;
  }

  std::uint64_t fid_of(std::uint64_t partition, std::uint64_t offset) const {
    return (partition << offset_bits_) | offset;
  }
  std::uint64_t partition_of(std::uint64_t fid) const { return fid >> offset_bits_; }
  std::uint64_t offset_of(std::uint64_t fid) const { return fid & ((1ULL << offset_bits_) - 1); }

  ModelResult put(std::uint32_t partition, const std::string& v) {
    auto it = parts_.find(partition);
    if (it == parts_.end()) return {"UnknownPartition"};
    Part& p = it->second;
    if (v.empty()) return {"InvalidArgument"};
    if (v.size() > max_len_) return {"ValueTooLarge"};
    if (p.width != 0 && v.size() != p.width) return {"WidthMismatch"};
    std::uint64_t off;
    if (!p.free.empty()) {
      off = p.free.back();
      p.free.pop_back();
      ++reused_;
    } else {
      off = p.alloc++;
      ++fresh_;
    }
    p.values[off] = v;
    p.deleted.erase(off);
    return {"", fid_of(partition, off)};
  }

  std::optional<std::string> get(std::uint64_t fid) const {
    auto it = parts_.find(static_cast<std::uint32_t>(partition_of(fid)));
    if (it == parts_.end()) return std::nullopt;
    auto v = it->second.values.find(offset_of(fid));
    if (v == it->second.values.end()) return std::nullopt;
    return v->second;
  }

  ModelResult remove(std::uint64_t fid) {
    auto it = parts_.find(static_cast<std::uint32_t>(partition_of(fid)));
    if (it == parts_.end()) return {"NotLive"};
    Part& p = it->second;
    const auto off = offset_of(fid);
    if (!p.values.erase(off)) return {"NotLive"};
    p.deleted.insert({off, true});
    p.free.push_back(off);
    return {};
  }

  ModelResult promote(std::uint64_t temp_fid, std::uint32_t perm) {
    auto src = parts_.find(static_cast<std::uint32_t>(partition_of(temp_fid)));
    if (src == parts_.end()) return {"NotLive"};
    if (src->second.permanent) return {"WrongPartitionKind"};
    auto dst = parts_.find(perm);
    if (dst == parts_.end()) return {"UnknownPartition"};
    if (!dst->second.permanent) return {"WrongPartitionKind"};
    auto v = get(temp_fid);
    if (!v) return {"NotLive"};
    return put(perm, *v);
  }

  ModelResult drop(std::uint32_t partition) {
    auto it = parts_.find(partition);
    if (it == parts_.end()) return {"UnknownPartition"};
    Part& p = it->second;
    if (p.permanent) return {"WrongPartitionKind"};
    ModelResult r;
    r.count = p.values.size();
    p = Part{false, p.width};
    return r;
  }

  std::uint64_t live() const {
    std::uint64_t n = 0;
    for (const auto& [id, p] : parts_) n += p.values.size();
    return n;
  }
  std::uint64_t alloc_counter(std::uint32_t partition) const { return parts_.at(partition).alloc; }
  std::uint64_t fresh() const { return fresh_; }
  std::uint64_t reused() const { return reused_; }
  std::vector<std::uint64_t> live_fids(std::uint32_t partition) const {
    std::vector<std::uint64_t> out;
    for (const auto& [off, v] : parts_.at(partition).values) out.push_back(fid_of(partition, off));
    return out;
  }

 private:
  struct Part {
    bool permanent = false;
    std::uint32_t width = 0;  // 0 = any length
    std::uint64_t alloc = 0;
    std::map<std::uint64_t, std::string> values;
    std::map<std::uint64_t, bool> deleted;
    std::vector<std::uint64_t> free;
  };

  unsigned offset_bits_;
  std::size_t max_len_;
  std::uint32_t next_id_ = 0;
  std::map<std::uint32_t, Part> parts_;
  std::uint64_t fresh_ = 0;
  std::uint64_t reused_ = 0;
};

}  // namespace oracle
