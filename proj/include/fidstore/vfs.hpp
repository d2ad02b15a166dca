#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "fidstore/bytes.hpp"

namespace fidstore {

class AdversaryTrace;

// Thrown by simulation hooks to unwind a zone at a crash point. Not an
// Error: production code never catches it.
struct SimulatedCrash {
  std::string site;
};

// Minimal file abstraction used by the WAL, the partition images and the
// integrity-zone catalog. `write`/`append` are volatile until `sync`.
// `rename` and `remove` are atomic and durable.
class Vfs {
 public:
  virtual ~Vfs() = default;

  virtual std::optional<Bytes> read(const std::string& name) const = 0;
  virtual void write(const std::string& name, ByteView data) = 0;
  virtual void append(const std::string& name, ByteView data) = 0;
  virtual void sync(const std::string& name) = 0;
  virtual void rename(const std::string& from, const std::string& to) = 0;
  virtual void remove(const std::string& name) = 0;
  virtual std::vector<std::string> list(const std::string& prefix) const = 0;
  virtual bool exists(const std::string& name) const = 0;
  virtual std::uint64_t size(const std::string& name) const = 0;
};

// Budget of durable bytes shared by the disks of a simulation. When armed, the
// sync that would exceed it persists only the bytes that fit (a torn write)
// and throws SimulatedCrash.
struct ByteCrashBudget {
  bool armed = false;
  std::uint64_t remaining = 0;
};

// In-memory disk with a synced-only durability model: after crash() every
// file holds exactly the bytes covered by its last successful sync.
class SimVfs final : public Vfs {
 public:
  explicit SimVfs(std::string device = "disk") : device_(std::move(device)) {}

  std::optional<Bytes> read(const std::string& name) const override;
  void write(const std::string& name, ByteView data) override;
  void append(const std::string& name, ByteView data) override;
  void sync(const std::string& name) override;
  void rename(const std::string& from, const std::string& to) override;
  void remove(const std::string& name) override;
  std::vector<std::string> list(const std::string& prefix) const override;
  bool exists(const std::string& name) const override;
  std::uint64_t size(const std::string& name) const override;

  // Discard everything not yet synced.
  void crash();
  // Durable view of a file, as recovery would see it after a crash.
  std::optional<Bytes> durable(const std::string& name) const;
  // Test hook: keep only the first `n` durable bytes (torn tail).
  void truncate_durable(const std::string& name, std::uint64_t n);
  // Test hook: overwrite durable and current content.
  void corrupt_durable(const std::string& name, std::uint64_t offset, std::uint8_t xor_mask);
  // The next `n` syncs fail with IoFailure.
  void fail_next_syncs(int n);

  void set_trace(AdversaryTrace* trace) { trace_ = trace; }
  void set_crash_budget(std::shared_ptr<ByteCrashBudget> budget) { budget_ = std::move(budget); }

  std::uint64_t synced_bytes() const;
  // Concatenation of every durable and volatile file image, for leak scans.
  Bytes all_bytes() const;

 private:
  struct File {
    Bytes current;
    Bytes durable;
    bool durable_exists = false;
    std::size_t dirty_from = 0;  // lowest offset changed since the last sync
  };

  mutable std::mutex mu_;
  std::string device_;
  std::map<std::string, File> files_;
  AdversaryTrace* trace_ = nullptr;
  std::shared_ptr<ByteCrashBudget> budget_;
  int failing_syncs_ = 0;
  std::uint64_t synced_bytes_ = 0;
};

// Real directory-backed files, fsync on sync.
class PosixVfs final : public Vfs {
 public:
  explicit PosixVfs(std::filesystem::path root);

  std::optional<Bytes> read(const std::string& name) const override;
  void write(const std::string& name, ByteView data) override;
  void append(const std::string& name, ByteView data) override;
  void sync(const std::string& name) override;
  void rename(const std::string& from, const std::string& to) override;
  void remove(const std::string& name) override;
  std::vector<std::string> list(const std::string& prefix) const override;
  bool exists(const std::string& name) const override;
  std::uint64_t size(const std::string& name) const override;

  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::filesystem::path path_of(const std::string& name) const;

  std::filesystem::path root_;
};

}  // namespace fidstore
