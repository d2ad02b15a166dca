#include "fidstore/vfs.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <iterator>

#include "fidstore/trace.hpp"

namespace fidstore {

namespace {
constexpr std::uint64_t kIoBlock = 4096;
}

// ---------------------------------------------------------------- SimVfs

std::optional<Bytes> SimVfs::read(const std::string& name) const {
  std::lock_guard lock(mu_);
  auto it = files_.find(name);
  if (it == files_.end()) return std::nullopt;
  if (trace_) {
    const auto n = (it->second.current.size() + kIoBlock - 1) / kIoBlock;
    for (std::uint64_t b = 0; b < n; ++b) trace_->block_read(device_ + ":" + name, b);
  }
  return it->second.current;
}

void SimVfs::write(const std::string& name, ByteView data) {
  std::lock_guard lock(mu_);
  auto& f = files_[name];
  f.current.assign(data.begin(), data.end());
  f.dirty_from = 0;
}

void SimVfs::append(const std::string& name, ByteView data) {
  std::lock_guard lock(mu_);
  auto& f = files_[name];
  f.dirty_from = std::min(f.dirty_from, f.current.size());
  f.current.insert(f.current.end(), data.begin(), data.end());
}

void SimVfs::sync(const std::string& name) {
  std::lock_guard lock(mu_);
  auto it = files_.find(name);
  if (it == files_.end()) fail(Errc::IoFailure, "sync of missing file " + name);
  if (failing_syncs_ > 0) {
    --failing_syncs_;
    fail(Errc::IoFailure, "injected sync failure on " + name);
  }
  auto& f = it->second;
  const std::size_t from = std::min(f.dirty_from, f.current.size());
  const std::uint64_t fresh = f.current.size() - from;

  if (budget_ && budget_->armed && fresh > budget_->remaining) {
    // Torn write: only a prefix of the new bytes reaches the medium.
    const auto keep = static_cast<std::size_t>(budget_->remaining);
    f.durable.assign(f.current.begin(), f.current.begin() + static_cast<std::ptrdiff_t>(from));
    f.durable.insert(f.durable.end(), f.current.begin() + static_cast<std::ptrdiff_t>(from),
                     f.current.begin() + static_cast<std::ptrdiff_t>(from + keep));
    f.durable_exists = true;
    budget_->armed = false;
    budget_->remaining = 0;
    throw SimulatedCrash{"torn write on " + device_ + ":" + name};
  }
  if (budget_ && budget_->armed) budget_->remaining -= fresh;

  f.durable.resize(from);
  f.durable.insert(f.durable.end(), f.current.begin() + static_cast<std::ptrdiff_t>(from),
                   f.current.end());
  f.durable_exists = true;
  f.dirty_from = f.current.size();
  synced_bytes_ += fresh;

  if (trace_ && fresh > 0) {
    const std::uint64_t first = from / kIoBlock;
    const std::uint64_t last = (f.current.size() - 1) / kIoBlock;
    for (auto b = first; b <= last; ++b) trace_->block_write(device_ + ":" + name, b);
  }
}

void SimVfs::rename(const std::string& from, const std::string& to) {
  std::lock_guard lock(mu_);
  auto it = files_.find(from);
  if (it == files_.end()) fail(Errc::IoFailure, "rename of missing file " + from);
  File moved = std::move(it->second);
  files_.erase(it);
  files_[to] = std::move(moved);
}

void SimVfs::remove(const std::string& name) {
  std::lock_guard lock(mu_);
  files_.erase(name);
}

std::vector<std::string> SimVfs::list(const std::string& prefix) const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (auto it = files_.lower_bound(prefix); it != files_.end(); ++it) {
    if (it->first.compare(0, prefix.size(), prefix) != 0) break;
    out.push_back(it->first);
  }
  return out;
}

bool SimVfs::exists(const std::string& name) const {
  std::lock_guard lock(mu_);
  return files_.count(name) != 0;
}

std::uint64_t SimVfs::size(const std::string& name) const {
  std::lock_guard lock(mu_);
  auto it = files_.find(name);
  return it == files_.end() ? 0 : it->second.current.size();
}

void SimVfs::crash() {
  std::lock_guard lock(mu_);
  for (auto it = files_.begin(); it != files_.end();) {
    if (!it->second.durable_exists) {
      it = files_.erase(it);
      continue;
    }
    it->second.current = it->second.durable;
    it->second.dirty_from = it->second.current.size();
    ++it;
  }
  failing_syncs_ = 0;
}

std::optional<Bytes> SimVfs::durable(const std::string& name) const {
  std::lock_guard lock(mu_);
  auto it = files_.find(name);
  if (it == files_.end() || !it->second.durable_exists) return std::nullopt;
  return it->second.durable;
}

void SimVfs::truncate_durable(const std::string& name, std::uint64_t n) {
  std::lock_guard lock(mu_);
  auto it = files_.find(name);
  if (it == files_.end()) return;
  auto& f = it->second;
  if (n < f.durable.size()) f.durable.resize(n);
  if (n < f.current.size()) f.current.resize(n);
  f.dirty_from = std::min<std::size_t>(f.dirty_from, f.current.size());
}

void SimVfs::corrupt_durable(const std::string& name, std::uint64_t offset, std::uint8_t mask) {
  std::lock_guard lock(mu_);
  auto it = files_.find(name);
  if (it == files_.end()) return;
  if (offset < it->second.durable.size()) it->second.durable[offset] ^= mask;
  if (offset < it->second.current.size()) it->second.current[offset] ^= mask;
}

void SimVfs::fail_next_syncs(int n) {
  std::lock_guard lock(mu_);
  failing_syncs_ = n;
}

std::uint64_t SimVfs::synced_bytes() const {
  std::lock_guard lock(mu_);
  return synced_bytes_;
}

Bytes SimVfs::all_bytes() const {
  std::lock_guard lock(mu_);
  Bytes out;
  for (const auto& [name, f] : files_) {
    out.insert(out.end(), f.current.begin(), f.current.end());
    out.insert(out.end(), f.durable.begin(), f.durable.end());
  }
  return out;
}

// -------------------------------------------------------------- PosixVfs

PosixVfs::PosixVfs(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
}

std::filesystem::path PosixVfs::path_of(const std::string& name) const { return root_ / name; }

std::optional<Bytes> PosixVfs::read(const std::string& name) const {
  std::ifstream in(path_of(name), std::ios::binary);
  if (!in) return std::nullopt;
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void PosixVfs::write(const std::string& name, ByteView data) {
  const auto p = path_of(name);
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) fail(Errc::IoFailure, "write " + p.string());
}

void PosixVfs::append(const std::string& name, ByteView data) {
  const auto p = path_of(name);
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::app);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) fail(Errc::IoFailure, "append " + p.string());
}

void PosixVfs::sync(const std::string& name) {
  const auto p = path_of(name);
  const int fd = ::open(p.c_str(), O_RDONLY);
  if (fd < 0) fail(Errc::IoFailure, "open for sync " + p.string());
  const int rc = ::fsync(fd);
  ::close(fd);
  if (rc != 0) fail(Errc::IoFailure, "fsync " + p.string());
}

void PosixVfs::rename(const std::string& from, const std::string& to) {
  std::error_code ec;
  const auto dst = path_of(to);
  std::filesystem::create_directories(dst.parent_path());
  std::filesystem::rename(path_of(from), dst, ec);
  if (ec) fail(Errc::IoFailure, "rename " + from + " -> " + to + ": " + ec.message());
  const int dfd = ::open(dst.parent_path().c_str(), O_RDONLY | O_DIRECTORY);
  if (dfd >= 0) {
    ::fsync(dfd);
    ::close(dfd);
  }
}

void PosixVfs::remove(const std::string& name) {
  std::error_code ec;
  std::filesystem::remove(path_of(name), ec);
}

std::vector<std::string> PosixVfs::list(const std::string& prefix) const {
  std::vector<std::string> out;
  std::error_code ec;
  for (auto it = std::filesystem::recursive_directory_iterator(root_, ec);
       !ec && it != std::filesystem::recursive_directory_iterator(); it.increment(ec)) {
    if (!it->is_regular_file()) continue;
    auto rel = std::filesystem::relative(it->path(), root_).generic_string();
    if (rel.compare(0, prefix.size(), prefix) == 0) out.push_back(std::move(rel));
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool PosixVfs::exists(const std::string& name) const {
  return std::filesystem::exists(path_of(name));
}

std::uint64_t PosixVfs::size(const std::string& name) const {
  std::error_code ec;
  const auto n = std::filesystem::file_size(path_of(name), ec);
  return ec ? 0 : n;
}

}  // namespace fidstore
