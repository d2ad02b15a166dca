#include "fidstore/wal.hpp"

namespace fidstore {

Bytes frame_record(std::uint64_t lsn, std::uint8_t kind, ByteView payload) {
  Bytes out(kFrameHeader);
  out.reserve(kFrameHeader + kBodyHeader + payload.size());
  ByteWriter w(out);
  w.u64(lsn);
  w.u8(kind);
  w.raw(payload);
  const ByteView body(out.data() + kFrameHeader, out.size() - kFrameHeader);
  store_le32(out.data(), static_cast<std::uint32_t>(body.size()));
  store_le32(out.data() + 4, crc32(body));
  return out;
}

namespace {

struct Frame {
  bool fits = false;
  bool valid = false;
  std::uint64_t end = 0;
};

Frame probe(ByteView file, std::uint64_t pos) {
  Frame f;
  if (file.size() - pos < kFrameHeader) return f;
  const auto len = load_le32(file.data() + pos);
  const auto crc = load_le32(file.data() + pos + 4);
  if (len < kBodyHeader || len > file.size() - pos - kFrameHeader) return f;
  f.fits = true;
  f.end = pos + kFrameHeader + len;
  f.valid = crc32(file.subspan(pos + kFrameHeader, len)) == crc;
  return f;
}

}  // namespace

LogScan scan_log(ByteView file) {
  LogScan scan;
  std::uint64_t pos = 0;
  std::uint64_t last_lsn = 0;
  while (pos < file.size()) {
    const Frame f = probe(file, pos);
    if (!f.valid) {
      if (f.fits && f.end < file.size() && probe(file, f.end).valid)
        fail(Errc::CorruptLog, "checksum mismatch at offset " + std::to_string(pos));
      scan.torn_tail = true;
      break;
    }
    ByteReader r(file.subspan(pos + kFrameHeader, f.end - pos - kFrameHeader), Errc::CorruptLog);
    LogRecord rec;
    rec.lsn = r.u64();
    rec.kind = r.u8();
    auto rest = r.raw(r.remaining());
    rec.payload.assign(rest.begin(), rest.end());
    if (rec.lsn <= last_lsn) fail(Errc::CorruptLog, "lsn regression at offset " + std::to_string(pos));
    last_lsn = rec.lsn;
    scan.records.push_back(std::move(rec));
    pos = f.end;
  }
  scan.valid_bytes = pos;
  return scan;
}

LogScan FramedLog::open(std::uint64_t min_lsn) {
  std::lock_guard lock(mu_);
  const auto file = vfs_.read(name_);
  LogScan scan = file ? scan_log(*file) : LogScan{};
  if (file && scan.torn_tail) {
    const std::string tmp = name_ + ".tmp";
    vfs_.write(tmp, ByteView(*file).first(scan.valid_bytes));
    vfs_.sync(tmp);
    vfs_.rename(tmp, name_);
  }
  const std::uint64_t last = scan.records.empty() ? 0 : scan.records.back().lsn;
  durable_lsn_ = std::max(last, min_lsn);
  pending_lsn_ = durable_lsn_;
  next_lsn_ = durable_lsn_ + 1;
  file_bytes_ = scan.valid_bytes;
  buffer_.clear();
  unsynced_ = false;
  open_ = true;
  return scan;
}

void FramedLog::close() {
  std::lock_guard lock(mu_);
  open_ = false;
  buffer_.clear();
}

bool FramedLog::is_open() const {
  std::lock_guard lock(mu_);
  return open_;
}

std::uint64_t FramedLog::append(std::uint8_t kind, ByteView payload) {
  std::lock_guard lock(mu_);
  if (!open_) fail(Errc::LogClosed, name_);
  const std::uint64_t lsn = next_lsn_++;
  const Bytes frame = frame_record(lsn, kind, payload);
  buffer_.insert(buffer_.end(), frame.begin(), frame.end());
  pending_lsn_ = lsn;
  return lsn;
}

std::uint64_t FramedLog::flush() {
  std::lock_guard lock(mu_);
  if (!open_) fail(Errc::LogClosed, name_);
  if (buffer_.empty() && !unsynced_) return durable_lsn_;
  if (!buffer_.empty()) {
    vfs_.append(name_, buffer_);
    file_bytes_ += buffer_.size();
    buffer_.clear();
    unsynced_ = true;
  }
  vfs_.sync(name_);
  unsynced_ = false;
  durable_lsn_ = pending_lsn_;
  ++flushes_;
  return durable_lsn_;
}

void FramedLog::rewrite(const std::vector<LogRecord>& records) {
  std::lock_guard lock(mu_);
  Bytes image;
  for (const auto& r : records) {
    const Bytes f = frame_record(r.lsn, r.kind, r.payload);
    image.insert(image.end(), f.begin(), f.end());
  }
  const std::string tmp = name_ + ".tmp";
  vfs_.write(tmp, image);
  vfs_.sync(tmp);
  vfs_.rename(tmp, name_);
  file_bytes_ = image.size();
  unsynced_ = false;
  if (!records.empty()) {
    durable_lsn_ = std::max(durable_lsn_, records.back().lsn);
    pending_lsn_ = std::max(pending_lsn_, records.back().lsn);
    next_lsn_ = std::max(next_lsn_, records.back().lsn + 1);
  }
}

std::uint64_t FramedLog::next_lsn() const {
  std::lock_guard lock(mu_);
  return next_lsn_;
}

std::uint64_t FramedLog::durable_lsn() const {
  std::lock_guard lock(mu_);
  return durable_lsn_;
}

std::uint64_t FramedLog::last_lsn() const {
  std::lock_guard lock(mu_);
  return next_lsn_ - 1;
}

std::uint64_t FramedLog::buffered_bytes() const {
  std::lock_guard lock(mu_);
  return buffer_.size();
}

std::uint64_t FramedLog::file_bytes() const {
  std::lock_guard lock(mu_);
  return file_bytes_;
}

std::uint64_t FramedLog::flushes() const {
  std::lock_guard lock(mu_);
  return flushes_;
}

}  // namespace fidstore
