#include "fidstore/trace.hpp"

#include <cstdio>

#include "fidstore/bytes.hpp"
#include "json.hpp"

namespace fidstore {

std::string to_string(Fid fid) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(fid.raw));
  return buf;
}

std::string_view event_kind_name(EventKind k) noexcept {
  switch (k) {
    case EventKind::FidObserved: return "FidObserved";
    case EventKind::BlockRead: return "BlockRead";
    case EventKind::BlockWrite: return "BlockWrite";
    case EventKind::MsgBytes: return "MsgBytes";
    case EventKind::ResultSize: return "ResultSize";
    case EventKind::CmpBool: return "CmpBool";
    case EventKind::OpKindObserved: return "OpKindObserved";
  }
  return "Unknown";
}

void AdversaryTrace::push(EventKind kind, std::uint64_t value, std::string_view device) {
  std::lock_guard lock(mu_);
  if (!enabled_) return;
  events_.push_back(TraceEvent{events_.size(), kind, value, std::string(device)});
}

std::vector<TraceEvent> AdversaryTrace::events() const {
  std::lock_guard lock(mu_);
  return events_;
}

std::size_t AdversaryTrace::size() const {
  std::lock_guard lock(mu_);
  return events_.size();
}

void AdversaryTrace::clear() {
  std::lock_guard lock(mu_);
  events_.clear();
}

void AdversaryTrace::set_enabled(bool on) {
  std::lock_guard lock(mu_);
  enabled_ = on;
}

std::string AdversaryTrace::to_jsonl() const {
  std::lock_guard lock(mu_);
  std::string out;
  for (const auto& e : events_) {
    nlohmann::ordered_json j;
    j["t"] = e.t;
    j["kind"] = event_kind_name(e.kind);
    switch (e.kind) {
      case EventKind::FidObserved: j["fid"] = e.value; break;
      case EventKind::BlockRead:
      case EventKind::BlockWrite:
        j["device"] = e.device;
        j["block"] = e.value;
        break;
      case EventKind::MsgBytes: j["len"] = e.value; break;
      case EventKind::ResultSize: j["n"] = e.value; break;
      case EventKind::CmpBool: j["b"] = e.value != 0; break;
      case EventKind::OpKindObserved: j["op"] = e.value; break;
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::uint64_t AdversaryTrace::digest() const {
  const auto s = to_jsonl();
  return fnv1a64(ByteView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

}  // namespace fidstore
