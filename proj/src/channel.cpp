#include "fidstore/channel.hpp"

#include "fidstore/trace.hpp"

namespace fidstore {

void Channel::connect(Handler handler) {
  std::lock_guard lock(mu_);
  handler_ = std::move(handler);
}

void Channel::disconnect() {
  std::lock_guard lock(mu_);
  handler_ = nullptr;
}

bool Channel::connected() const {
  std::lock_guard lock(mu_);
  return static_cast<bool>(handler_);
}

Bytes Channel::call(ByteView request) {
  Handler handler;
  Tap tap;
  {
    std::lock_guard lock(mu_);
    if (!handler_) fail(Errc::PrivacyZoneUnavailable, "request timed out");
    handler = handler_;
    tap = tap_;
    ++counters_.round_trips;
    counters_.bytes_sent += request.size();
    counters_.simulated_ns += latency_.fixed_ns + latency_.per_byte_ns * static_cast<double>(request.size());
  }
  if (trace_) trace_->msg_bytes(request.size());
  if (tap) tap(request);
  Bytes response = handler(request);
  if (trace_) trace_->msg_bytes(response.size());
  if (tap) tap(response);
  std::lock_guard lock(mu_);
  counters_.bytes_received += response.size();
  counters_.simulated_ns += latency_.per_byte_ns * static_cast<double>(response.size());
  return response;
}

void Channel::set_tap(Tap tap) {
  std::lock_guard lock(mu_);
  tap_ = std::move(tap);
}

ChannelCounters Channel::counters() const {
  std::lock_guard lock(mu_);
  return counters_;
}

void Channel::reset_counters() {
  std::lock_guard lock(mu_);
  counters_ = {};
}

}  // namespace fidstore
