#pragma once

#include <cstdint>
#include <functional>
#include <mutex>

#include "fidstore/bytes.hpp"

namespace fidstore {

class AdversaryTrace;

struct LatencyModel {
  double fixed_ns = 2000.0;
  double per_byte_ns = 0.5;
};

struct ChannelCounters {
  std::uint64_t round_trips = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  double simulated_ns = 0;
};

// The only path between the integrity zone and the privacy zone. Every
// request and response is a byte string whose length the adversary sees.
class Channel {
 public:
  using Handler = std::function<Bytes(ByteView)>;
  using Tap = std::function<void(ByteView)>;

  explicit Channel(AdversaryTrace* trace = nullptr, LatencyModel latency = {})
      : trace_(trace), latency_(latency) {}

  void connect(Handler handler);
  // Requests to a disconnected peer fail at once with PrivacyZoneUnavailable.
  void disconnect();
  bool connected() const;

  Bytes call(ByteView request);

  // Observer of every byte that crosses, in both directions.
  void set_tap(Tap tap);
  ChannelCounters counters() const;
  void reset_counters();

 private:
  mutable std::mutex mu_;
  AdversaryTrace* trace_;
  LatencyModel latency_;
  Handler handler_;
  Tap tap_;
  ChannelCounters counters_;
};

}  // namespace fidstore
