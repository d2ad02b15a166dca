#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fidstore/channel.hpp"
#include "fidstore/client.hpp"
#include "fidstore/messages.hpp"

namespace fidstore {

class AdversaryTrace;

// Integrity-zone stub for the privacy zone. Every call is one or more
// messages over the channel; FIDs, operator kinds and comparison outcomes
// that cross are recorded in the adversary trace.
class ProxyClient {
 public:
  explicit ProxyClient(Channel& channel, AdversaryTrace* trace = nullptr, std::size_t batch_size = 256)
      : channel_(channel), trace_(trace), batch_size_(batch_size == 0 ? 1 : batch_size) {}

  std::vector<Fid> ingest(std::uint64_t query_id, const std::vector<ClientEnvelope>& envs,
                          std::optional<std::uint32_t> target = std::nullopt);
  Fid ingest(std::uint64_t query_id, const ClientEnvelope& env,
             std::optional<std::uint32_t> target = std::nullopt);
  std::vector<ClientEnvelope> reveal(std::uint64_t query_id, const std::vector<Fid>& fids);
  ClientEnvelope reveal(std::uint64_t query_id, Fid fid);

  // Splits into ceil(n / batch_size) messages; a chained request at the start
  // of a message is bound to the last result of the previous message.
  std::vector<OpOutcome> exec_batch(std::uint64_t query_id, std::vector<OperatorRequest> reqs);
  // Single operator; raises the operator's error.
  OperatorResponse exec(std::uint64_t query_id, const OperatorRequest& req);

  std::vector<Fid> promote(std::uint64_t query_id, const std::vector<Fid>& temp_fids,
                           std::uint32_t perm_partition);
  std::uint64_t delete_batch(const std::vector<Fid>& fids);
  std::uint64_t flush_log(std::uint64_t query_id);
  std::uint32_t create_partition(PartitionKind kind, ValueLayout layout);
  void end_query(std::uint64_t query_id);
  void prefetch(std::uint32_t partition);
  std::vector<bool> probe_live(const std::vector<Fid>& fids);
  std::vector<Fid> list_live();
  std::uint64_t reset_temporaries();

  std::size_t batch_size() const noexcept { return batch_size_; }
  void set_batch_size(std::size_t n) { batch_size_ = n == 0 ? 1 : n; }

 private:
  Bytes call(MsgKind kind, std::uint64_t query_id, ByteView payload);
  void observe(const std::vector<Fid>& fids);

  Channel& channel_;
  AdversaryTrace* trace_;
  std::size_t batch_size_;
};

}  // namespace fidstore
