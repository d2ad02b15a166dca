#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "fidstore/client.hpp"
#include "fidstore/mapping_store.hpp"
#include "fidstore/operators.hpp"

namespace fidstore {

struct Request;

// Privacy-zone entry point. Translates FIDs to plaintext, runs operators and
// writes results into one temporary partition per query.
class PrivacyProxy {
 public:
  PrivacyProxy(MappingStore& store, const AeadKey& client_key) : store_(store), cipher_(client_key) {}

  // Authenticates and decrypts the envelope, then stores the plaintext in
  // `target`, or in the query's temporary partition when none is given.
  Fid ingest(std::uint64_t query_id, const ClientEnvelope& env,
             std::optional<std::uint32_t> target = std::nullopt);
  ClientEnvelope reveal(Fid fid);
  OperatorResponse exec_operator(std::uint64_t query_id, const OperatorRequest& req);
  // Sequential semantics; errors are reported per position.
  std::vector<OpOutcome> exec_batch(std::uint64_t query_id, const std::vector<OperatorRequest>& reqs);
  // Drops the query's temporary partition. Idempotent.
  void end_query(std::uint64_t query_id);
  // Drops every temporary partition (after the peer zone restarted).
  std::uint64_t reset_temporaries();
  // Forget query bookkeeping after the store lost its volatile state.
  void forget_queries();

  std::uint32_t temp_partition(std::uint64_t query_id);
  std::size_t active_queries() const;
  std::uint64_t envelope_ops() const noexcept { return envelope_ops_.load(); }
  MappingStore& store() noexcept { return store_; }

 private:
  std::vector<Bytes> load_operands(const std::vector<Fid>& fids);

  MappingStore& store_;
  EnvelopeCipher cipher_;
  mutable std::mutex mu_;
  std::unordered_map<std::uint64_t, std::uint32_t> temps_;
  std::atomic<std::uint64_t> envelope_ops_{0};
};

// Message-level server for the privacy zone: owns the store and the proxy.
class PrivacyZone {
 public:
  PrivacyZone(Vfs& disk, StoreConfig cfg, const AeadKey& client_key, AdversaryTrace* trace = nullptr);

  Bytes handle(ByteView request);

  // Loses all volatile state; recover() rebuilds it from disk.
  void crash();
  std::uint64_t recover();

  MappingStore& store() noexcept { return *store_; }
  PrivacyProxy& proxy() noexcept { return *proxy_; }

 private:
  Bytes dispatch(const Request& req);

  std::unique_ptr<MappingStore> store_;
  std::unique_ptr<PrivacyProxy> proxy_;
};

}  // namespace fidstore
