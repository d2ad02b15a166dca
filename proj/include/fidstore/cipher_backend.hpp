#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "fidstore/client.hpp"
#include "fidstore/workload.hpp"

namespace fidstore {

struct CipherReport {
  std::uint64_t statements = 0;
  std::uint64_t point_selects = 0;
  std::uint64_t encrypts = 0;
  std::uint64_t decrypts = 0;
  std::uint64_t reveals = 0;
  std::uint64_t content_mismatches = 0;
  std::uint64_t crypto_ops() const noexcept { return encrypts + decrypts; }
};

// Ciphertext-scheme comparison engine. Sensitive cells are AEAD envelopes
// under a storage key held by the trusted side; every operator decrypts its
// inputs, computes and re-encrypts, and results are re-encrypted for the
// client. Runs the same statement stream as ZoneSim, on one session.
class CipherBackend {
 public:
  CipherBackend(const AeadKey& client_key = derive_key("fidstore.client", 0),
                const AeadKey& storage_key = derive_key("fidstore.cipher", 0));

  void load(const WorkloadSpec& spec, std::uint64_t seed);
  CipherReport run_workload(std::uint64_t seed, const WorkloadSpec& spec);

  std::uint64_t insert(std::uint32_t table, std::uint64_t key, const ClientEnvelope& k, const ClientEnvelope& c);
  // Stored c re-encrypted for the client.
  std::optional<ClientEnvelope> point_select(std::uint32_t table, std::uint64_t key);
  std::vector<ClientEnvelope> range_scan(std::uint32_t table, std::uint64_t key, std::uint64_t span);
  std::optional<ClientEnvelope> range_sum(std::uint32_t table, std::uint64_t key, std::uint64_t span);
  bool update_index(std::uint32_t table, std::uint64_t key, const ClientEnvelope& delta);
  bool update_non_index(std::uint32_t table, std::uint64_t key, const ClientEnvelope& c);
  void remove(std::uint32_t table, std::uint64_t key);

  std::uint64_t encrypts() const noexcept { return encrypts_; }
  std::uint64_t decrypts() const noexcept { return decrypts_; }
  // Bytes of sensitive cells at rest: width plus 28 bytes of AEAD metadata each.
  std::uint64_t sensitive_bytes() const;
  ClientSession& client() noexcept { return client_; }

 private:
  struct Row {
    std::uint64_t key = 0;
    ClientEnvelope k, c;
  };
  Bytes open_client(const ClientEnvelope& env);
  ClientEnvelope seal_client(ByteView plain);
  Bytes open_stored(const ClientEnvelope& env);
  ClientEnvelope seal_stored(ByteView plain);
  std::map<std::uint64_t, Row>* table_rows(std::uint32_t table);
  std::optional<std::uint64_t> row_of(std::uint32_t table, std::uint64_t key) const;

  ClientSession client_;
  EnvelopeCipher client_cipher_;
  EnvelopeCipher storage_;
  std::vector<std::map<std::uint64_t, Row>> tables_;
  std::vector<std::map<std::uint64_t, std::uint64_t>> keys_;
  std::uint64_t next_row_ = 0;
  std::uint64_t encrypts_ = 0;
  std::uint64_t decrypts_ = 0;
  std::size_t pad_width_ = 128;
};

}  // namespace fidstore
