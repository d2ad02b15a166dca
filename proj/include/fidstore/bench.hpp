#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fidstore/cipher_backend.hpp"
#include "fidstore/workload.hpp"
#include "fidstore/zone_sim.hpp"

namespace fidstore {

struct OpStats {
  double median_ns = 0;
  double p99_ns = 0;
  double median_cycles = 0;
  double p99_cycles = 0;
};

struct CostReport {
  std::uint64_t iters = 0;
  OpStats put, get, encrypt, decrypt;
  double decrypt_over_get = 0;
  double encrypt_over_put = 0;
  double ghz = 0;  // measured TSC rate; 0 when unavailable
  std::uint64_t fid_metadata_per_field = 8;
  std::uint64_t aead_metadata_per_field = 28;
};

// Median per-op cost of put/get on a warm temporary FixedWidth(4) partition
// against AES-256-GCM sealing and opening of one 4-byte field. Samples are
// averages over blocks of `block` consecutive operations.
CostReport bench_ops(std::uint64_t iters, std::uint64_t block = 256);

struct StorageReport {
  std::uint64_t fields = 0;
  std::uint64_t width = 0;
  std::uint64_t plaintext_bytes = 0;
  std::uint64_t cipher_bytes = 0;     // fields * (width + 28)
  std::uint64_t fid_dbms_bytes = 0;   // fields * 8
  std::uint64_t fid_store_bytes = 0;  // fields * width
  std::uint64_t fid_seal_bytes = 0;   // ceil(fields * width / 4096) * 36
  std::uint64_t fid_total_bytes = 0;
  std::uint64_t fid_metadata_per_field = 0;
  std::uint64_t aead_metadata_per_field = 0;
  std::uint64_t cipher_field_bytes = 0;
  // (cipher_field_bytes - fid_metadata_per_field) / cipher_field_bytes, in percent.
  double metadata_reduction_pct = 0;
};

StorageReport bench_storage(std::uint64_t fields, std::uint64_t width);

std::string ops_csv_header();
std::string to_csv(const CostReport& r);
std::string storage_csv_header();
std::string to_csv(const StorageReport& r);
std::string workload_csv_header();
std::string to_csv(const RunReport& r);
std::string to_csv(const CipherReport& r, std::uint64_t seed, const WorkloadSpec& spec);

// Seed-derived crash point for one matrix cell, sized to the default run.
CrashPoint matrix_crash_point(CrashKind kind, std::uint64_t seed, const WorkloadSpec& spec);

struct CrashRow {
  std::string point;
  std::string target;
  std::uint64_t seed = 0;
  bool fired = false;
  std::uint64_t violations = 0;  // after recovery, before orphan GC
  std::uint64_t orphans_pre_gc = 0;
  std::uint64_t orphans_post_gc = 0;
  std::uint64_t recovery_replayed = 0;
  std::uint64_t final_violations = 0;
  std::uint64_t statements = 0;
};

WorkloadSpec crash_matrix_spec();
CrashRow run_crash_cell(CrashKind kind, std::uint64_t seed, const WorkloadSpec& spec);
std::string crash_csv_header();
std::string to_csv(const CrashRow& r);

}  // namespace fidstore
