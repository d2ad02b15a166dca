#include "fidstore/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>

#include "fidstore/aead.hpp"
#include "fidstore/mapping_store.hpp"
#include "fidstore/vfs.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <x86intrin.h>
#endif

namespace fidstore {

namespace {

using Clock = std::chrono::steady_clock;

double measure_ghz() {
#if defined(__x86_64__) || defined(__i386__)
  const auto t0 = Clock::now();
  const auto c0 = __rdtsc();
  while (Clock::now() - t0 < std::chrono::milliseconds(20)) {
  }
  const auto c1 = __rdtsc();
  const auto ns = std::chrono::duration<double, std::nano>(Clock::now() - t0).count();
  return static_cast<double>(c1 - c0) / ns;
#else
  return 0.0;
#endif
}

OpStats summarize(std::vector<double> samples, double ghz) {
  OpStats s;
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  s.median_ns = samples[samples.size() / 2];
  s.p99_ns = samples[std::min(samples.size() - 1, samples.size() * 99 / 100)];
  s.median_cycles = s.median_ns * ghz;
  s.p99_cycles = s.p99_ns * ghz;
  return s;
}

// Per-op nanoseconds for one timed block of n operations.
template <class F>
double time_block(std::uint64_t n, F&& f) {
  const auto t0 = Clock::now();
  f();
  const auto t1 = Clock::now();
  return std::chrono::duration<double, std::nano>(t1 - t0).count() / static_cast<double>(n);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

CostReport bench_ops(std::uint64_t iters, std::uint64_t block) {
  if (block == 0) block = 1;
  CostReport r;
  r.iters = iters;
  r.ghz = measure_ghz();

  SimVfs disk("bench");
  MappingStore store(disk);
  const auto part = store.create_partition(PartitionKind::Temporary, ValueLayout::fixed(4));
  std::vector<Fid> fids(iters);
  std::uint8_t field[4] = {1, 2, 3, 4};
  volatile std::uint64_t sink = 0;

  // Warm-up touches every code path once before timing.
  for (int i = 0; i < 1000; ++i) store.get(store.put(part, field));

  Bytes out;
  out.reserve(8);
  AesGcm aead(derive_key("fidstore.bench", 0));
  Nonce nonce{};
  Tag tag{};
  std::uint8_t ct[4];
  std::uint8_t pt[4];
  store_le64(nonce.data(), ~0ULL);
  aead.seal(nonce, {}, field, ct, tag);
  const Nonce open_nonce = nonce;
  const Tag open_tag = tag;
  std::uint8_t sealed[4];
  std::copy(ct, ct + 4, sealed);

  // The four operations run block-interleaved so drift in machine load hits
  // each of them alike.
  std::vector<double> puts, gets, encs, decs;
  const auto nblocks = iters / block + 1;
  for (auto* v : {&puts, &gets, &encs, &decs}) v->reserve(nblocks);
  for (std::uint64_t i = 0; i < iters; i += block) {
    const auto n = std::min(block, iters - i);
    const auto end = i + n;
    puts.push_back(time_block(n, [&] {
      for (std::uint64_t j = i; j < end; ++j) {
        field[0] = static_cast<std::uint8_t>(j);
        fids[j] = store.put(part, field);
      }
    }));
    gets.push_back(time_block(n, [&] {
      for (std::uint64_t j = i; j < end; ++j) {
        store.get_into(fids[j], out);
        sink = sink + out[0];
      }
    }));
    encs.push_back(time_block(n, [&] {
      for (std::uint64_t j = i; j < end; ++j) {
        store_le64(nonce.data(), j);
        field[0] = static_cast<std::uint8_t>(j);
        aead.seal(nonce, {}, field, ct, tag);
        sink = sink + ct[0];
      }
    }));
    decs.push_back(time_block(n, [&] {
      for (std::uint64_t j = i; j < end; ++j)
        if (aead.open(open_nonce, {}, sealed, open_tag, pt)) sink = sink + pt[0];
    }));
  }
  (void)sink;

  r.put = summarize(puts, r.ghz);
  r.get = summarize(gets, r.ghz);
  r.encrypt = summarize(encs, r.ghz);
  r.decrypt = summarize(decs, r.ghz);
  r.decrypt_over_get = r.get.median_ns > 0 ? r.decrypt.median_ns / r.get.median_ns : 0;
  r.encrypt_over_put = r.put.median_ns > 0 ? r.encrypt.median_ns / r.put.median_ns : 0;
  return r;
}

StorageReport bench_storage(std::uint64_t fields, std::uint64_t width) {
  if (fields == 0) fail(Errc::InvalidArgument, "fields must be >= 1");
  StorageReport r;
  r.fields = fields;
  r.width = width;
  r.fid_metadata_per_field = sizeof(Fid);
  r.aead_metadata_per_field = kAeadOverhead;
  r.cipher_field_bytes = width + kAeadOverhead;
  r.plaintext_bytes = fields * width;
  r.cipher_bytes = fields * r.cipher_field_bytes;
  r.fid_dbms_bytes = fields * r.fid_metadata_per_field;
  r.fid_store_bytes = fields * width;
  r.fid_seal_bytes = (fields * width + kBlockSize - 1) / kBlockSize * SealedBlock::kOverhead;
  r.fid_total_bytes = r.fid_dbms_bytes + r.fid_store_bytes + r.fid_seal_bytes;
  r.metadata_reduction_pct = 100.0 * static_cast<double>(r.cipher_field_bytes - r.fid_metadata_per_field) /
                             static_cast<double>(r.cipher_field_bytes);
  return r;
}

std::string ops_csv_header() {
  return "op,median_ns,p99_ns,median_cycles,p99_cycles,iters";
}

std::string to_csv(const CostReport& r) {
  std::string out;
  auto row = [&](const char* name, const OpStats& s) {
    out += std::string(name) + "," + fmt(s.median_ns) + "," + fmt(s.p99_ns) + "," + fmt(s.median_cycles) + "," +
           fmt(s.p99_cycles) + "," + std::to_string(r.iters) + "\n";
  };
  row("put", r.put);
  row("get", r.get);
  row("aead_encrypt_field", r.encrypt);
  row("aead_decrypt_field", r.decrypt);
  return out;
}

std::string storage_csv_header() {
  return "fields,width,plaintext_bytes,cipher_bytes,fid_dbms_bytes,fid_store_bytes,fid_seal_bytes,"
         "fid_total_bytes,fid_metadata_per_field,aead_metadata_per_field,cipher_field_bytes,metadata_reduction_pct";
}

std::string to_csv(const StorageReport& r) {
  return std::to_string(r.fields) + "," + std::to_string(r.width) + "," + std::to_string(r.plaintext_bytes) + "," +
         std::to_string(r.cipher_bytes) + "," + std::to_string(r.fid_dbms_bytes) + "," +
         std::to_string(r.fid_store_bytes) + "," + std::to_string(r.fid_seal_bytes) + "," +
         std::to_string(r.fid_total_bytes) + "," + std::to_string(r.fid_metadata_per_field) + "," +
         std::to_string(r.aead_metadata_per_field) + "," + std::to_string(r.cipher_field_bytes) + "," +
         fmt(r.metadata_reduction_pct);
}

std::string workload_csv_header() {
  return "backend,mode,dist,theta,cache_fraction,batch,seed,statements,txns_committed,txns_aborted,conflicts,"
         "round_trips,cache_hits,cache_misses,hit_rate,crypto_invocations,envelope_ops,reveals,invariant_holds,"
         "violations,orphans";
}

std::string to_csv(const RunReport& r) {
  const auto& s = r.spec;
  return "fid," + std::string(mode_name(s.mode)) + "," + std::string(distribution_name(s.distribution)) + "," +
         fmt(s.theta) + "," + fmt(s.cache_fraction) + "," + std::to_string(s.batch_size) + "," +
         std::to_string(r.seed) + "," + std::to_string(r.statements) + "," + std::to_string(r.txns_committed) + "," +
         std::to_string(r.txns_aborted) + "," + std::to_string(r.conflicts) + "," + std::to_string(r.round_trips) +
         "," + std::to_string(r.cache_hits) + "," + std::to_string(r.cache_misses) + "," + fmt(r.hit_rate) + "," +
         std::to_string(r.crypto_invocations) + "," + std::to_string(r.envelope_ops) + "," +
         std::to_string(r.reveals) + "," + (r.final_invariant.holds ? "1" : "0") + "," +
         std::to_string(r.final_invariant.violations) + "," + std::to_string(r.final_invariant.orphans);
}

std::string to_csv(const CipherReport& r, std::uint64_t seed, const WorkloadSpec& s) {
  return "cipher," + std::string(mode_name(s.mode)) + "," + std::string(distribution_name(s.distribution)) + "," +
         fmt(s.theta) + "," + fmt(s.cache_fraction) + "," + std::to_string(s.batch_size) + "," +
         std::to_string(seed) + "," + std::to_string(r.statements) + ",,,,0,,,," + std::to_string(r.crypto_ops()) +
         "," + std::to_string(r.crypto_ops()) + "," + std::to_string(r.reveals) + ",,,";
}

WorkloadSpec crash_matrix_spec() {
  WorkloadSpec s;
  s.mode = Mode::ReadWrite;
  s.rows_per_table = 500;
  s.duration_ops = 10000;
  s.threads_simulated = 4;
  s.maintenance_every = 500;
  return s;
}

CrashPoint matrix_crash_point(CrashKind kind, std::uint64_t seed, const WorkloadSpec& spec) {
  std::mt19937_64 rng(seed * 0x2545F4914F6CDD1DULL + static_cast<std::uint64_t>(kind) + 1);
  auto pick = [&](std::uint64_t lo, std::uint64_t hi) {
    return std::uniform_int_distribution<std::uint64_t>(lo, std::max(lo, hi))(rng);
  };
  // Maintenance runs before the last statement only; orphan GC rides on every fourth pass.
  const std::uint64_t maint =
      spec.maintenance_every && spec.duration_ops ? (spec.duration_ops - 1) / spec.maintenance_every : 0;
  switch (kind) {
    case CrashKind::DuringVacuum: return CrashPoint::standard(kind, pick(1, std::max<std::uint64_t>(1, maint / 2)));
    case CrashKind::DuringOrphanGc: return CrashPoint::standard(kind, pick(1, std::max<std::uint64_t>(1, maint / 4)));
    case CrashKind::RandomByte:
      return CrashPoint::standard(kind, pick(spec.duration_ops / 100, spec.duration_ops * 9 / 10), pick(0, 8191));
    default: return CrashPoint::standard(kind, pick(1, std::max<std::uint64_t>(1, spec.duration_ops / 20)));
  }
}

CrashRow run_crash_cell(CrashKind kind, std::uint64_t seed, const WorkloadSpec& spec) {
  const auto point = matrix_crash_point(kind, seed, spec);
  ZoneSim sim;
  const auto rep = sim.run_workload(seed, spec, point);
  CrashRow row;
  row.point = std::string(crash_kind_name(kind));
  row.target = std::string(crash_target_name(point.target));
  row.seed = seed;
  row.fired = rep.crash_fired;
  row.statements = rep.statements;
  if (rep.recovery) {
    row.violations = rep.recovery->invariant.violations;
    row.recovery_replayed = rep.recovery->privacy_records + rep.recovery->db.records_scanned;
  }
  row.orphans_pre_gc = rep.orphans_pre_gc;
  row.orphans_post_gc = rep.orphans_post_gc;
  row.final_violations = rep.final_invariant.violations;
  return row;
}

std::string crash_csv_header() {
  return "crash_point,target,seed,fired,violations,orphans_pre_gc,orphans_post_gc,recovery_replayed,"
         "final_violations,statements";
}

std::string to_csv(const CrashRow& r) {
  return r.point + "," + r.target + "," + std::to_string(r.seed) + "," + (r.fired ? "1" : "0") + "," +
         std::to_string(r.violations) + "," + std::to_string(r.orphans_pre_gc) + "," +
         std::to_string(r.orphans_post_gc) + "," + std::to_string(r.recovery_replayed) + "," +
         std::to_string(r.final_violations) + "," + std::to_string(r.statements);
}

}  // namespace fidstore
