#include "doctest.h"

#include <algorithm>

#include "fidstore/bench.hpp"

using namespace fidstore;

namespace {

std::size_t commas(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), ','));
}

}  // namespace

TEST_CASE("storage arithmetic") {
  for (std::uint64_t fields : {1ULL, 1000ULL, 1000000ULL}) {
    for (std::uint64_t width : {4ULL, 8ULL, 100ULL}) {
      const auto r = bench_storage(fields, width);
      const std::uint64_t pages = (fields * width + 4095) / 4096;
      CHECK(r.plaintext_bytes == fields * width);
      CHECK(r.cipher_bytes == fields * (width + 28));
      CHECK(r.fid_dbms_bytes == fields * 8);
      CHECK(r.fid_store_bytes == fields * width);
      CHECK(r.fid_seal_bytes == pages * 36);
      CHECK(r.fid_total_bytes == fields * 8 + fields * width + pages * 36);
    }
  }
  const auto r = bench_storage(1000000, 4);
  CHECK(r.fid_metadata_per_field == 8);
  CHECK(r.aead_metadata_per_field == 28);
  CHECK(r.cipher_field_bytes == 32);
  CHECK(r.metadata_reduction_pct == doctest::Approx(75.0));
}

TEST_CASE("csv rows match their headers") {
  CHECK(commas(to_csv(bench_storage(10, 4))) == commas(storage_csv_header()));
  CostReport c;
  CHECK(commas(to_csv(c)) == 4 * commas(ops_csv_header()));
  RunReport w;
  CHECK(commas(to_csv(w)) == commas(workload_csv_header()));
  CrashRow row;
  CHECK(commas(to_csv(row)) == commas(crash_csv_header()));
}

TEST_CASE("cost bench runs") {
  const auto r = bench_ops(4096);
  CHECK(r.iters == 4096);
  CHECK(r.get.median_ns > 0);
  CHECK(r.decrypt.median_ns > 0);
  CHECK(r.decrypt_over_get > 0);
}

TEST_CASE("cipher backend counts crypto per statement") {
  CipherBackend cb;
  WorkloadSpec spec;
  spec.mode = Mode::PointSelect;
  spec.rows_per_table = 100;
  spec.duration_ops = 500;
  const auto r = cb.run_workload(1, spec);
  CHECK(r.point_selects > 0);
  CHECK(r.content_mismatches == 0);
  CHECK(r.crypto_ops() >= 2 * r.point_selects);
}

TEST_CASE("crash cell") {
  auto spec = crash_matrix_spec();
  spec.duration_ops = 1500;
  spec.rows_per_table = 200;
  const auto row = run_crash_cell(CrashKind::AfterDbCommit, 1, spec);
  CHECK(row.fired);
  CHECK(row.violations == 0);
  CHECK(row.final_violations == 0);
}
