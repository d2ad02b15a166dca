#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace fidstore {

enum class Mode : std::uint8_t { ReadOnly, ReadWrite, WriteOnly, InsertOnly, PointSelect, RangeSelect };
enum class Distribution : std::uint8_t { Uniform, Zipfian };

std::string_view mode_name(Mode m) noexcept;
Mode parse_mode(std::string_view s);
std::string_view distribution_name(Distribution d) noexcept;
Distribution parse_distribution(std::string_view s);

struct WorkloadSpec {
  Mode mode = Mode::ReadWrite;
  Distribution distribution = Distribution::Uniform;
  double theta = 0.8;
  std::uint32_t tables = 1;
  std::uint64_t rows_per_table = 1000;
  std::uint64_t duration_ops = 10000;
  std::uint32_t threads_simulated = 4;
  std::size_t batch_size = 256;
  // Page-cache capacity as a fraction of the permanent data pages.
  double cache_fraction = 0.25;
  std::uint64_t range_size = 20;
  // Vacuum after this many statements; every fourth maintenance also runs orphan GC.
  std::uint64_t maintenance_every = 500;

  void validate() const;
};

// Sysbench-style statement. `key` is the plain id column of the target row.
enum class StmtKind : std::uint8_t {
  PointSelect,
  RangeScan,
  RangeSum,
  UpdateIndex,
  UpdateNonIndex,
  DeleteInsert,
  Insert,
  SelectWhere,
};

std::string_view stmt_name(StmtKind k) noexcept;

struct Stmt {
  StmtKind kind = StmtKind::PointSelect;
  std::uint32_t table = 0;
  std::uint64_t key = 0;
  std::uint64_t span = 0;   // range statements
  std::int64_t value = 0;   // k for inserts, delta for UpdateIndex, constant for SelectWhere
  std::string text;         // c for inserts and UpdateNonIndex

  friend bool operator==(const Stmt&, const Stmt&) = default;
};

using TxnPlan = std::vector<Stmt>;

// Zipfian over [1, n] by inverse CDF; rank 1 is the hottest key.
class ZipfGenerator {
 public:
  ZipfGenerator(std::uint64_t n, double theta);
  std::uint64_t next(std::mt19937_64& rng) const;
  std::uint64_t n() const noexcept { return n_; }

 private:
  std::uint64_t n_;
  std::vector<double> cdf_;
};

// c column text: the key followed by seed-derived filler, as sysbench does.
std::string make_c_text(std::uint64_t key, std::mt19937_64& rng, std::size_t len = 100);
// Key encoded in a c text, or 0 when malformed.
std::uint64_t c_text_key(std::string_view text);

// Deterministic transaction stream for one WorkloadSpec.
class WorkloadGenerator {
 public:
  WorkloadGenerator(const WorkloadSpec& spec, std::uint64_t seed);

  TxnPlan next_txn();
  std::uint64_t pick_key();
  std::mt19937_64& rng() noexcept { return rng_; }
  std::uint64_t next_insert_key() const noexcept { return next_key_; }

 private:
  Stmt stmt(StmtKind kind);

  WorkloadSpec spec_;
  std::mt19937_64 rng_;
  ZipfGenerator zipf_;
  std::uint64_t next_key_;
};

}  // namespace fidstore
