#include "fidstore/workload.hpp"

#include <algorithm>
#include <cmath>

#include "fidstore/error.hpp"

namespace fidstore {

namespace {

constexpr std::string_view kModes[] = {"read-only", "read-write", "write-only",
                                       "insert-only", "point-select", "range-select"};

}  // namespace

std::string_view mode_name(Mode m) noexcept { return kModes[static_cast<int>(m)]; }

Mode parse_mode(std::string_view s) {
  for (int i = 0; i < 6; ++i)
    if (kModes[i] == s) return static_cast<Mode>(i);
  fail(Errc::InvalidArgument, "unknown mode " + std::string(s));
}

std::string_view distribution_name(Distribution d) noexcept {
  return d == Distribution::Uniform ? "uniform" : "zipfian";
}

Distribution parse_distribution(std::string_view s) {
  if (s == "uniform") return Distribution::Uniform;
  if (s == "zipfian" || s == "zipf") return Distribution::Zipfian;
  fail(Errc::InvalidArgument, "unknown distribution " + std::string(s));
}

void WorkloadSpec::validate() const {
  if (!(theta > 0.0 && theta <= 1.0)) fail(Errc::InvalidArgument, "theta must be in (0, 1]");
  if (rows_per_table < 1) fail(Errc::InvalidArgument, "rows_per_table must be >= 1");
  if (tables < 1) fail(Errc::InvalidArgument, "tables must be >= 1");
  if (threads_simulated < 1) fail(Errc::InvalidArgument, "threads_simulated must be >= 1");
  if (!(cache_fraction > 0.0)) fail(Errc::InvalidArgument, "cache fraction must be positive");
}

std::string_view stmt_name(StmtKind k) noexcept {
  switch (k) {
    case StmtKind::PointSelect: return "point-select";
    case StmtKind::RangeScan: return "range-scan";
    case StmtKind::RangeSum: return "range-sum";
    case StmtKind::UpdateIndex: return "update-index";
    case StmtKind::UpdateNonIndex: return "update-non-index";
    case StmtKind::DeleteInsert: return "delete-insert";
    case StmtKind::Insert: return "insert";
    case StmtKind::SelectWhere: return "select-where";
  }
  return "unknown";
}

ZipfGenerator::ZipfGenerator(std::uint64_t n, double theta) : n_(n), cdf_(n) {
  double acc = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    acc += 1.0 / std::pow(static_cast<double>(i + 1), theta);
    cdf_[i] = acc;
  }
  for (auto& c : cdf_) c /= acc;
}

std::uint64_t ZipfGenerator::next(std::mt19937_64& rng) const {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  return std::min<std::uint64_t>(static_cast<std::uint64_t>(it - cdf_.begin()), n_ - 1) + 1;
}

std::string make_c_text(std::uint64_t key, std::mt19937_64& rng, std::size_t len) {
  static constexpr char kDigits[] = "0123456789";
  std::string out = "key=" + std::to_string(key) + ";";
  while (out.size() < len) out.push_back(kDigits[rng() % 10]);
  return out;
}

std::uint64_t c_text_key(std::string_view text) {
  if (!text.starts_with("key=")) return 0;
  const auto end = text.find(';');
  if (end == std::string_view::npos || end == 4) return 0;
  std::uint64_t key = 0;
  for (auto c : text.substr(4, end - 4)) {
    if (c < '0' || c > '9') return 0;
    key = key * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return key;
}

WorkloadGenerator::WorkloadGenerator(const WorkloadSpec& spec, std::uint64_t seed)
    : spec_(spec), rng_(seed), zipf_(spec.rows_per_table, spec.theta), next_key_(spec.rows_per_table + 1) {
  spec_.validate();
}

std::uint64_t WorkloadGenerator::pick_key() {
  if (spec_.distribution == Distribution::Zipfian) return zipf_.next(rng_);
  return std::uniform_int_distribution<std::uint64_t>(1, spec_.rows_per_table)(rng_);
}

Stmt WorkloadGenerator::stmt(StmtKind kind) {
  Stmt s;
  s.kind = kind;
  s.table = static_cast<std::uint32_t>(rng_() % spec_.tables);
  s.key = kind == StmtKind::Insert ? next_key_++ : pick_key();
  switch (kind) {
    case StmtKind::RangeScan:
    case StmtKind::RangeSum:
      s.span = spec_.range_size;
      break;
    case StmtKind::UpdateIndex:
      s.value = 1;
      break;
    case StmtKind::DeleteInsert:
    case StmtKind::Insert:
      s.value = static_cast<std::int64_t>(rng_() % 1000000);
      s.text = make_c_text(s.key, rng_);
      break;
    case StmtKind::UpdateNonIndex:
      s.text = make_c_text(s.key, rng_);
      break;
    default:
      break;
  }
  return s;
}

TxnPlan WorkloadGenerator::next_txn() {
  TxnPlan plan;
  auto reads = [&] {
    for (int i = 0; i < 4; ++i) plan.push_back(stmt(StmtKind::PointSelect));
    plan.push_back(stmt(StmtKind::RangeScan));
    plan.push_back(stmt(StmtKind::RangeSum));
  };
  auto writes = [&] {
    plan.push_back(stmt(StmtKind::UpdateIndex));
    plan.push_back(stmt(StmtKind::UpdateNonIndex));
    plan.push_back(stmt(StmtKind::DeleteInsert));
  };
  switch (spec_.mode) {
    case Mode::ReadOnly: reads(); break;
    case Mode::ReadWrite: reads(); writes(); break;
    case Mode::WriteOnly: writes(); break;
    case Mode::InsertOnly: plan.push_back(stmt(StmtKind::Insert)); break;
    case Mode::PointSelect: plan.push_back(stmt(StmtKind::PointSelect)); break;
    case Mode::RangeSelect:
      plan.push_back(stmt(StmtKind::RangeScan));
      plan.push_back(stmt(StmtKind::RangeSum));
      break;
  }
  return plan;
}

}  // namespace fidstore
