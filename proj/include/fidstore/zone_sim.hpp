#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fidstore/channel.hpp"
#include "fidstore/client.hpp"
#include "fidstore/integrity_db.hpp"
#include "fidstore/mapping_store.hpp"
#include "fidstore/privacy_proxy.hpp"
#include "fidstore/proxy_client.hpp"
#include "fidstore/trace.hpp"
#include "fidstore/vfs.hpp"
#include "fidstore/workload.hpp"

namespace fidstore {

enum class CrashTarget : std::uint8_t { PrivacyZone, IntegrityZone, Both };

enum class CrashKind : std::uint8_t {
  BeforePrivacyFlush,
  AfterPrivacyFlushBeforeDbCommit,
  AfterDbCommit,
  DuringVacuum,
  DuringOrphanGc,
  RandomByte,
};

inline constexpr CrashKind kAllCrashKinds[] = {
    CrashKind::BeforePrivacyFlush, CrashKind::AfterPrivacyFlushBeforeDbCommit,
    CrashKind::AfterDbCommit,      CrashKind::DuringVacuum,
    CrashKind::DuringOrphanGc,     CrashKind::RandomByte,
};

std::string_view crash_kind_name(CrashKind k) noexcept;
std::string_view crash_target_name(CrashTarget t) noexcept;

struct CrashPoint {
  CrashKind kind = CrashKind::BeforePrivacyFlush;
  CrashTarget target = CrashTarget::Both;
  // Fires on this hit of the site. For RandomByte: the statement index at
  // which the durable-byte budget is armed.
  std::uint64_t occurrence = 1;
  // RandomByte only: durable bytes allowed before the torn write.
  std::uint64_t byte_budget = 0;

  // AfterPrivacyFlushBeforeDbCommit loses only the integrity zone; the others crash both.
  static CrashPoint standard(CrashKind kind, std::uint64_t occurrence = 1, std::uint64_t byte_budget = 0);
};

struct TopologyConfig {
  StoreConfig store{};
  DbConfig db{};
  LatencyModel latency{};
  std::size_t batch_size = 256;
  AeadKey client_key = derive_key("fidstore.client", 0);
};

struct InvariantReport {
  bool holds = true;
  std::uint64_t checked = 0;
  std::uint64_t violations = 0;  // dangling FIDs plus secrets that do not match their row
  std::uint64_t orphans = 0;
  std::vector<Fid> dangling;
};

struct RecoveryReport {
  bool privacy_replayed = false;
  bool integrity_replayed = false;
  std::uint64_t privacy_records = 0;
  DbRecoveryReport db{};
  // The integrity zone kept running but stalled while the privacy zone replayed.
  bool integrity_paused = false;
  InvariantReport invariant{};
};

struct RunReport {
  std::uint64_t seed = 0;
  WorkloadSpec spec{};
  std::uint64_t statements = 0;
  std::uint64_t txns_committed = 0;
  std::uint64_t txns_aborted = 0;
  std::uint64_t conflicts = 0;
  std::uint64_t errors = 0;
  std::uint64_t reveals = 0;
  std::uint64_t content_mismatches = 0;
  std::uint64_t round_trips = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  double simulated_ns = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
  double hit_rate = 0;
  std::uint64_t crypto_invocations = 0;  // block seals and opens
  std::uint64_t envelope_ops = 0;        // client envelope decrypts and encrypts
  std::uint64_t vacuumed = 0;
  std::uint64_t orphans_collected = 0;
  bool crash_fired = false;
  std::string crash_point;
  std::uint64_t orphans_pre_gc = 0;
  std::uint64_t orphans_post_gc = 0;
  std::optional<RecoveryReport> recovery;
  InvariantReport final_invariant{};
  std::uint64_t trace_events = 0;
  std::uint64_t trace_digest = 0;

  std::string to_json() const;
};

std::string to_json(const RecoveryReport& r);

// Two zones joined by a byte channel, on simulated disks, with a client
// session and an adversary trace. Single logical thread; every source of
// nondeterminism is seeded.
class ZoneSim {
 public:
  explicit ZoneSim(TopologyConfig cfg = {});
  ~ZoneSim();
  ZoneSim(const ZoneSim&) = delete;
  ZoneSim& operator=(const ZoneSim&) = delete;

  static Schema sbtest_schema();
  static constexpr std::size_t kId = 0, kK = 1, kC = 2, kPad = 3;

  // Creates spec.tables tables of spec.rows_per_table rows, keys 1..n.
  void load(const WorkloadSpec& spec, std::uint64_t seed);
  // Loads, then runs spec.duration_ops statements over interleaved sessions.
  // An armed crash fires once; the run recovers, collects orphans and goes on.
  RunReport run_workload(std::uint64_t seed, const WorkloadSpec& spec,
                         std::optional<CrashPoint> crash = std::nullopt);
  // Runs transactions one after another on a single session; creates an
  // empty table when none exists.
  RunReport run_script(const std::vector<TxnPlan>& script);

  void arm(const CrashPoint& point);
  void disarm();
  // Crash the target at once, outside any instrumented site.
  void inject_crash(const CrashPoint& point);
  RecoveryReport recover_all();
  InvariantReport check_invariant();

  bool privacy_down() const noexcept { return privacy_down_; }
  bool integrity_down() const noexcept { return integrity_down_; }

  SimVfs& privacy_disk() noexcept { return privacy_disk_; }
  SimVfs& integrity_disk() noexcept { return integrity_disk_; }
  PrivacyZone& privacy() noexcept { return *zone_; }
  Channel& channel() noexcept { return channel_; }
  ProxyClient& proxy() noexcept { return *proxy_; }
  IntegrityDb& db() noexcept { return *db_; }
  ClientSession& client() noexcept { return client_; }
  AdversaryTrace& trace() noexcept { return trace_; }
  const TopologyConfig& config() const noexcept { return cfg_; }
  std::optional<std::uint64_t> row_of(std::uint32_t table, std::uint64_t key) const;

 private:
  struct Session {
    TxnId txn = 0;
    TxnPlan plan;
    std::size_t pc = 0;
    std::map<std::pair<std::uint32_t, std::uint64_t>, std::uint64_t> moved;  // (table, key) -> new row
  };

  void connect();
  void crash_now(CrashTarget target);
  void on_site(CrashSite site);
  void exec_stmt(Session& s, const Stmt& st, RunReport& rep);
  void commit_session(Session& s, RunReport& rep);
  void abandon(Session& s, RunReport& rep);
  void maintain(RunReport& rep, bool with_gc);
  void handle_crash(RunReport& rep, std::vector<Session>& sessions);
  void rebuild_keys();
  void finish_report(RunReport& rep);
  ClientEnvelope seal_text(const std::string& text);
  std::vector<Param> row_params(std::uint64_t key, std::int64_t k, const std::string& c);

  TopologyConfig cfg_;
  AdversaryTrace trace_;
  std::shared_ptr<ByteCrashBudget> budget_;
  SimVfs privacy_disk_;
  SimVfs integrity_disk_;
  std::unique_ptr<PrivacyZone> zone_;
  Channel channel_;
  std::unique_ptr<ProxyClient> proxy_;
  std::unique_ptr<IntegrityDb> db_;
  ClientSession client_;
  std::vector<std::uint32_t> tables_;
  std::vector<std::map<std::uint64_t, std::uint64_t>> keys_;  // per table: key -> row id

  std::optional<CrashPoint> armed_;
  std::uint64_t site_hits_ = 0;
  std::optional<CrashTarget> fired_target_;
  struct Counters {
    std::uint64_t hits = 0, misses = 0, crypto = 0, envelope = 0;
  };
  Counters read_counters();
  void bank();
  Counters base_{}, banked_{};
  bool privacy_down_ = false;
  bool integrity_down_ = false;
};

// Runs both scripts on fresh, identically configured topologies and compares
// the adversary traces event for event. Throws StructureMismatch when the
// scripts differ in anything but secret plaintexts.
bool trace_indistinguishability(const std::vector<TxnPlan>& a, const std::vector<TxnPlan>& b,
                                const TopologyConfig& cfg = {});

}  // namespace fidstore
