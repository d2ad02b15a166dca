#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "fidstore/client.hpp"
#include "fidstore/fid.hpp"
#include "fidstore/operators.hpp"
#include "fidstore/proxy_client.hpp"
#include "fidstore/vfs.hpp"
#include "fidstore/wal.hpp"

namespace fidstore {

class AdversaryTrace;

enum class ColumnType : std::uint8_t { PlainInt = 0, PlainBytes = 1, SensitiveInt = 2, SensitiveBytes = 3 };

std::string_view column_type_name(ColumnType t) noexcept;
inline bool is_sensitive(ColumnType t) noexcept {
  return t == ColumnType::SensitiveInt || t == ColumnType::SensitiveBytes;
}

struct Column {
  std::string name;
  ColumnType type = ColumnType::PlainInt;
};
using Schema = std::vector<Column>;

// Stored cell: plain int, plain bytes, or the FID of a sensitive value.
using Cell = std::variant<std::int64_t, Bytes, Fid>;
// Insert/update argument. Sensitive columns take a client envelope, a
// temporary FID produced by an operator, or the row's current FID unchanged.
using Param = std::variant<std::int64_t, Bytes, Fid, ClientEnvelope>;

struct Row {
  std::uint64_t row_id = 0;
  std::vector<Cell> cells;

  friend bool operator==(const Row&, const Row&) = default;
};

using TxnId = std::uint64_t;

enum class TxnState : std::uint8_t { Active, Preparing, Committed, Aborted };

enum class CrashSite : std::uint8_t {
  BeforePrivacyFlush,
  AfterPrivacyFlushBeforeDbCommit,
  AfterDbCommit,
  DuringVacuum,
  DuringOrphanGc,
};

std::string_view crash_site_name(CrashSite s) noexcept;

struct ProtocolEvent {
  enum class Kind : std::uint8_t { Prepare, PrivacyFlushed, DbCommitDurable, Committed, Aborted };
  Kind kind;
  TxnId txn;
};

struct DbConfig {
  bool pad_sensitive = true;
  std::size_t pad_width = 128;
  FidConfig fid{};
};

struct DbRecoveryReport {
  std::uint64_t records_scanned = 0;
  std::uint64_t committed_txns = 0;
  std::uint64_t discarded_txns = 0;
};

// Transactional table engine of the integrity zone. Sensitive cells hold
// FIDs only. Snapshot isolation with first-updater-wins; engine calls are
// serialized.
class IntegrityDb {
 public:
  IntegrityDb(Vfs& disk, ProxyClient& proxy, DbConfig cfg = {}, AdversaryTrace* trace = nullptr);

  void set_crash_hook(std::function<void(CrashSite)> hook) { hook_ = std::move(hook); }

  std::uint32_t create_table(const std::string& name, Schema schema);
  std::optional<std::uint32_t> table_id(const std::string& name) const;
  const Schema& schema(std::uint32_t table) const;
  std::uint32_t partition(std::uint32_t table) const;
  std::size_t table_count() const;

  TxnId begin();
  std::uint64_t insert_row(TxnId txn, std::uint32_t table, const std::vector<Param>& values);
  void update_row(TxnId txn, std::uint32_t table, std::uint64_t row_id, const std::vector<Param>& values);
  void delete_row(TxnId txn, std::uint32_t table, std::uint64_t row_id);

  std::optional<Row> get_row(TxnId txn, std::uint32_t table, std::uint64_t row_id);
  std::vector<Row> scan(TxnId txn, std::uint32_t table, std::uint64_t lo = 0,
                        std::uint64_t hi = UINT64_MAX);
  // Rows whose sensitive `column` compares true against the constant.
  std::vector<Row> select_where(TxnId txn, std::uint32_t table, std::size_t column, OpCode cmp,
                                const ClientEnvelope& constant);
  // SUM over a sensitive int column, optionally filtered. Returns the FID of
  // the result; the client obtains the value through reveal().
  Fid sum(TxnId txn, std::uint32_t table, std::size_t column,
          std::optional<std::pair<OpCode, ClientEnvelope>> predicate = std::nullopt);
  // SUM over the rows with row_id in [lo, hi].
  Fid sum_range(TxnId txn, std::uint32_t table, std::size_t column, std::uint64_t lo, std::uint64_t hi);
  // Query-scoped temporaries: a constant, or one operator over FIDs.
  Fid ingest(TxnId txn, const ClientEnvelope& constant);
  OperatorResponse exec(TxnId txn, const OperatorRequest& req);
  std::vector<ClientEnvelope> reveal(TxnId txn, const std::vector<Fid>& fids);
  void prefetch(std::uint32_t table);

  void commit(TxnId txn);
  void abort(TxnId txn);

  std::uint64_t vacuum(std::uint32_t table);
  std::uint64_t vacuum_all();
  // Requires no active transactions.
  std::uint64_t orphan_gc();

  // Loses all volatile state; recover() rebuilds from catalog.json and db.wal.
  void crash();
  DbRecoveryReport recover();
  // Abort every in-flight transaction after the privacy zone went away.
  void on_privacy_lost();

  TxnState state(TxnId txn) const;
  std::size_t active_txns() const;
  std::vector<ProtocolEvent> events() const;
  void clear_events();
  // Sensitive FIDs of every stored version, visible or not.
  std::vector<Fid> referenced_fids() const;
  // (row_id, column, fid) of each version visible to a new snapshot.
  struct VisibleRef {
    std::uint32_t table;
    std::uint64_t row_id;
    std::size_t column;
    Fid fid;
  };
  std::vector<VisibleRef> visible_refs() const;
  // Committed state visible to a new snapshot, per table.
  std::map<std::uint64_t, std::vector<Cell>> visible_rows(std::uint32_t table) const;
  std::uint64_t pending_reclaim() const;
  std::uint64_t version_count() const;
  const DbConfig& config() const noexcept { return cfg_; }

 private:
  struct Version {
    TxnId begin = 0;
    TxnId end = 0;
    std::vector<Cell> cells;
  };
  struct Table {
    std::string name;
    Schema schema;
    std::uint32_t partition = 0;
    std::map<std::uint64_t, std::vector<Version>> rows;  // chain oldest -> newest
    std::uint64_t next_row_id = 0;
    std::vector<Fid> pending;  // unreferenced FIDs of aborted versions
  };
  enum class OpKind : std::uint8_t { Insert = 1, Update = 2, Delete = 3 };
  struct WriteOp {
    OpKind kind;
    std::uint32_t table;
    std::uint64_t row_id;
    std::vector<Cell> cells;
  };
  struct Txn {
    TxnState state = TxnState::Active;
    std::uint64_t snapshot = 0;
    std::uint64_t commit_ts = 0;
    bool used_privacy = false;
    bool privacy_mutations = false;
    std::vector<WriteOp> writes;
  };

  Table& table_ref(std::uint32_t table);
  const Table& table_ref(std::uint32_t table) const;
  Txn& active(TxnId txn);
  bool committed_by(TxnId writer, std::uint64_t snapshot) const;
  bool visible(const Version& v, TxnId reader, std::uint64_t snapshot) const;
  const Version* visible_version(const Table& t, std::uint64_t row_id, TxnId reader,
                                 std::uint64_t snapshot) const;
  Version& writable_version(Table& t, std::uint64_t row_id, TxnId txn, const Txn& tx);
  std::vector<Cell> resolve(TxnId txn, Txn& tx, const Table& t, const std::vector<Param>& values,
                            const Version* prev);
  Fid sum_rows(TxnId txn, const std::vector<Row>& rows, std::size_t column);
  void abort_locked(TxnId txn, bool notify_privacy);
  void hit(CrashSite site);
  template <class F>
  auto guarded(TxnId txn, F&& f) -> decltype(f());
  void write_catalog();
  void apply_committed(const WriteOp& op, TxnId txn);
  void record(ProtocolEvent::Kind kind, TxnId txn) { events_.push_back({kind, txn}); }

  mutable std::recursive_mutex mu_;
  Vfs& disk_;
  ProxyClient& proxy_;
  DbConfig cfg_;
  AdversaryTrace* trace_;
  std::function<void(CrashSite)> hook_;
  FramedLog wal_;
  std::vector<Table> tables_;
  std::unordered_map<TxnId, Txn> txns_;
  TxnId next_txn_ = 1;
  std::uint64_t last_commit_ts_ = 0;
  std::vector<ProtocolEvent> events_;
};

}  // namespace fidstore
