#include "fidstore/integrity_db.hpp"

#include <algorithm>
#include <set>

#include "fidstore/trace.hpp"
#include "json.hpp"

namespace fidstore {

namespace {

constexpr const char* kDbLog = "db.wal";
constexpr const char* kCatalog = "catalog.json";

enum class DbRec : std::uint8_t { Insert = 1, Update = 2, Delete = 3, Commit = 4, Vacuum = 5 };

void put_cells(ByteWriter& w, const std::vector<Cell>& cells) {
  w.u32(static_cast<std::uint32_t>(cells.size()));
  for (const auto& c : cells) {
    w.u8(static_cast<std::uint8_t>(c.index()));
    if (auto* i = std::get_if<std::int64_t>(&c))
      w.i64(*i);
    else if (auto* b = std::get_if<Bytes>(&c))
      w.blob(*b);
    else
      w.u64(std::get<Fid>(c).raw);
  }
}

std::vector<Cell> get_cells(ByteReader& r) {
  const auto n = r.u32();
  std::vector<Cell> out;
  for (std::uint32_t i = 0; i < n; ++i) {
    switch (r.u8()) {
      case 0: out.emplace_back(r.i64()); break;
      case 1: out.emplace_back(r.blob()); break;
      case 2: out.emplace_back(Fid{r.u64()}); break;
      default: fail(Errc::CorruptLog, "bad cell tag");
    }
  }
  return out;
}

ColumnType parse_column_type(const std::string& s) {
  for (auto t : {ColumnType::PlainInt, ColumnType::PlainBytes, ColumnType::SensitiveInt,
                 ColumnType::SensitiveBytes})
    if (column_type_name(t) == s) return t;
  fail(Errc::CorruptLog, "unknown column type " + s);
}

}  // namespace

std::string_view column_type_name(ColumnType t) noexcept {
  switch (t) {
    case ColumnType::PlainInt: return "PlainInt";
    case ColumnType::PlainBytes: return "PlainBytes";
    case ColumnType::SensitiveInt: return "SensitiveInt";
    case ColumnType::SensitiveBytes: return "SensitiveBytes";
  }
  return "Unknown";
}

std::string_view crash_site_name(CrashSite s) noexcept {
  switch (s) {
    case CrashSite::BeforePrivacyFlush: return "BeforePrivacyFlush";
    case CrashSite::AfterPrivacyFlushBeforeDbCommit: return "AfterPrivacyFlushBeforeDbCommit";
    case CrashSite::AfterDbCommit: return "AfterDbCommit";
    case CrashSite::DuringVacuum: return "DuringVacuum";
    case CrashSite::DuringOrphanGc: return "DuringOrphanGc";
  }
  return "Unknown";
}

IntegrityDb::IntegrityDb(Vfs& disk, ProxyClient& proxy, DbConfig cfg, AdversaryTrace* trace)
    : disk_(disk), proxy_(proxy), cfg_(cfg), trace_(trace), wal_(disk, kDbLog) {
  recover();
}

// ------------------------------------------------------------ helpers

IntegrityDb::Table& IntegrityDb::table_ref(std::uint32_t table) {
  if (table >= tables_.size()) fail(Errc::UnknownTable, "table " + std::to_string(table));
  return tables_[table];
}

const IntegrityDb::Table& IntegrityDb::table_ref(std::uint32_t table) const {
  if (table >= tables_.size()) fail(Errc::UnknownTable, "table " + std::to_string(table));
  return tables_[table];
}

IntegrityDb::Txn& IntegrityDb::active(TxnId txn) {
  auto it = txns_.find(txn);
  if (it == txns_.end() || it->second.state != TxnState::Active)
    fail(Errc::TxnNotActive, "txn " + std::to_string(txn));
  return it->second;
}

bool IntegrityDb::committed_by(TxnId writer, std::uint64_t snapshot) const {
  auto it = txns_.find(writer);
  return it != txns_.end() && it->second.state == TxnState::Committed &&
         it->second.commit_ts <= snapshot;
}

bool IntegrityDb::visible(const Version& v, TxnId reader, std::uint64_t snapshot) const {
  if (v.begin != reader && !committed_by(v.begin, snapshot)) return false;
  if (v.end == 0) return true;
  if (v.end == reader) return false;
  return !committed_by(v.end, snapshot);
}

const IntegrityDb::Version* IntegrityDb::visible_version(const Table& t, std::uint64_t row_id,
                                                         TxnId reader, std::uint64_t snapshot) const {
  auto it = t.rows.find(row_id);
  if (it == t.rows.end()) return nullptr;
  for (auto v = it->second.rbegin(); v != it->second.rend(); ++v)
    if (visible(*v, reader, snapshot)) return &*v;
  return nullptr;
}

IntegrityDb::Version& IntegrityDb::writable_version(Table& t, std::uint64_t row_id, TxnId txn,
                                                    const Txn& tx) {
  auto it = t.rows.find(row_id);
  if (it == t.rows.end() || it->second.empty())
    fail(Errc::RowNotVisible, "row " + std::to_string(row_id));
  Version& newest = it->second.back();
  if (visible(newest, txn, tx.snapshot)) {
    if (newest.end != 0) fail(Errc::WriteConflict, "row " + std::to_string(row_id));
    return newest;
  }
  const bool mine = newest.begin == txn || committed_by(newest.begin, tx.snapshot);
  if (mine && (newest.end == txn || committed_by(newest.end, tx.snapshot)))
    fail(Errc::RowNotVisible, "row " + std::to_string(row_id));
  if (!visible_version(t, row_id, txn, tx.snapshot) && !mine)
    fail(Errc::RowNotVisible, "row " + std::to_string(row_id));
  fail(Errc::WriteConflict, "row " + std::to_string(row_id));
}

void IntegrityDb::hit(CrashSite site) {
  if (hook_) hook_(site);
}

template <class F>
auto IntegrityDb::guarded(TxnId txn, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == Errc::PrivacyZoneUnavailable) {
      on_privacy_lost();
    } else if (txn != 0 && e.code() != Errc::TxnNotActive) {
      auto it = txns_.find(txn);
      if (it != txns_.end() && it->second.state == TxnState::Active &&
          (e.code() == Errc::DivideByZero || e.code() == Errc::Overflow ||
           e.code() == Errc::TypeMismatch || e.code() == Errc::NotLive))
        abort_locked(txn, true);
    }
    throw;
  }
}

std::vector<Cell> IntegrityDb::resolve(TxnId txn, Txn& tx, const Table& t,
                                       const std::vector<Param>& values, const Version* prev) {
  if (values.size() != t.schema.size())
    fail(Errc::SchemaMismatch, "expected " + std::to_string(t.schema.size()) + " values");
  std::vector<Cell> cells(values.size());
  std::vector<ClientEnvelope> envs;
  std::vector<std::size_t> env_cols;
  std::vector<Fid> temps;
  std::vector<std::size_t> temp_cols;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto type = t.schema[i].type;
    const Param& v = values[i];
    if (type == ColumnType::PlainInt) {
      auto* x = std::get_if<std::int64_t>(&v);
      if (!x) fail(Errc::SchemaMismatch, t.schema[i].name + " takes a plain int");
      cells[i] = *x;
    } else if (type == ColumnType::PlainBytes) {
      auto* x = std::get_if<Bytes>(&v);
      if (!x) fail(Errc::SchemaMismatch, t.schema[i].name + " takes plain bytes");
      cells[i] = *x;
    } else if (auto* env = std::get_if<ClientEnvelope>(&v)) {
      const std::size_t want = type == ColumnType::SensitiveInt ? kScalarBytes : cfg_.pad_width;
      if ((type == ColumnType::SensitiveInt || cfg_.pad_sensitive) && env->ciphertext.size() != want)
        fail(Errc::SchemaMismatch, t.schema[i].name + " expects a " + std::to_string(want) + "-byte value");
      envs.push_back(*env);
      env_cols.push_back(i);
    } else if (auto* fid = std::get_if<Fid>(&v)) {
      const auto part = decode_fid(cfg_.fid, *fid).partition;
      if (part == t.partition) {
        if (!prev || prev->cells[i] != Cell{*fid})
          fail(Errc::SchemaMismatch, t.schema[i].name + ": permanent FID is not the row's own");
        cells[i] = *fid;
      } else {
        temps.push_back(*fid);
        temp_cols.push_back(i);
      }
    } else {
      fail(Errc::SchemaMismatch, t.schema[i].name + " is sensitive");
    }
  }
  if (envs.empty() && temps.empty()) return cells;
  tx.used_privacy = true;
  if (!envs.empty()) {
    const auto fids = proxy_.ingest(txn, envs);
    for (std::size_t k = 0; k < fids.size(); ++k) {
      temps.push_back(fids[k]);
      temp_cols.push_back(env_cols[k]);
    }
  }
  tx.privacy_mutations = true;
  const auto perm = proxy_.promote(txn, temps, t.partition);
  for (std::size_t k = 0; k < perm.size(); ++k) cells[temp_cols[k]] = perm[k];
  return cells;
}

// ------------------------------------------------------------ catalog

void IntegrityDb::write_catalog() {
  nlohmann::ordered_json doc;
  doc["pad_width"] = cfg_.pad_width;
  doc["pad_sensitive"] = cfg_.pad_sensitive;
  doc["tables"] = nlohmann::ordered_json::array();
  for (const auto& t : tables_) {
    nlohmann::ordered_json cols = nlohmann::ordered_json::array();
    for (const auto& c : t.schema)
      cols.push_back({{"name", c.name}, {"type", std::string(column_type_name(c.type))}});
    doc["tables"].push_back({{"name", t.name}, {"partition", t.partition}, {"columns", cols}});
  }
  const std::string text = doc.dump(2);
  const std::string tmp = std::string(kCatalog) + ".tmp";
  disk_.write(tmp, ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  disk_.sync(tmp);
  disk_.rename(tmp, kCatalog);
}

std::uint32_t IntegrityDb::create_table(const std::string& name, Schema schema) {
  std::lock_guard lock(mu_);
  if (table_id(name)) fail(Errc::InvalidArgument, "table exists: " + name);
  if (schema.empty()) fail(Errc::SchemaMismatch, "table without columns");
  const auto part = guarded(0, [&] {
    return proxy_.create_partition(PartitionKind::Permanent, ValueLayout::varlen());
  });
  Table t;
  t.name = name;
  t.schema = std::move(schema);
  t.partition = part;
  tables_.push_back(std::move(t));
  write_catalog();
  return static_cast<std::uint32_t>(tables_.size() - 1);
}

std::optional<std::uint32_t> IntegrityDb::table_id(const std::string& name) const {
  std::lock_guard lock(mu_);
  for (std::size_t i = 0; i < tables_.size(); ++i)
    if (tables_[i].name == name) return static_cast<std::uint32_t>(i);
  return std::nullopt;
}

const Schema& IntegrityDb::schema(std::uint32_t table) const {
  std::lock_guard lock(mu_);
  return table_ref(table).schema;
}

std::uint32_t IntegrityDb::partition(std::uint32_t table) const {
  std::lock_guard lock(mu_);
  return table_ref(table).partition;
}

std::size_t IntegrityDb::table_count() const {
  std::lock_guard lock(mu_);
  return tables_.size();
}

// ------------------------------------------------------------ transactions

TxnId IntegrityDb::begin() {
  std::lock_guard lock(mu_);
  const TxnId id = next_txn_++;
  Txn tx;
  tx.snapshot = last_commit_ts_;
  txns_.emplace(id, std::move(tx));
  return id;
}

std::uint64_t IntegrityDb::insert_row(TxnId txn, std::uint32_t table, const std::vector<Param>& values) {
  std::lock_guard lock(mu_);
  Txn& tx = active(txn);
  Table& t = table_ref(table);
  auto cells = guarded(txn, [&] { return resolve(txn, tx, t, values, nullptr); });
  const auto row_id = t.next_row_id++;
  t.rows[row_id].push_back(Version{txn, 0, cells});
  tx.writes.push_back(WriteOp{OpKind::Insert, table, row_id, std::move(cells)});
  return row_id;
}

void IntegrityDb::update_row(TxnId txn, std::uint32_t table, std::uint64_t row_id,
                             const std::vector<Param>& values) {
  std::lock_guard lock(mu_);
  Txn& tx = active(txn);
  Table& t = table_ref(table);
  const Version prev = writable_version(t, row_id, txn, tx);
  auto cells = guarded(txn, [&] { return resolve(txn, tx, t, values, &prev); });
  auto& chain = t.rows[row_id];
  chain.back().end = txn;
  chain.push_back(Version{txn, 0, cells});
  tx.writes.push_back(WriteOp{OpKind::Update, table, row_id, std::move(cells)});
}

void IntegrityDb::delete_row(TxnId txn, std::uint32_t table, std::uint64_t row_id) {
  std::lock_guard lock(mu_);
  Txn& tx = active(txn);
  Table& t = table_ref(table);
  writable_version(t, row_id, txn, tx).end = txn;
  tx.writes.push_back(WriteOp{OpKind::Delete, table, row_id, {}});
}

std::optional<Row> IntegrityDb::get_row(TxnId txn, std::uint32_t table, std::uint64_t row_id) {
  std::lock_guard lock(mu_);
  const Txn& tx = active(txn);
  const Version* v = visible_version(table_ref(table), row_id, txn, tx.snapshot);
  if (trace_) trace_->result_size(v ? 1 : 0);
  if (!v) return std::nullopt;
  return Row{row_id, v->cells};
}

std::vector<Row> IntegrityDb::scan(TxnId txn, std::uint32_t table, std::uint64_t lo, std::uint64_t hi) {
  std::lock_guard lock(mu_);
  const Txn& tx = active(txn);
  const Table& t = table_ref(table);
  std::vector<Row> out;
  for (auto it = t.rows.lower_bound(lo); it != t.rows.end() && it->first <= hi; ++it)
    if (const Version* v = visible_version(t, it->first, txn, tx.snapshot))
      out.push_back(Row{it->first, v->cells});
  if (trace_) trace_->result_size(out.size());
  return out;
}

std::vector<Row> IntegrityDb::select_where(TxnId txn, std::uint32_t table, std::size_t column,
                                           OpCode cmp, const ClientEnvelope& constant) {
  std::lock_guard lock(mu_);
  Txn& tx = active(txn);
  const Table& t = table_ref(table);
  if (column >= t.schema.size() || !is_sensitive(t.schema[column].type))
    fail(Errc::SchemaMismatch, "predicate column must be sensitive");
  if (!is_comparison(cmp)) fail(Errc::InvalidArgument, "predicate needs a comparison");
  std::vector<Row> rows;
  for (const auto& [id, chain] : t.rows)
    if (const Version* v = visible_version(t, id, txn, tx.snapshot)) rows.push_back(Row{id, v->cells});
  const auto type = t.schema[column].type == ColumnType::SensitiveInt ? ValueType::Int64 : ValueType::Bytes;
  tx.used_privacy = true;
  return guarded(txn, [&] {
    const Fid c = proxy_.ingest(txn, constant);
    std::vector<OperatorRequest> reqs;
    reqs.reserve(rows.size());
    for (const auto& r : rows) reqs.push_back({cmp, type, {std::get<Fid>(r.cells[column]), c}, false});
    const auto outcomes = proxy_.exec_batch(txn, std::move(reqs));
    std::vector<Row> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!outcomes[i].ok()) fail(outcomes[i].error, "predicate evaluation");
      if (outcomes[i].response->value) out.push_back(std::move(rows[i]));
    }
    if (trace_) trace_->result_size(out.size());
    return out;
  });
}

Fid IntegrityDb::sum(TxnId txn, std::uint32_t table, std::size_t column,
                     std::optional<std::pair<OpCode, ClientEnvelope>> predicate) {
  std::lock_guard lock(mu_);
  const Table& t = table_ref(table);
  if (column >= t.schema.size() || t.schema[column].type != ColumnType::SensitiveInt)
    fail(Errc::TypeMismatch, "SUM needs a sensitive int column");
  std::vector<Row> rows;
  if (predicate) {
    rows = select_where(txn, table, column,
                        predicate->first, predicate->second);
  } else {
    const Txn& tx = active(txn);
    for (const auto& [id, chain] : t.rows)
      if (const Version* v = visible_version(t, id, txn, tx.snapshot)) rows.push_back(Row{id, v->cells});
  }
  return sum_rows(txn, rows, column);
}

Fid IntegrityDb::sum_range(TxnId txn, std::uint32_t table, std::size_t column, std::uint64_t lo,
                           std::uint64_t hi) {
  std::lock_guard lock(mu_);
  const Table& t = table_ref(table);
  if (column >= t.schema.size() || t.schema[column].type != ColumnType::SensitiveInt)
    fail(Errc::TypeMismatch, "SUM needs a sensitive int column");
  return sum_rows(txn, scan(txn, table, lo, hi), column);
}

Fid IntegrityDb::sum_rows(TxnId txn, const std::vector<Row>& rows, std::size_t column) {
  Txn& tx = active(txn);
  tx.used_privacy = true;
  std::vector<OperatorRequest> reqs;
  if (rows.size() < 2) {
    OperatorRequest r{OpCode::SumAgg, ValueType::Int64, {}, false};
    for (const auto& row : rows) r.operands.push_back(std::get<Fid>(row.cells[column]));
    reqs.push_back(std::move(r));
  } else {
    reqs.push_back({OpCode::Add, ValueType::Int64,
                    {std::get<Fid>(rows[0].cells[column]), std::get<Fid>(rows[1].cells[column])}, false});
    for (std::size_t i = 2; i < rows.size(); ++i)
      reqs.push_back({OpCode::Add, ValueType::Int64, {Fid{}, std::get<Fid>(rows[i].cells[column])}, true});
  }
  return guarded(txn, [&] {
    const auto outcomes = proxy_.exec_batch(txn, std::move(reqs));
    const OpOutcome& last = outcomes.back();
    if (!last.ok()) fail(last.error, "SUM");
    return last.response->fid;
  });
}

Fid IntegrityDb::ingest(TxnId txn, const ClientEnvelope& constant) {
  std::lock_guard lock(mu_);
  Txn& tx = active(txn);
  tx.used_privacy = true;
  return guarded(txn, [&] { return proxy_.ingest(txn, constant); });
}

OperatorResponse IntegrityDb::exec(TxnId txn, const OperatorRequest& req) {
  std::lock_guard lock(mu_);
  Txn& tx = active(txn);
  tx.used_privacy = true;
  return guarded(txn, [&] { return proxy_.exec(txn, req); });
}

std::vector<ClientEnvelope> IntegrityDb::reveal(TxnId txn, const std::vector<Fid>& fids) {
  std::lock_guard lock(mu_);
  Txn& tx = active(txn);
  tx.used_privacy = true;
  return guarded(txn, [&] { return proxy_.reveal(txn, fids); });
}

void IntegrityDb::prefetch(std::uint32_t table) {
  std::lock_guard lock(mu_);
  const auto part = table_ref(table).partition;
  guarded(0, [&] { proxy_.prefetch(part); });
}

void IntegrityDb::commit(TxnId txn) {
  std::lock_guard lock(mu_);
  Txn& tx = active(txn);
  if (tx.writes.empty()) {
    tx.state = TxnState::Committed;
    tx.commit_ts = last_commit_ts_;
    record(ProtocolEvent::Kind::Committed, txn);
    if (tx.used_privacy) {
      try {
        proxy_.end_query(txn);
      } catch (const Error&) {
      }
    }
    return;
  }
  tx.state = TxnState::Preparing;
  record(ProtocolEvent::Kind::Prepare, txn);
  std::uint64_t ts = 0;
  try {
    for (const auto& w : tx.writes) {
      Bytes payload;
      ByteWriter bw(payload);
      bw.u64(txn);
      bw.u32(w.table);
      bw.u64(w.row_id);
      if (w.kind != OpKind::Delete) put_cells(bw, w.cells);
      const auto kind = w.kind == OpKind::Insert ? DbRec::Insert
                        : w.kind == OpKind::Update ? DbRec::Update
                                                   : DbRec::Delete;
      wal_.append(static_cast<std::uint8_t>(kind), payload);
    }
    hit(CrashSite::BeforePrivacyFlush);
    if (tx.privacy_mutations) {
      proxy_.flush_log(txn);
      record(ProtocolEvent::Kind::PrivacyFlushed, txn);
    }
    hit(CrashSite::AfterPrivacyFlushBeforeDbCommit);
    ts = last_commit_ts_ + 1;
    Bytes payload;
    ByteWriter bw(payload);
    bw.u64(txn);
    bw.u64(ts);
    wal_.append(static_cast<std::uint8_t>(DbRec::Commit), payload);
    wal_.flush();
    record(ProtocolEvent::Kind::DbCommitDurable, txn);
  } catch (const Error& e) {
    if (e.code() == Errc::PrivacyZoneUnavailable)
      on_privacy_lost();
    else
      abort_locked(txn, true);
    throw;
  }
  last_commit_ts_ = ts;
  tx.commit_ts = ts;
  hit(CrashSite::AfterDbCommit);
  tx.state = TxnState::Committed;
  record(ProtocolEvent::Kind::Committed, txn);
  if (tx.used_privacy) {
    try {
      proxy_.end_query(txn);
    } catch (const Error&) {
    }
  }
}

void IntegrityDb::abort(TxnId txn) {
  std::lock_guard lock(mu_);
  auto it = txns_.find(txn);
  if (it == txns_.end() ||
      (it->second.state != TxnState::Active && it->second.state != TxnState::Preparing))
    fail(Errc::TxnNotActive, "txn " + std::to_string(txn));
  abort_locked(txn, true);
}

void IntegrityDb::abort_locked(TxnId txn, bool notify_privacy) {
  Txn& tx = txns_.at(txn);
  std::set<std::pair<std::uint32_t, std::uint64_t>> touched;
  for (const auto& w : tx.writes) touched.emplace(w.table, w.row_id);
  for (const auto& [table, row_id] : touched) {
    Table& t = tables_[table];
    auto it = t.rows.find(row_id);
    if (it == t.rows.end()) continue;
    auto& chain = it->second;
    std::vector<Fid> dropped;
    for (const auto& v : chain)
      if (v.begin == txn)
        for (const auto& c : v.cells)
          if (auto* f = std::get_if<Fid>(&c)) dropped.push_back(*f);
    std::erase_if(chain, [&](const Version& v) { return v.begin == txn; });
    std::set<Fid> kept;
    for (auto& v : chain) {
      if (v.end == txn) v.end = 0;
      for (const auto& c : v.cells)
        if (auto* f = std::get_if<Fid>(&c)) kept.insert(*f);
    }
    if (notify_privacy)
      for (auto f : dropped)
        if (!kept.count(f)) t.pending.push_back(f);
    if (chain.empty()) t.rows.erase(it);
  }
  tx.state = TxnState::Aborted;
  tx.writes.clear();
  record(ProtocolEvent::Kind::Aborted, txn);
  if (notify_privacy && tx.used_privacy) {
    try {
      proxy_.end_query(txn);
    } catch (const Error&) {
    }
  }
}

void IntegrityDb::on_privacy_lost() {
  std::lock_guard lock(mu_);
  for (auto& [id, tx] : txns_)
    if (tx.state == TxnState::Active || tx.state == TxnState::Preparing) abort_locked(id, false);
  // A restarted store may hand these offsets out again; orphan_gc reclaims survivors.
  for (auto& t : tables_) t.pending.clear();
}

// ------------------------------------------------------------ maintenance

std::uint64_t IntegrityDb::vacuum(std::uint32_t table) {
  std::lock_guard lock(mu_);
  Table& t = table_ref(table);
  std::uint64_t horizon = last_commit_ts_;
  for (const auto& [id, tx] : txns_)
    if (tx.state == TxnState::Active || tx.state == TxnState::Preparing)
      horizon = std::min(horizon, tx.snapshot);

  Bytes removed;
  ByteWriter rw(removed);
  std::uint32_t removed_count = 0;
  std::vector<Fid> fids = t.pending;
  for (const auto& [row_id, chain] : t.rows) {
    std::set<Fid> dead, kept;
    bool any = false;
    for (const auto& v : chain) {
      const bool is_dead = v.end != 0 && committed_by(v.end, horizon);
      for (const auto& c : v.cells)
        if (auto* f = std::get_if<Fid>(&c)) (is_dead ? dead : kept).insert(*f);
      if (is_dead) {
        rw.u64(row_id);
        rw.u64(v.begin);
        rw.u64(v.end);
        ++removed_count;
        any = true;
      }
    }
    if (!any) continue;
    for (auto f : dead)
      if (!kept.count(f)) fids.push_back(f);
  }
  if (removed_count == 0 && fids.empty()) return 0;

  if (removed_count > 0) {
    Bytes payload;
    ByteWriter w(payload);
    w.u32(table);
    w.u32(removed_count);
    w.raw(removed);
    wal_.append(static_cast<std::uint8_t>(DbRec::Vacuum), payload);
    wal_.flush();
    for (auto it = t.rows.begin(); it != t.rows.end();) {
      std::erase_if(it->second, [&](const Version& v) { return v.end != 0 && committed_by(v.end, horizon); });
      it = it->second.empty() ? t.rows.erase(it) : std::next(it);
    }
  }
  t.pending.clear();
  hit(CrashSite::DuringVacuum);
  return guarded(0, [&] {
    const auto n = proxy_.delete_batch(fids);
    proxy_.flush_log(0);
    return n;
  });
}

std::uint64_t IntegrityDb::vacuum_all() {
  std::lock_guard lock(mu_);
  std::uint64_t n = 0;
  for (std::uint32_t i = 0; i < tables_.size(); ++i) n += vacuum(i);
  return n;
}

std::uint64_t IntegrityDb::orphan_gc() {
  std::lock_guard lock(mu_);
  if (active_txns() != 0) fail(Errc::NotQuiescent, "orphan_gc needs a quiescent database");
  const auto refs = referenced_fids();
  const std::set<Fid> referenced(refs.begin(), refs.end());
  std::set<std::uint64_t> parts;
  for (const auto& t : tables_) parts.insert(t.partition);
  return guarded(0, [&] {
    std::vector<Fid> orphans;
    for (auto f : proxy_.list_live())
      if (!referenced.count(f) && parts.count(decode_fid(cfg_.fid, f).partition))
        orphans.push_back(f);
    for (auto& t : tables_) t.pending.clear();
    hit(CrashSite::DuringOrphanGc);
    if (orphans.empty()) return std::uint64_t{0};
    const auto n = proxy_.delete_batch(orphans);
    proxy_.flush_log(0);
    return n;
  });
}

// ------------------------------------------------------------ recovery

void IntegrityDb::crash() {
  std::lock_guard lock(mu_);
  tables_.clear();
  txns_.clear();
  events_.clear();
  wal_.close();
  next_txn_ = 1;
  last_commit_ts_ = 0;
}

void IntegrityDb::apply_committed(const WriteOp& op, TxnId txn) {
  Table& t = table_ref(op.table);
  switch (op.kind) {
    case OpKind::Insert:
      t.rows[op.row_id].push_back(Version{txn, 0, op.cells});
      t.next_row_id = std::max(t.next_row_id, op.row_id + 1);
      break;
    case OpKind::Update: {
      auto& chain = t.rows[op.row_id];
      if (chain.empty()) fail(Errc::CorruptLog, "update of a missing row");
      chain.back().end = txn;
      chain.push_back(Version{txn, 0, op.cells});
      break;
    }
    case OpKind::Delete: {
      auto it = t.rows.find(op.row_id);
      if (it == t.rows.end() || it->second.empty()) fail(Errc::CorruptLog, "delete of a missing row");
      it->second.back().end = txn;
      break;
    }
  }
}

DbRecoveryReport IntegrityDb::recover() {
  std::lock_guard lock(mu_);
  crash();
  DbRecoveryReport report;

  if (auto text = disk_.read(kCatalog)) {
    const auto doc = nlohmann::json::parse(text->begin(), text->end(), nullptr, false);
    if (doc.is_discarded()) fail(Errc::CorruptLog, "catalog.json is not valid JSON");
    for (const auto& jt : doc.at("tables")) {
      Table t;
      t.name = jt.at("name").get<std::string>();
      t.partition = jt.at("partition").get<std::uint32_t>();
      for (const auto& jc : jt.at("columns"))
        t.schema.push_back(Column{jc.at("name").get<std::string>(),
                                  parse_column_type(jc.at("type").get<std::string>())});
      tables_.push_back(std::move(t));
    }
  }

  const LogScan scan = wal_.open();
  report.records_scanned = scan.records.size();
  std::unordered_map<TxnId, std::uint64_t> commits;
  TxnId max_txn = 0;
  for (const auto& rec : scan.records) {
    ByteReader r(rec.payload, Errc::CorruptLog);
    if (rec.kind == static_cast<std::uint8_t>(DbRec::Vacuum)) continue;
    const TxnId txn = r.u64();
    max_txn = std::max(max_txn, txn);
    if (rec.kind == static_cast<std::uint8_t>(DbRec::Commit)) commits[txn] = r.u64();
  }
  std::set<TxnId> discarded;
  for (const auto& rec : scan.records) {
    ByteReader r(rec.payload, Errc::CorruptLog);
    const auto kind = static_cast<DbRec>(rec.kind);
    if (kind == DbRec::Commit) continue;
    if (kind == DbRec::Vacuum) {
      Table& t = table_ref(r.u32());
      const auto n = r.u32();
      for (std::uint32_t i = 0; i < n; ++i) {
        const auto row_id = r.u64();
        const auto b = r.u64();
        const auto e = r.u64();
        auto it = t.rows.find(row_id);
        if (it == t.rows.end()) continue;
        std::erase_if(it->second, [&](const Version& v) { return v.begin == b && v.end == e; });
        if (it->second.empty()) t.rows.erase(it);
      }
      continue;
    }
    if (kind != DbRec::Insert && kind != DbRec::Update && kind != DbRec::Delete)
      fail(Errc::CorruptLog, "unknown db record kind");
    WriteOp op;
    const TxnId txn = r.u64();
    op.table = r.u32();
    op.row_id = r.u64();
    op.kind = kind == DbRec::Insert ? OpKind::Insert : kind == DbRec::Update ? OpKind::Update : OpKind::Delete;
    if (op.kind != OpKind::Delete) op.cells = get_cells(r);
    if (!commits.count(txn)) {
      discarded.insert(txn);
      continue;
    }
    apply_committed(op, txn);
  }
  for (const auto& [txn, ts] : commits) {
    Txn tx;
    tx.state = TxnState::Committed;
    tx.commit_ts = ts;
    txns_.emplace(txn, std::move(tx));
    last_commit_ts_ = std::max(last_commit_ts_, ts);
  }
  next_txn_ = max_txn + 1;
  report.committed_txns = commits.size();
  report.discarded_txns = discarded.size();
  try {
    proxy_.reset_temporaries();
  } catch (const Error&) {
  }
  return report;
}

// ------------------------------------------------------------ inspection

TxnState IntegrityDb::state(TxnId txn) const {
  std::lock_guard lock(mu_);
  auto it = txns_.find(txn);
  if (it == txns_.end()) return TxnState::Aborted;
  return it->second.state;
}

std::size_t IntegrityDb::active_txns() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& [id, tx] : txns_)
    if (tx.state == TxnState::Active || tx.state == TxnState::Preparing) ++n;
  return n;
}

std::vector<ProtocolEvent> IntegrityDb::events() const {
  std::lock_guard lock(mu_);
  return events_;
}

void IntegrityDb::clear_events() {
  std::lock_guard lock(mu_);
  events_.clear();
}

std::vector<Fid> IntegrityDb::referenced_fids() const {
  std::lock_guard lock(mu_);
  std::vector<Fid> out;
  for (const auto& t : tables_)
    for (const auto& [id, chain] : t.rows)
      for (const auto& v : chain)
        for (const auto& c : v.cells)
          if (auto* f = std::get_if<Fid>(&c)) out.push_back(*f);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<IntegrityDb::VisibleRef> IntegrityDb::visible_refs() const {
  std::lock_guard lock(mu_);
  std::vector<VisibleRef> out;
  for (std::uint32_t ti = 0; ti < tables_.size(); ++ti) {
    const Table& t = tables_[ti];
    for (const auto& [id, chain] : t.rows) {
      const Version* v = visible_version(t, id, 0, last_commit_ts_);
      if (!v) continue;
      for (std::size_t c = 0; c < v->cells.size(); ++c)
        if (auto* f = std::get_if<Fid>(&v->cells[c])) out.push_back({ti, id, c, *f});
    }
  }
  return out;
}

std::map<std::uint64_t, std::vector<Cell>> IntegrityDb::visible_rows(std::uint32_t table) const {
  std::lock_guard lock(mu_);
  std::map<std::uint64_t, std::vector<Cell>> out;
  const Table& t = table_ref(table);
  for (const auto& [id, chain] : t.rows)
    if (const Version* v = visible_version(t, id, 0, last_commit_ts_)) out.emplace(id, v->cells);
  return out;
}

std::uint64_t IntegrityDb::pending_reclaim() const {
  std::lock_guard lock(mu_);
  std::uint64_t n = 0;
  for (const auto& t : tables_) n += t.pending.size();
  return n;
}

std::uint64_t IntegrityDb::version_count() const {
  std::lock_guard lock(mu_);
  std::uint64_t n = 0;
  for (const auto& t : tables_)
    for (const auto& [id, chain] : t.rows) n += chain.size();
  return n;
}

}  // namespace fidstore
