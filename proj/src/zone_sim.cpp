#include "fidstore/zone_sim.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"

namespace fidstore {

namespace {

Param to_param(const Cell& c) {
  if (auto* i = std::get_if<std::int64_t>(&c)) return *i;
  if (auto* b = std::get_if<Bytes>(&c)) return *b;
  return std::get<Fid>(c);
}

Bytes pad_column(std::uint64_t key) {
  std::string s = "pad-" + std::to_string(key) + "-";
  while (s.size() < 60) s.push_back(static_cast<char>('a' + s.size() % 26));
  return to_bytes(s);
}

nlohmann::ordered_json invariant_json(const InvariantReport& r) {
  return {{"holds", r.holds}, {"checked", r.checked}, {"violations", r.violations}, {"orphans", r.orphans}};
}

nlohmann::ordered_json recovery_json(const RecoveryReport& r) {
  return {{"privacy_replayed", r.privacy_replayed},
          {"integrity_replayed", r.integrity_replayed},
          {"privacy_records", r.privacy_records},
          {"db_records", r.db.records_scanned},
          {"db_committed_txns", r.db.committed_txns},
          {"db_discarded_txns", r.db.discarded_txns},
          {"integrity_paused", r.integrity_paused},
          {"invariant", invariant_json(r.invariant)}};
}

}  // namespace

std::string_view crash_kind_name(CrashKind k) noexcept {
  switch (k) {
    case CrashKind::BeforePrivacyFlush: return "BeforePrivacyFlush";
    case CrashKind::AfterPrivacyFlushBeforeDbCommit: return "AfterPrivacyFlushBeforeDbCommit";
    case CrashKind::AfterDbCommit: return "AfterDbCommit";
    case CrashKind::DuringVacuum: return "DuringVacuum";
    case CrashKind::DuringOrphanGc: return "DuringOrphanGc";
    case CrashKind::RandomByte: return "RandomByte";
  }
  return "Unknown";
}

std::string_view crash_target_name(CrashTarget t) noexcept {
  switch (t) {
    case CrashTarget::PrivacyZone: return "PrivacyZone";
    case CrashTarget::IntegrityZone: return "IntegrityZone";
    case CrashTarget::Both: return "Both";
  }
  return "Unknown";
}

CrashPoint CrashPoint::standard(CrashKind kind, std::uint64_t occurrence, std::uint64_t byte_budget) {
  CrashPoint p;
  p.kind = kind;
  p.target = kind == CrashKind::AfterPrivacyFlushBeforeDbCommit ? CrashTarget::IntegrityZone : CrashTarget::Both;
  p.occurrence = occurrence;
  p.byte_budget = byte_budget;
  return p;
}

std::string RunReport::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["mode"] = std::string(mode_name(spec.mode));
  j["distribution"] = std::string(distribution_name(spec.distribution));
  j["theta"] = spec.theta;
  j["tables"] = spec.tables;
  j["rows_per_table"] = spec.rows_per_table;
  j["threads_simulated"] = spec.threads_simulated;
  j["batch_size"] = spec.batch_size;
  j["cache_fraction"] = spec.cache_fraction;
  j["statements"] = statements;
  j["txns_committed"] = txns_committed;
  j["txns_aborted"] = txns_aborted;
  j["conflicts"] = conflicts;
  j["errors"] = errors;
  j["reveals"] = reveals;
  j["content_mismatches"] = content_mismatches;
  j["round_trips"] = round_trips;
  j["bytes_sent"] = bytes_sent;
  j["bytes_received"] = bytes_received;
  j["simulated_ns"] = simulated_ns;
  j["cache_hits"] = cache_hits;
  j["cache_misses"] = cache_misses;
  j["hit_rate"] = hit_rate;
  j["crypto_invocations"] = crypto_invocations;
  j["envelope_ops"] = envelope_ops;
  j["vacuumed"] = vacuumed;
  j["orphans_collected"] = orphans_collected;
  j["crash_fired"] = crash_fired;
  j["crash_point"] = crash_point;
  j["orphans_pre_gc"] = orphans_pre_gc;
  j["orphans_post_gc"] = orphans_post_gc;
  if (recovery) j["recovery"] = recovery_json(*recovery);
  j["final_invariant"] = invariant_json(final_invariant);
  j["trace_events"] = trace_events;
  j["trace_digest"] = trace_digest;
  return j.dump();
}

std::string to_json(const RecoveryReport& r) { return recovery_json(r).dump(); }

// ------------------------------------------------------------ topology

ZoneSim::ZoneSim(TopologyConfig cfg)
    : cfg_(std::move(cfg)),
      budget_(std::make_shared<ByteCrashBudget>()),
      privacy_disk_("privacy"),
      integrity_disk_("integrity"),
      channel_(&trace_, cfg_.latency),
      client_(cfg_.client_key) {
  cfg_.db.fid = cfg_.store.fid;
  privacy_disk_.set_trace(&trace_);
  integrity_disk_.set_trace(&trace_);
  privacy_disk_.set_crash_budget(budget_);
  integrity_disk_.set_crash_budget(budget_);
  zone_ = std::make_unique<PrivacyZone>(privacy_disk_, cfg_.store, cfg_.client_key, &trace_);
  connect();
  proxy_ = std::make_unique<ProxyClient>(channel_, &trace_, cfg_.batch_size);
  db_ = std::make_unique<IntegrityDb>(integrity_disk_, *proxy_, cfg_.db, &trace_);
  db_->set_crash_hook([this](CrashSite s) { on_site(s); });
  base_ = read_counters();
}

ZoneSim::~ZoneSim() = default;

void ZoneSim::connect() {
  channel_.connect([this](ByteView req) { return zone_->handle(req); });
}

Schema ZoneSim::sbtest_schema() {
  return {{"id", ColumnType::PlainInt},
          {"k", ColumnType::SensitiveInt},
          {"c", ColumnType::SensitiveBytes},
          {"pad", ColumnType::PlainBytes}};
}

ClientEnvelope ZoneSim::seal_text(const std::string& text) {
  return client_.encrypt_text(text, cfg_.db.pad_sensitive ? cfg_.db.pad_width : 0);
}

std::vector<Param> ZoneSim::row_params(std::uint64_t key, std::int64_t k, const std::string& c) {
  return {static_cast<std::int64_t>(key), client_.encrypt_int(k), seal_text(c), pad_column(key)};
}

std::optional<std::uint64_t> ZoneSim::row_of(std::uint32_t table, std::uint64_t key) const {
  if (table >= keys_.size()) return std::nullopt;
  auto it = keys_[table].find(key);
  if (it == keys_[table].end()) return std::nullopt;
  return it->second;
}

void ZoneSim::load(const WorkloadSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 1);
  for (std::uint32_t t = 0; t < spec.tables; ++t) {
    tables_.push_back(db_->create_table("sbtest" + std::to_string(tables_.size()), sbtest_schema()));
    keys_.emplace_back();
    auto& keys = keys_.back();
    for (std::uint64_t first = 1; first <= spec.rows_per_table; first += 100) {
      const TxnId txn = db_->begin();
      for (std::uint64_t key = first; key < first + 100 && key <= spec.rows_per_table; ++key) {
        const auto k = static_cast<std::int64_t>(rng() % 1000000);
        keys[key] = db_->insert_row(txn, tables_.back(), row_params(key, k, make_c_text(key, rng)));
      }
      db_->commit(txn);
    }
  }
}

// ------------------------------------------------------------ counters

ZoneSim::Counters ZoneSim::read_counters() {
  const auto st = zone_->store().stats();
  return {st.cache_hits, st.cache_misses, zone_->store().crypto_invocations(), zone_->proxy().envelope_ops()};
}

void ZoneSim::bank() {
  const auto now = read_counters();
  auto delta = [](std::uint64_t a, std::uint64_t b) { return a >= b ? a - b : 0; };
  banked_.hits += delta(now.hits, base_.hits);
  banked_.misses += delta(now.misses, base_.misses);
  banked_.crypto += delta(now.crypto, base_.crypto);
  banked_.envelope += delta(now.envelope, base_.envelope);
  base_ = now;
}

void ZoneSim::finish_report(RunReport& rep) {
  bank();
  rep.cache_hits = banked_.hits;
  rep.cache_misses = banked_.misses;
  rep.hit_rate = rep.cache_hits + rep.cache_misses == 0
                     ? 0.0
                     : static_cast<double>(rep.cache_hits) / static_cast<double>(rep.cache_hits + rep.cache_misses);
  rep.crypto_invocations = banked_.crypto;
  rep.envelope_ops = banked_.envelope;
  const auto c = channel_.counters();
  rep.round_trips = c.round_trips;
  rep.bytes_sent = c.bytes_sent;
  rep.bytes_received = c.bytes_received;
  rep.simulated_ns = c.simulated_ns;
  rep.trace_events = trace_.size();
  rep.trace_digest = trace_.digest();
}

// ------------------------------------------------------------ crashes

void ZoneSim::arm(const CrashPoint& point) {
  armed_ = point;
  site_hits_ = 0;
}

void ZoneSim::disarm() {
  armed_.reset();
  budget_->armed = false;
}

void ZoneSim::on_site(CrashSite site) {
  if (!armed_ || armed_->kind == CrashKind::RandomByte) return;
  if (static_cast<int>(site) != static_cast<int>(armed_->kind)) return;
  if (++site_hits_ < armed_->occurrence) return;
  const CrashPoint p = *armed_;
  armed_.reset();
  fired_target_ = p.target;
  if (p.target == CrashTarget::PrivacyZone) {
    crash_now(CrashTarget::PrivacyZone);
    return;
  }
  throw SimulatedCrash{std::string(crash_kind_name(p.kind))};
}

void ZoneSim::crash_now(CrashTarget target) {
  bank();
  budget_->armed = false;
  if (target != CrashTarget::IntegrityZone) {
    zone_->crash();
    privacy_disk_.crash();
    channel_.disconnect();
    privacy_down_ = true;
  }
  if (target != CrashTarget::PrivacyZone) {
    db_->crash();
    integrity_disk_.crash();
    integrity_down_ = true;
  }
}

void ZoneSim::inject_crash(const CrashPoint& point) {
  fired_target_ = point.target;
  crash_now(point.target);
}

RecoveryReport ZoneSim::recover_all() {
  if (!privacy_down_ && !integrity_down_) fail(Errc::NoCrashPending, "no zone is down");
  RecoveryReport r;
  if (privacy_down_) {
    r.privacy_records = zone_->recover();
    r.privacy_replayed = true;
    connect();
    privacy_down_ = false;
    if (!integrity_down_) {
      r.integrity_paused = true;
      db_->on_privacy_lost();
      proxy_->reset_temporaries();
    }
  }
  if (integrity_down_) {
    r.db = db_->recover();
    r.integrity_replayed = true;
    integrity_down_ = false;
  }
  rebuild_keys();
  r.invariant = check_invariant();
  base_ = read_counters();
  return r;
}

void ZoneSim::rebuild_keys() {
  for (std::size_t i = 0; i < tables_.size(); ++i) {
    keys_[i].clear();
    for (const auto& [row, cells] : db_->visible_rows(tables_[i])) {
      const auto key = static_cast<std::uint64_t>(std::get<std::int64_t>(cells[kId]));
      auto& slot = keys_[i][key];
      slot = std::max(slot, row);
    }
  }
}

InvariantReport ZoneSim::check_invariant() {
  InvariantReport r;
  const auto refs = db_->visible_refs();
  std::vector<Fid> fids;
  fids.reserve(refs.size());
  for (const auto& ref : refs) fids.push_back(ref.fid);
  const auto live = proxy_->probe_live(fids);
  std::set<Fid> dangling;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    ++r.checked;
    if (!live[i]) {
      ++r.violations;
      r.dangling.push_back(refs[i].fid);
      dangling.insert(refs[i].fid);
    }
  }

  // Every live c value must still name the row that references it.
  const auto width = cfg_.db.pad_sensitive ? cfg_.db.pad_width : 0;
  for (auto table : tables_) {
    const auto& schema = db_->schema(table);
    if (schema.size() != 4 || schema[kC].type != ColumnType::SensitiveBytes) continue;
    std::vector<std::uint64_t> keys;
    std::vector<Fid> cs;
    for (const auto& [row, cells] : db_->visible_rows(table)) {
      const Fid c = std::get<Fid>(cells[kC]);
      if (dangling.count(c)) continue;
      keys.push_back(static_cast<std::uint64_t>(std::get<std::int64_t>(cells[kId])));
      cs.push_back(c);
    }
    if (cs.empty()) continue;
    const auto envs = proxy_->reveal(0, cs);
    for (std::size_t i = 0; i < envs.size(); ++i) {
      try {
        if (c_text_key(client_.decrypt_text(envs[i], width)) != keys[i]) ++r.violations;
      } catch (const Error&) {
        ++r.violations;
      }
    }
  }

  std::set<std::uint64_t> parts;
  for (auto table : tables_) parts.insert(db_->partition(table));
  const auto referenced = db_->referenced_fids();
  const std::set<Fid> ref_set(referenced.begin(), referenced.end());
  for (auto f : proxy_->list_live())
    if (!ref_set.count(f) && parts.count(decode_fid(cfg_.store.fid, f).partition)) ++r.orphans;
  r.holds = r.violations == 0;
  return r;
}

// ------------------------------------------------------------ statements

void ZoneSim::exec_stmt(Session& s, const Stmt& st, RunReport& rep) {
  if (st.table >= tables_.size()) fail(Errc::UnknownTable, "statement table");
  const std::uint32_t table = tables_[st.table];
  const auto width = cfg_.db.pad_sensitive ? cfg_.db.pad_width : 0;
  auto row_for = [&](std::uint64_t key) -> std::optional<std::uint64_t> {
    auto it = s.moved.find({st.table, key});
    if (it != s.moved.end()) return it->second;
    return row_of(st.table, key);
  };
  auto check_rows = [&](const std::vector<Row>& rows) {
    if (rows.empty()) return;
    std::vector<Fid> cs;
    for (const auto& r : rows) cs.push_back(std::get<Fid>(r.cells[kC]));
    const auto envs = db_->reveal(s.txn, cs);
    rep.reveals += envs.size();
    for (std::size_t i = 0; i < envs.size(); ++i) {
      const auto key = static_cast<std::uint64_t>(std::get<std::int64_t>(rows[i].cells[kId]));
      if (c_text_key(client_.decrypt_text(envs[i], width)) != key) ++rep.content_mismatches;
    }
  };

  switch (st.kind) {
    case StmtKind::PointSelect: {
      const auto row = row_for(st.key);
      if (!row) return;
      if (auto r = db_->get_row(s.txn, table, *row)) check_rows({*r});
      return;
    }
    case StmtKind::RangeScan: {
      const auto lo = row_for(st.key);
      if (!lo) return;
      check_rows(db_->scan(s.txn, table, *lo, *lo + std::max<std::uint64_t>(st.span, 1) - 1));
      return;
    }
    case StmtKind::RangeSum: {
      const auto lo = row_for(st.key);
      if (!lo) return;
      const Fid sum = db_->sum_range(s.txn, table, kK, *lo, *lo + std::max<std::uint64_t>(st.span, 1) - 1);
      const auto env = db_->reveal(s.txn, {sum});
      rep.reveals += 1;
      client_.decrypt_int(env[0]);
      return;
    }
    case StmtKind::UpdateIndex: {
      const auto row = row_for(st.key);
      if (!row) return;
      const auto r = db_->get_row(s.txn, table, *row);
      if (!r) return;
      const Fid delta = db_->ingest(s.txn, client_.encrypt_int(st.value));
      const auto sum = db_->exec(s.txn, {OpCode::Add, ValueType::Int64, {std::get<Fid>(r->cells[kK]), delta}, false});
      db_->update_row(s.txn, table, *row,
                      {to_param(r->cells[kId]), sum.fid, to_param(r->cells[kC]), to_param(r->cells[kPad])});
      return;
    }
    case StmtKind::UpdateNonIndex: {
      const auto row = row_for(st.key);
      if (!row) return;
      const auto r = db_->get_row(s.txn, table, *row);
      if (!r) return;
      db_->update_row(s.txn, table, *row,
                      {to_param(r->cells[kId]), to_param(r->cells[kK]), seal_text(st.text), to_param(r->cells[kPad])});
      return;
    }
    case StmtKind::DeleteInsert: {
      if (const auto row = row_for(st.key)) db_->delete_row(s.txn, table, *row);
      s.moved[{st.table, st.key}] = db_->insert_row(s.txn, table, row_params(st.key, st.value, st.text));
      return;
    }
    case StmtKind::Insert:
      s.moved[{st.table, st.key}] = db_->insert_row(s.txn, table, row_params(st.key, st.value, st.text));
      return;
    case StmtKind::SelectWhere:
      db_->select_where(s.txn, table, kK, OpCode::CmpGt, client_.encrypt_int(st.value));
      return;
  }
}

void ZoneSim::commit_session(Session& s, RunReport& rep) {
  const TxnId txn = s.txn;
  auto moved = std::move(s.moved);
  s = Session{};
  db_->commit(txn);
  for (const auto& [tk, row] : moved) keys_[tk.first][tk.second] = row;
  ++rep.txns_committed;
}

void ZoneSim::abandon(Session& s, RunReport& rep) {
  if (s.txn == 0) return;
  if (!integrity_down_) {
    const auto st = db_->state(s.txn);
    if (st == TxnState::Active || st == TxnState::Preparing) db_->abort(s.txn);
  }
  ++rep.txns_aborted;
  s = Session{};
}

void ZoneSim::maintain(RunReport& rep, bool with_gc) {
  rep.vacuumed += db_->vacuum_all();
  if (with_gc) rep.orphans_collected += db_->orphan_gc();
}

void ZoneSim::handle_crash(RunReport& rep, std::vector<Session>& sessions) {
  if (!privacy_down_ && !integrity_down_) crash_now(fired_target_.value_or(CrashTarget::Both));
  rep.crash_fired = true;
  for (auto& s : sessions) {
    if (s.txn != 0) ++rep.txns_aborted;
    s = Session{};
  }
  auto rr = recover_all();
  rep.orphans_pre_gc = rr.invariant.orphans;
  rep.orphans_collected += db_->orphan_gc();
  rep.orphans_post_gc = check_invariant().orphans;
  rep.recovery = std::move(rr);
}

RunReport ZoneSim::run_workload(std::uint64_t seed, const WorkloadSpec& spec, std::optional<CrashPoint> crash) {
  RunReport rep;
  rep.seed = seed;
  rep.spec = spec;
  load(spec, seed);
  proxy_->set_batch_size(spec.batch_size);
  zone_->store().set_cache_fraction(spec.cache_fraction);
  zone_->store().reset_cache_stats();
  channel_.reset_counters();
  base_ = read_counters();
  banked_ = {};
  if (crash) {
    arm(*crash);
    rep.crash_point = std::string(crash_kind_name(crash->kind)) + "@" + std::string(crash_target_name(crash->target));
  }

  WorkloadGenerator gen(spec, seed);
  std::mt19937_64 sched(seed ^ 0x5eedULL);
  std::vector<Session> sessions(spec.threads_simulated);
  std::uint64_t next_maintenance = spec.maintenance_every;
  std::uint64_t maintenance_runs = 0;
  auto all_idle = [&] {
    return std::all_of(sessions.begin(), sessions.end(), [](const Session& s) { return s.txn == 0; });
  };

  for (;;) {
    try {
      const bool done = rep.statements >= spec.duration_ops;
      const bool draining = done || (spec.maintenance_every != 0 && rep.statements >= next_maintenance);
      if (draining && all_idle()) {
        if (done) break;
        maintain(rep, ++maintenance_runs % 4 == 0);
        next_maintenance += spec.maintenance_every;
        continue;
      }
      Session& s = sessions[sched() % sessions.size()];
      if (s.txn == 0) {
        if (draining) continue;
        s.plan = gen.next_txn();
        s.pc = 0;
        s.txn = db_->begin();
        continue;
      }
      if (armed_ && armed_->kind == CrashKind::RandomByte && rep.statements >= armed_->occurrence) {
        budget_->remaining = armed_->byte_budget;
        budget_->armed = true;
        fired_target_ = CrashTarget::Both;
        armed_.reset();
      }
      const Stmt st = s.plan[s.pc++];
      ++rep.statements;
      try {
        exec_stmt(s, st, rep);
        if (s.pc == s.plan.size()) commit_session(s, rep);
      } catch (const Error& e) {
        if (e.code() == Errc::PrivacyZoneUnavailable) {
          for (auto& other : sessions) abandon(other, rep);
        } else {
          if (e.code() == Errc::WriteConflict || e.code() == Errc::RowNotVisible)
            ++rep.conflicts;
          else
            ++rep.errors;
          abandon(s, rep);
        }
      }
      if (privacy_down_) handle_crash(rep, sessions);
    } catch (const SimulatedCrash&) {
      handle_crash(rep, sessions);
    }
  }

  disarm();
  maintain(rep, true);
  finish_report(rep);
  rep.final_invariant = check_invariant();
  return rep;
}

RunReport ZoneSim::run_script(const std::vector<TxnPlan>& script) {
  RunReport rep;
  if (tables_.empty()) {
    tables_.push_back(db_->create_table("sbtest0", sbtest_schema()));
    keys_.emplace_back();
  }
  for (const auto& plan : script) {
    Session s;
    s.txn = db_->begin();
    s.plan = plan;
    try {
      for (const auto& st : plan) {
        ++rep.statements;
        exec_stmt(s, st, rep);
      }
      commit_session(s, rep);
    } catch (const Error&) {
      ++rep.errors;
      abandon(s, rep);
    }
  }
  finish_report(rep);
  return rep;
}

bool trace_indistinguishability(const std::vector<TxnPlan>& a, const std::vector<TxnPlan>& b,
                                const TopologyConfig& cfg) {
  auto shape = [&](const std::string& text) {
    if (!cfg.db.pad_sensitive) return text.size();
    if (text.size() >= cfg.db.pad_width) fail(Errc::StructureMismatch, "text exceeds the padded width");
    return cfg.db.pad_width;
  };
  if (a.size() != b.size()) fail(Errc::StructureMismatch, "transaction counts differ");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) fail(Errc::StructureMismatch, "statement counts differ");
    for (std::size_t j = 0; j < a[i].size(); ++j) {
      const Stmt& x = a[i][j];
      const Stmt& y = b[i][j];
      if (x.kind != y.kind || x.table != y.table || x.key != y.key || x.span != y.span ||
          x.text.empty() != y.text.empty() || (!x.text.empty() && shape(x.text) != shape(y.text)))
        fail(Errc::StructureMismatch, "statement " + std::to_string(i) + "." + std::to_string(j) + " differs");
    }
  }
  ZoneSim sa(cfg);
  ZoneSim sb(cfg);
  sa.run_script(a);
  sb.run_script(b);
  return sa.trace().events() == sb.trace().events();
}

}  // namespace fidstore
